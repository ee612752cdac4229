#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace tempent {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;
using IndexPair = std::pair<std::size_t, std::size_t>;

/// Row-major complex matrix; the layout matches a rank-2 DenseTensor.
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// Dense complex tensor stored row-major over its shape.
///
/// Legs are positional; every module documents its own leg ordering. The
/// number of stored amplitudes always equals the product of the shape.
class DenseTensor {
 public:
  DenseTensor() : shape_{}, data_(1, cplx{0.0}) {}
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<cplx> data);

  static DenseTensor scalar(cplx value);
  static DenseTensor identity(std::size_t n);
  static DenseTensor from_matrix(const Matrix& m);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t leg) const { return shape_.at(leg); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<const cplx> data() const noexcept { return data_; }
  std::span<cplx> data() noexcept { return data_; }
  std::vector<cplx>& storage() noexcept { return data_; }

  cplx& operator[](std::size_t flat) { return data_[flat]; }
  const cplx& operator[](std::size_t flat) const { return data_[flat]; }
  cplx& at(std::initializer_list<std::size_t> index);
  const cplx& at(std::initializer_list<std::size_t> index) const;

  /// Reinterprets the amplitudes with a new shape of equal total size.
  DenseTensor reshaped(Shape shape) const&;
  DenseTensor reshaped(Shape shape) &&;

  /// Result leg k is input leg order[k].
  DenseTensor permuted(std::span<const std::size_t> order) const;
  DenseTensor permuted(std::initializer_list<std::size_t> order) const;

  DenseTensor conj() const;
  DenseTensor& operator*=(cplx factor);
  DenseTensor& operator+=(const DenseTensor& other);

  double max_abs() const;
  double norm() const;

  /// Views as a (rows x size/rows) row-major matrix.
  ConstMatrixMap as_matrix(std::size_t rows) const;
  MatrixMap as_matrix(std::size_t rows);
  Matrix to_matrix(std::size_t rows) const { return as_matrix(rows); }

 private:
  std::size_t flat_index(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  std::vector<cplx> data_;
};

DenseTensor operator*(cplx factor, DenseTensor t);
DenseTensor operator-(const DenseTensor& a, const DenseTensor& b);

std::size_t shape_volume(const Shape& shape);

/// Contracts leg pairs (leg of a, leg of b). Remaining legs are ordered
/// a-first then b, each in their original order. Throws
/// std::invalid_argument naming the offending pair on a dimension mismatch.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const IndexPair> pairs);
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<IndexPair> pairs);

/// Outer product, legs of a then legs of b.
DenseTensor outer(const DenseTensor& a, const DenseTensor& b);

double max_abs_diff(const DenseTensor& a, const DenseTensor& b);

}  // namespace tempent
