#include "tempent/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tempent {

std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

DenseTensor::DenseTensor(Shape shape)
    : shape_(std::move(shape)), data_(shape_volume(shape_), cplx{0.0}) {}

DenseTensor::DenseTensor(Shape shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_volume(shape_)) {
    throw std::invalid_argument("DenseTensor: data size does not match shape");
  }
}

DenseTensor DenseTensor::scalar(cplx value) { return DenseTensor({}, {value}); }

DenseTensor DenseTensor::identity(std::size_t n) {
  DenseTensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
  return t;
}

DenseTensor DenseTensor::from_matrix(const Matrix& m) {
  DenseTensor t({static_cast<std::size_t>(m.rows()),
                 static_cast<std::size_t>(m.cols())});
  std::copy(m.data(), m.data() + m.size(), t.data_.begin());
  return t;
}

std::size_t DenseTensor::flat_index(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw std::out_of_range("DenseTensor::at: wrong number of indices");
  }
  std::size_t flat = 0;
  std::size_t leg = 0;
  for (auto i : index) {
    if (i >= shape_[leg]) throw std::out_of_range("DenseTensor::at: index out of range");
    flat = flat * shape_[leg] + i;
    ++leg;
  }
  return flat;
}

cplx& DenseTensor::at(std::initializer_list<std::size_t> index) {
  return data_[flat_index(index)];
}

const cplx& DenseTensor::at(std::initializer_list<std::size_t> index) const {
  return data_[flat_index(index)];
}

DenseTensor DenseTensor::reshaped(Shape shape) const& {
  DenseTensor copy = *this;
  return std::move(copy).reshaped(std::move(shape));
}

DenseTensor DenseTensor::reshaped(Shape shape) && {
  if (shape_volume(shape) != data_.size()) {
    throw std::invalid_argument("DenseTensor::reshaped: size mismatch");
  }
  shape_ = std::move(shape);
  return std::move(*this);
}

DenseTensor DenseTensor::permuted(std::initializer_list<std::size_t> order) const {
  std::vector<std::size_t> o(order);
  return permuted(std::span<const std::size_t>(o));
}

DenseTensor DenseTensor::permuted(std::span<const std::size_t> order) const {
  const std::size_t r = rank();
  if (order.size() != r) throw std::invalid_argument("permuted: wrong order length");
  std::vector<bool> seen(r, false);
  for (auto o : order) {
    if (o >= r || seen[o]) throw std::invalid_argument("permuted: not a permutation");
    seen[o] = true;
  }
  bool trivial = true;
  for (std::size_t k = 0; k < r; ++k) trivial = trivial && order[k] == k;
  if (trivial) return *this;

  std::vector<std::size_t> in_stride(r, 1);
  for (std::size_t k = r; k-- > 1;) in_stride[k - 1] = in_stride[k] * shape_[k];
  Shape out_shape(r);
  std::vector<std::size_t> stride(r);
  for (std::size_t k = 0; k < r; ++k) {
    out_shape[k] = shape_[order[k]];
    stride[k] = in_stride[order[k]];
  }
  DenseTensor out(out_shape);
  if (data_.empty()) return out;

  // Innermost output leg is copied in a tight loop; the rest use an odometer.
  const std::size_t inner = out_shape[r - 1];
  const std::size_t inner_stride = stride[r - 1];
  std::vector<std::size_t> counter(r, 0);
  std::size_t offset = 0;
  cplx* dst = out.data_.data();
  const cplx* src = data_.data();
  const std::size_t blocks = out.size() / inner;
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < inner; ++i) dst[i] = src[offset + i * inner_stride];
    dst += inner;
    for (std::size_t k = r - 1; k-- > 0;) {
      if (++counter[k] < out_shape[k]) {
        offset += stride[k];
        break;
      }
      offset -= stride[k] * (out_shape[k] - 1);
      counter[k] = 0;
    }
  }
  return out;
}

DenseTensor DenseTensor::conj() const {
  DenseTensor out = *this;
  for (auto& v : out.data_) v = std::conj(v);
  return out;
}

DenseTensor& DenseTensor::operator*=(cplx factor) {
  for (auto& v : data_) v *= factor;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (other.shape_ != shape_) throw std::invalid_argument("operator+=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

double DenseTensor::max_abs() const {
  double m = 0.0;
  for (const auto& v : data_) m = std::max(m, std::abs(v));
  return m;
}

double DenseTensor::norm() const {
  double s = 0.0;
  for (const auto& v : data_) s += std::norm(v);
  return std::sqrt(s);
}

ConstMatrixMap DenseTensor::as_matrix(std::size_t rows) const {
  if (rows == 0 || data_.size() % rows != 0) {
    throw std::invalid_argument("as_matrix: rows do not divide size");
  }
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows),
                        static_cast<Eigen::Index>(data_.size() / rows));
}

MatrixMap DenseTensor::as_matrix(std::size_t rows) {
  if (rows == 0 || data_.size() % rows != 0) {
    throw std::invalid_argument("as_matrix: rows do not divide size");
  }
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(data_.size() / rows));
}

DenseTensor operator*(cplx factor, DenseTensor t) {
  t *= factor;
  return t;
}

DenseTensor operator-(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("operator-: shape mismatch");
  DenseTensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::initializer_list<IndexPair> pairs) {
  std::vector<IndexPair> p(pairs);
  return contract(a, b, std::span<const IndexPair>(p));
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     std::span<const IndexPair> pairs) {
  std::vector<bool> used_a(a.rank(), false), used_b(b.rank(), false);
  std::size_t k = 1;
  for (const auto& [ia, ib] : pairs) {
    if (ia >= a.rank() || ib >= b.rank() || used_a[ia] || used_b[ib]) {
      std::ostringstream msg;
      msg << "contract: invalid leg pair (" << ia << ", " << ib << ")";
      throw std::invalid_argument(msg.str());
    }
    if (a.dim(ia) != b.dim(ib)) {
      std::ostringstream msg;
      msg << "contract: dimension mismatch on pair (" << ia << ", " << ib
          << "): " << a.dim(ia) << " vs " << b.dim(ib);
      throw std::invalid_argument(msg.str());
    }
    used_a[ia] = used_b[ib] = true;
    k *= a.dim(ia);
  }

  std::vector<std::size_t> order_a, order_b;
  Shape out_shape;
  std::size_t m = 1, n = 1;
  for (std::size_t i = 0; i < a.rank(); ++i) {
    if (!used_a[i]) {
      order_a.push_back(i);
      out_shape.push_back(a.dim(i));
      m *= a.dim(i);
    }
  }
  for (const auto& pr : pairs) order_a.push_back(pr.first);
  for (const auto& pr : pairs) order_b.push_back(pr.second);
  for (std::size_t i = 0; i < b.rank(); ++i) {
    if (!used_b[i]) {
      order_b.push_back(i);
      out_shape.push_back(b.dim(i));
      n *= b.dim(i);
    }
  }

  const DenseTensor pa = a.permuted(order_a);
  const DenseTensor pb = b.permuted(order_b);
  DenseTensor out(out_shape);
  if (m == 0 || n == 0) return out;
  if (k == 0) return out;
  ConstMatrixMap ma(pa.data().data(), static_cast<Eigen::Index>(m),
                    static_cast<Eigen::Index>(k));
  ConstMatrixMap mb(pb.data().data(), static_cast<Eigen::Index>(k),
                    static_cast<Eigen::Index>(n));
  MatrixMap mo(out.data().data(), static_cast<Eigen::Index>(m),
               static_cast<Eigen::Index>(n));
  mo.noalias() = ma * mb;
  return out;
}

DenseTensor outer(const DenseTensor& a, const DenseTensor& b) {
  return contract(a, b, std::span<const IndexPair>{});
}

double max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape()) throw std::invalid_argument("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace tempent
