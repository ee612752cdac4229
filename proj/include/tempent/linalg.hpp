#pragma once

#include <cstddef>
#include <vector>

#include "tempent/tensor.hpp"

namespace tempent {

inline constexpr double kDefaultRelCutoff = 1e-12;

struct SvdResult {
  DenseTensor left_isometry;   // row legs..., k
  std::vector<double> singular_values;
  DenseTensor right_isometry;  // k, column legs...
  double discarded_weight = 0.0;
};

/// Matrix-level truncated SVD. `discarded_weight` here is absolute
/// (||X||_F^2 minus the kept squared singular values), not normalized.
struct MatrixSvd {
  Matrix u;
  std::vector<double> s;
  Matrix vh;
  double discarded_weight = 0.0;
  double total_weight = 0.0;
};

struct TruncationPolicy {
  std::size_t max_rank = 1;
  double rel_cutoff = kDefaultRelCutoff;
  // Permit a seeded randomized range finder when the kept rank is small
  // compared to the matrix. Results are deterministic for a given input.
  bool allow_randomized = false;
  // Which factor must be exactly isometric on the randomized path (u if
  // true, vh otherwise). The exact path returns both isometric.
  bool left_isometric = true;
};

MatrixSvd svd_truncate(const Matrix& x, const TruncationPolicy& policy);

/// Splits `t` into (row_legs | remaining legs, in original order) and keeps
/// at most `max_rank` values, dropping any below rel_cutoff * s_max.
/// discarded_weight is normalized by the total squared norm.
SvdResult truncated_svd(const DenseTensor& t, std::span<const std::size_t> row_legs,
                        std::size_t max_rank, double rel_cutoff = kDefaultRelCutoff);
SvdResult truncated_svd(const DenseTensor& t, std::initializer_list<std::size_t> row_legs,
                        std::size_t max_rank, double rel_cutoff = kDefaultRelCutoff);

/// Eigenvalues of a square Hermitian matrix (rank-2 tensor), descending.
/// Rejects inputs whose anti-Hermitian part exceeds `tol` in max norm.
std::vector<double> hermitian_eigenvalues(const DenseTensor& m, double tol = 1e-10);
std::vector<double> hermitian_eigenvalues(const Matrix& m, double tol = 1e-10);

/// Thin QR: x = q r with q having orthonormal columns.
void thin_qr(const Matrix& x, Matrix& q, Matrix& r);
/// Thin LQ: x = l q with q having orthonormal rows.
void thin_lq(const Matrix& x, Matrix& l, Matrix& q);

/// log(a + b) given log a and log b, safe for -inf.
double log_add(double la, double lb);

}  // namespace tempent
