#include "tempent/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

namespace tempent {

namespace {

using ColMatrix = Eigen::MatrixXcd;

constexpr Eigen::Index kFastThreshold = 192;
constexpr Eigen::Index kOversample = 16;
constexpr int kPowerIterations = 0;

ColMatrix orthonormal_columns(const ColMatrix& y) {
  Eigen::HouseholderQR<ColMatrix> qr(y);
  return qr.householderQ() * ColMatrix::Identity(y.rows(), y.cols());
}

// Randomized range finder (seed derived from the shape, so repeated calls on
// the same input agree) followed by an exact SVD inside the sketched range.
// Returns u (isometric), s, and sv = diag(s) vh.
void randomized_svd(const ColMatrix& x, Eigen::Index sketch, int power_iters, ColMatrix& u,
                    Eigen::VectorXd& s, ColMatrix& sv) {
  const Eigen::Index n = x.cols();
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(x.rows()) << 20) ^
                      static_cast<std::uint64_t>(n));
  std::normal_distribution<double> gauss;
  ColMatrix omega(n, sketch);
  for (Eigen::Index j = 0; j < sketch; ++j)
    for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = cplx(gauss(rng), gauss(rng));
  ColMatrix q = orthonormal_columns(x * omega);
  for (int it = 0; it < power_iters; ++it) {
    q = orthonormal_columns(x * orthonormal_columns(x.adjoint() * q));
  }
  const ColMatrix b = q.adjoint() * x;  // sketch x n
  // b = r^dagger q_b^dagger; the SVD of the small triangle r^dagger gives
  // the singular values and left vectors of b.
  Eigen::HouseholderQR<ColMatrix> qr{ColMatrix(b.adjoint())};
  const ColMatrix l = qr.matrixQR().topRows(sketch).template triangularView<Eigen::Upper>().toDenseMatrix().adjoint();
  Eigen::BDCSVD<ColMatrix> svd(l, Eigen::ComputeFullU);
  u = q * svd.matrixU();
  s = svd.singularValues();
  sv = svd.matrixU().adjoint() * b;
}

}  // namespace

double log_add(double la, double lb) {
  if (la == -std::numeric_limits<double>::infinity()) return lb;
  if (lb == -std::numeric_limits<double>::infinity()) return la;
  const double hi = std::max(la, lb);
  return hi + std::log1p(std::exp(std::min(la, lb) - hi));
}

MatrixSvd svd_truncate(const Matrix& x_in, const TruncationPolicy& policy) {
  if (policy.max_rank < 1) throw std::invalid_argument("svd_truncate: max_rank must be >= 1");
  if (policy.rel_cutoff < 0) throw std::invalid_argument("svd_truncate: negative rel_cutoff");
  const ColMatrix x = x_in;
  const Eigen::Index m = x.rows(), n = x.cols();
  const Eigen::Index full = std::min(m, n);
  const auto cap = static_cast<Eigen::Index>(policy.max_rank);

  MatrixSvd out;
  out.total_weight = x.squaredNorm();

  ColMatrix u, v;
  Eigen::VectorXd s;
  const double rel_cutoff = policy.rel_cutoff;
  const Eigen::Index sketch = cap + kOversample;
  if (policy.allow_randomized && full >= kFastThreshold && 4 * sketch <= 3 * full) {
    // Work on the side that must come out exactly isometric.
    const bool transpose = !policy.left_isometric;
    const ColMatrix xt = transpose ? ColMatrix(x.adjoint()) : x;
    ColMatrix sv;
    randomized_svd(xt, sketch, kPowerIterations, u, s, sv);
    Eigen::Index keep = 0;
    const double floor = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
    while (keep < s.size() && keep < cap && s(keep) > 0.0 && s(keep) >= floor) ++keep;
    keep = std::max<Eigen::Index>(keep, 1);
    double kept = 0.0;
    for (Eigen::Index i = 0; i < keep; ++i) kept += s(i) * s(i);
    out.discarded_weight = std::max(0.0, out.total_weight - kept);
    out.s.assign(s.data(), s.data() + keep);
    ColMatrix other = sv.topRows(keep);
    for (Eigen::Index i = 0; i < keep; ++i) other.row(i) /= (s(i) > 0 ? s(i) : 1.0);
    if (transpose) {
      out.u = other.adjoint();
      out.vh = u.leftCols(keep).adjoint();
    } else {
      out.u = u.leftCols(keep);
      out.vh = other;
    }
    return out;
  }
  {
    Eigen::BDCSVD<ColMatrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  }

  Eigen::Index keep = 0;
  const double floor = s.size() > 0 ? rel_cutoff * s(0) : 0.0;
  while (keep < s.size() && keep < cap && s(keep) > 0.0 && s(keep) >= floor) ++keep;
  keep = std::max<Eigen::Index>(keep, 1);

  double dropped = 0.0;
  for (Eigen::Index i = keep; i < s.size(); ++i) dropped += s(i) * s(i);
  out.discarded_weight = dropped;

  out.u = u.leftCols(keep);
  out.s.assign(s.data(), s.data() + keep);
  out.vh = v.leftCols(keep).adjoint();
  return out;
}

SvdResult truncated_svd(const DenseTensor& t, std::initializer_list<std::size_t> row_legs,
                        std::size_t max_rank, double rel_cutoff) {
  std::vector<std::size_t> legs(row_legs);
  return truncated_svd(t, std::span<const std::size_t>(legs), max_rank, rel_cutoff);
}

SvdResult truncated_svd(const DenseTensor& t, std::span<const std::size_t> row_legs,
                        std::size_t max_rank, double rel_cutoff) {
  if (max_rank < 1) throw std::invalid_argument("truncated_svd: max_rank must be >= 1");
  std::vector<bool> is_row(t.rank(), false);
  for (auto leg : row_legs) {
    if (leg >= t.rank() || is_row[leg]) throw std::invalid_argument("truncated_svd: bad split");
    is_row[leg] = true;
  }
  if (row_legs.empty() || row_legs.size() == t.rank()) {
    throw std::invalid_argument("truncated_svd: both sides of the split must be non-empty");
  }
  std::vector<std::size_t> order(row_legs.begin(), row_legs.end());
  Shape left_shape, right_shape;
  std::size_t rows = 1;
  for (auto leg : row_legs) {
    left_shape.push_back(t.dim(leg));
    rows *= t.dim(leg);
  }
  for (std::size_t leg = 0; leg < t.rank(); ++leg) {
    if (!is_row[leg]) {
      order.push_back(leg);
      right_shape.push_back(t.dim(leg));
    }
  }
  const DenseTensor p = t.permuted(order);
  MatrixSvd svd = svd_truncate(p.to_matrix(rows), {max_rank, rel_cutoff, false});

  SvdResult r;
  const std::size_t k = svd.s.size();
  left_shape.push_back(k);
  right_shape.insert(right_shape.begin(), k);
  r.left_isometry = DenseTensor::from_matrix(svd.u).reshaped(left_shape);
  r.right_isometry = DenseTensor::from_matrix(svd.vh).reshaped(right_shape);
  r.singular_values = std::move(svd.s);
  r.discarded_weight = svd.total_weight > 0 ? svd.discarded_weight / svd.total_weight : 0.0;
  return r;
}

std::vector<double> hermitian_eigenvalues(const DenseTensor& m, double tol) {
  if (m.rank() != 2 || m.dim(0) != m.dim(1)) {
    throw std::invalid_argument("hermitian_eigenvalues: matrix must be square");
  }
  return hermitian_eigenvalues(m.to_matrix(m.dim(0)), tol);
}

std::vector<double> hermitian_eigenvalues(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("hermitian_eigenvalues: matrix must be square");
  const double skew = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (m.size() > 0 && skew > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("hermitian_eigenvalues: input is not Hermitian");
  }
  const ColMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ColMatrix> es(h, Eigen::EigenvaluesOnly);
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + h.rows());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

void thin_qr(const Matrix& x, Matrix& q, Matrix& r) {
  const Eigen::Index k = std::min(x.rows(), x.cols());
  Eigen::HouseholderQR<ColMatrix> qr{ColMatrix(x)};
  q = qr.householderQ() * ColMatrix::Identity(x.rows(), k);
  r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
}

void thin_lq(const Matrix& x, Matrix& l, Matrix& q) {
  Matrix qt, rt;
  thin_qr(x.adjoint(), qt, rt);
  l = rt.adjoint();
  q = qt.adjoint();
}

}  // namespace tempent
