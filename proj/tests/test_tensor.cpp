#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "support.hpp"
#include "tempent/linalg.hpp"
#include "tempent/tensor.hpp"

using namespace tempent;
using testing_support::random_matrix;
using testing_support::random_tensor;

namespace {

DenseTensor pauli_x() { return DenseTensor({2, 2}, {0.0, 1.0, 1.0, 0.0}); }
DenseTensor pauli_z() { return DenseTensor({2, 2}, {1.0, 0.0, 0.0, -1.0}); }

// Reference index loop for a[i,j,k] b[k,l] -> [i,j,l].
DenseTensor naive_contract_last_first(const DenseTensor& a, const DenseTensor& b) {
  const std::size_t I = a.dim(0), J = a.dim(1), K = a.dim(2), L = b.dim(1);
  DenseTensor out({I, J, L});
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j)
      for (std::size_t l = 0; l < L; ++l) {
        cplx s = 0.0;
        for (std::size_t k = 0; k < K; ++k) s += a.at({i, j, k}) * b.at({k, l});
        out.at({i, j, l}) = s;
      }
  return out;
}

double isometry_defect(const DenseTensor& iso, std::size_t rows) {
  const Matrix m = iso.to_matrix(rows);
  const Matrix g = m.adjoint() * m;
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("contract: identities and traces") {
  const DenseTensor id = DenseTensor::identity(2);
  CHECK(max_abs_diff(contract(id, id, {{1, 0}}), id) == 0.0);

  const DenseTensor tr = contract(pauli_x(), pauli_x(), {{0, 1}, {1, 0}});
  CHECK(tr.rank() == 0);
  CHECK(std::abs(tr[0] - cplx(2.0)) < 1e-15);
}

TEST_CASE("contract: matches a nested-loop reference") {
  const DenseTensor a = random_tensor({3, 4, 5}, 1);
  const DenseTensor b = random_tensor({5, 4}, 2);
  CHECK(max_abs_diff(contract(a, b, {{2, 0}}), naive_contract_last_first(a, b)) < 1e-12);
}

TEST_CASE("contract: leg ordering keeps a's free legs before b's") {
  const DenseTensor a = random_tensor({2, 3, 4}, 3);
  const DenseTensor b = random_tensor({5, 3}, 4);
  const DenseTensor c = contract(a, b, {{1, 1}});
  REQUIRE(c.shape() == Shape{2, 4, 5});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t l = 0; l < 5; ++l) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += a.at({i, j, k}) * b.at({l, j});
        CHECK(std::abs(c.at({i, k, l}) - s) < 1e-12);
      }
}

TEST_CASE("contract: dimension mismatch names the pair") {
  const DenseTensor a = random_tensor({2, 3}, 5);
  const DenseTensor b = random_tensor({4, 2}, 6);
  try {
    (void)contract(a, b, {{1, 0}});
    FAIL("expected a mismatch");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("(1, 0)") != std::string::npos);
  }
}

TEST_CASE("contract is bilinear") {
  const DenseTensor a = random_tensor({3, 4}, 7);
  const DenseTensor b = random_tensor({4, 2}, 8);
  const cplx alpha(0.3, -1.7);
  const DenseTensor lhs = contract(alpha * a, b, {{1, 0}});
  const DenseTensor rhs = alpha * contract(a, b, {{1, 0}});
  CHECK(max_abs_diff(lhs, rhs) < 1e-12);

  const DenseTensor a2 = random_tensor({3, 4}, 9);
  DenseTensor sum = a;
  sum += a2;
  DenseTensor split = contract(a, b, {{1, 0}});
  split += contract(a2, b, {{1, 0}});
  CHECK(max_abs_diff(contract(sum, b, {{1, 0}}), split) < 1e-12);
}

TEST_CASE("contract commutes with consistent permutations") {
  const DenseTensor a = random_tensor({2, 3, 4}, 10);
  const DenseTensor b = random_tensor({4, 3, 5}, 11);
  const DenseTensor direct = contract(a, b, {{1, 1}, {2, 0}});  // [2, 5]
  const DenseTensor ap = a.permuted({2, 0, 1});                 // [4, 2, 3]
  const DenseTensor bp = b.permuted({2, 1, 0});                 // [5, 3, 4]
  const DenseTensor viaperm = contract(bp, ap, {{1, 2}, {2, 0}});  // [5, 2]
  CHECK(max_abs_diff(direct, viaperm.permuted({1, 0})) < 1e-12);
}

TEST_CASE("reshape and permutation preserve amplitudes") {
  const DenseTensor a = random_tensor({2, 3, 4}, 12);
  const DenseTensor r = a.reshaped({6, 4});
  CHECK(r.size() == a.size());
  CHECK(max_abs_diff(r.reshaped({2, 3, 4}), a) == 0.0);

  const DenseTensor p = a.permuted({2, 0, 1});
  CHECK(p.shape() == Shape{4, 2, 3});
  CHECK(p.at({3, 1, 2}) == a.at({1, 2, 3}));
  auto key = [](cplx z) { return std::pair{z.real(), z.imag()}; };
  std::vector<std::pair<double, double>> x, y;
  for (auto v : a.data()) x.push_back(key(v));
  for (auto v : p.data()) y.push_back(key(v));
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  CHECK(x == y);
  CHECK_THROWS_AS((void)a.reshaped({5, 5}), std::invalid_argument);
}

TEST_CASE("truncated_svd: small exact cases") {
  DenseTensor rank1 = outer(random_tensor({6}, 13), random_tensor({5}, 14));
  SvdResult r = truncated_svd(rank1, {0}, 8);
  CHECK(r.singular_values.size() == 1);
  CHECK(r.discarded_weight < 1e-14);

  SvdResult id = truncated_svd(DenseTensor::identity(2), {0}, 2);
  REQUIRE(id.singular_values.size() == 2);
  CHECK(id.singular_values[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(id.singular_values[1] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(id.discarded_weight == 0.0);

  CHECK_THROWS_AS((void)truncated_svd(rank1, {0}, 0), std::invalid_argument);
}

TEST_CASE("truncated_svd: rank-4 truncation error equals the dropped tail") {
  const DenseTensor x = random_tensor({16, 16}, 15);
  const SvdResult r = truncated_svd(x, {0}, 4, 0.0);
  REQUIRE(r.singular_values.size() == 4);

  Eigen::JacobiSVD<Eigen::MatrixXcd> ref(Eigen::MatrixXcd(x.to_matrix(16)));
  const auto& s = ref.singularValues();
  double tail = 0.0;
  for (Eigen::Index i = 4; i < s.size(); ++i) tail += s(i) * s(i);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(r.singular_values[i] - s(i)) < 1e-10);

  Matrix sv = r.right_isometry.to_matrix(4);
  for (int i = 0; i < 4; ++i) sv.row(i) *= r.singular_values[i];
  const Matrix approx = r.left_isometry.to_matrix(16) * sv;
  const double err = (x.to_matrix(16) - approx).squaredNorm();
  CHECK(std::abs(err - tail) < 1e-10);
  CHECK(std::abs(r.discarded_weight - tail / s.squaredNorm()) < 1e-12);
}

TEST_CASE("truncated_svd: full rank round trip, ordering and isometries") {
  const DenseTensor x = random_tensor({3, 4, 5}, 16);
  const SvdResult r = truncated_svd(x, {0, 2}, 100, 0.0);
  REQUIRE(r.singular_values.size() == 4);
  CHECK(std::is_sorted(r.singular_values.rbegin(), r.singular_values.rend()));
  for (double s : r.singular_values) CHECK(s >= 0.0);
  CHECK(isometry_defect(r.left_isometry, 15) < 1e-10);
  CHECK(isometry_defect(r.right_isometry.permuted({1, 0}), 4) < 1e-10);

  DenseTensor us = r.left_isometry;  // [3, 5, k]
  for (std::size_t i = 0; i < us.size(); ++i) us[i] *= r.singular_values[i % 4];
  const DenseTensor back = contract(us, r.right_isometry, {{2, 0}});  // [3, 5, 4]
  CHECK(max_abs_diff(back.permuted({0, 2, 1}), x) < 1e-10);
}

TEST_CASE("truncated_svd: relative cutoff drops small values") {
  DenseTensor d({3, 3});
  d.at({0, 0}) = 1.0;
  d.at({1, 1}) = 1e-3;
  d.at({2, 2}) = 1e-14;
  CHECK(truncated_svd(d, {0}, 3).singular_values.size() == 2);
  CHECK(truncated_svd(d, {0}, 3, 1e-2).singular_values.size() == 1);
}

TEST_CASE("svd_truncate: the randomized path is deterministic and accurate on low-rank input") {
  // A rank-20 matrix large enough to take the sketching route.
  const Matrix x = random_matrix(300, 20, 17) * random_matrix(20, 280, 18);
  const TruncationPolicy policy{24, 1e-12, true, true};
  const MatrixSvd a = svd_truncate(x, policy);
  const MatrixSvd b = svd_truncate(x, policy);
  REQUIRE(a.s.size() == 20);
  CHECK(a.s == b.s);
  Matrix sv = a.vh;
  for (std::size_t i = 0; i < a.s.size(); ++i) sv.row(static_cast<Eigen::Index>(i)) *= a.s[i];
  CHECK((x - a.u * sv).cwiseAbs().maxCoeff() < 1e-9 * x.cwiseAbs().maxCoeff());
  const Matrix g = a.u.adjoint() * a.u;
  CHECK((g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("hermitian_eigenvalues") {
  const auto id = hermitian_eigenvalues(DenseTensor::identity(2));
  CHECK(id == std::vector<double>{1.0, 1.0});
  const auto z = hermitian_eigenvalues(pauli_z());
  REQUIRE(z.size() == 2);
  CHECK(z[0] == doctest::Approx(1.0));
  CHECK(z[1] == doctest::Approx(-1.0));

  const Matrix r = random_matrix(8, 8, 19);
  const Matrix h = r + r.adjoint();
  const auto ev = hermitian_eigenvalues(h);
  CHECK(std::is_sorted(ev.rbegin(), ev.rend()));
  double sum = 0.0;
  for (double e : ev) sum += e;
  CHECK(std::abs(sum - h.trace().real()) < 1e-10);

  CHECK_THROWS_AS((void)hermitian_eigenvalues(r), std::invalid_argument);
}

TEST_CASE("thin QR and LQ factorizations") {
  const Matrix x = random_matrix(7, 4, 20);
  Matrix q, r;
  thin_qr(x, q, r);
  CHECK((q * r - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((q.adjoint() * q - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);

  const Matrix y = random_matrix(3, 9, 21);
  Matrix l, p;
  thin_lq(y, l, p);
  CHECK((l * p - y).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((p * p.adjoint() - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log_add handles -inf and large gaps") {
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(log_add(ninf, 1.5) == 1.5);
  CHECK(log_add(2.0, ninf) == 2.0);
  CHECK(log_add(std::log(2.0), std::log(3.0)) == doctest::Approx(std::log(5.0)).epsilon(1e-15));
  CHECK(log_add(1000.0, 0.0) == doctest::Approx(1000.0));
}
