#include <doctest.h>

#include <cmath>
#include <random>

#include "oracle/dense_oracle.hpp"
#include "tempent/entropy.hpp"

using namespace tempent;

namespace {

constexpr std::size_t kExact = 4096;

// rho_L proportional to a product of one-step vectors `site` (folded, dim 4).
TemporalMps synthetic(const DenseTensor& site, std::size_t n) {
  TemporalMps l;
  l.state = product_mps(site, n);
  right_canonicalize(l.state);
  l.bond_cap = 1;
  return l;
}

TemporalMps flat(std::size_t n) { return synthetic(identity_cap(), n); }
TemporalMps rank_one(std::size_t n) { return synthetic(DenseTensor({4}, {3.0, 0.0, 0.0, 0.0}), n); }

std::vector<bool> block_mask(std::size_t n, std::size_t from, std::size_t to) {
  std::vector<bool> m(n, false);
  for (std::size_t i = from; i < to; ++i) m[i] = true;
  return m;
}

double oracle_s2(const oracle::Mat& rho, const std::vector<bool>& keep) {
  return oracle::renyi(oracle::partial_trace(rho, keep), 2);
}

}  // namespace

TEST_CASE("renyi2: one step against a dense computation") {
  const IsingParams p{1.0, 0.0, 0.0, 0.1};
  const TemporalMps l = contract_influence(p, 1, kExact);
  const oracle::Mat rho = oracle::influence_density_matrix(p.J, p.h, p.g, p.dt, 1);
  CHECK(std::abs(renyi2(l) - oracle::renyi(rho, 2)) < 1e-12);
}

TEST_CASE("synthetic extremes: rank one and flat spectra") {
  for (std::size_t n = 1; n <= 4; ++n) {
    const TemporalMps one = rank_one(n);
    const TemporalMps fl = flat(n);
    const double log_n = n * std::log(2.0);  // rho is the identity on 2^n states
    CHECK(std::abs(renyi2(one)) < 1e-12);
    CHECK(std::abs(renyi2(fl) - log_n) < 1e-12);
    for (int k = 2; k <= 6; ++k) {
      CHECK(std::abs(renyi_n(one, k).value) < 1e-12);
      CHECK(std::abs(renyi_n(fl, k).value - log_n) < 1e-10);
    }
    for (int a = 2; a <= 6; ++a)
      for (int b = 1; b < a; ++b) {
        CHECK(std::abs(delta_nm(one, a, b).value) < 1e-12);
        CHECK(std::abs(delta_nm(fl, a, b).value - (double(a) / b - 1) * log_n) < 1e-10);
      }
    for (int k = 2; k <= 3; ++k) CHECK(std::abs(forward_backward_renyi(one, k).value) < 1e-12);
  }
  // Sixteen equal eigenvalues.
  for (int k = 2; k <= 6; ++k) CHECK(renyi_n(flat(4), k).value == doctest::Approx(std::log(16.0)).epsilon(1e-12));
}

TEST_CASE("all entropy quantities match the dense oracle") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int trial = 0; trial < 5; ++trial) {
    const IsingParams p{1.0, u(rng), u(rng), 0.05 + 0.2 * std::abs(u(rng))};
    const std::size_t n = 6;
    const TemporalMps l = contract_influence(p, n, kExact);
    const oracle::Mat rho = oracle::influence_density_matrix(p.J, p.h, p.g, p.dt, n);
    const auto ev = oracle::eigenvalues(rho);

    CHECK(std::abs(renyi2(l) - oracle::renyi(rho, 2)) < 1e-8);
    const MomentSeries moments = log_moments(l, 6);
    CHECK_FALSE(moments.flagged);
    for (int k = 2; k <= 6; ++k) {
      CHECK(std::abs(renyi_n(l, k).value - oracle::renyi(rho, k)) < 1e-8);
      CHECK(std::abs(moments.log_moments[k - 1] - oracle::log_moment(ev, k)) < 1e-8);
    }
    for (int a = 2; a <= 6; ++a)
      for (int b = 1; b < a; ++b) {
        const double ref = -(oracle::log_moment(ev, a) - double(a) / b * oracle::log_moment(ev, b));
        CHECK(std::abs(delta_nm(l, a, b).value - ref) < 1e-8);
      }
    for (std::size_t cut = 1; cut < n; ++cut) {
      const double ref = oracle_s2(rho, block_mask(n, 0, cut)) + oracle_s2(rho, block_mask(n, cut, n)) -
                         oracle::renyi(rho, 2);
      CHECK(std::abs(mutual_info_bipartition(l, cut).value - ref) < 1e-8);
    }
    for (std::size_t len = 1; len <= 2; ++len)
      for (std::size_t sep = 0; 2 * len + sep <= n; ++sep) {
        const double ref = oracle_s2(rho, block_mask(n, 0, len)) +
                           oracle_s2(rho, block_mask(n, len + sep, 2 * len + sep)) -
                           oracle::renyi(oracle::partial_trace(rho, [&] {
                             auto m = block_mask(n, 0, len);
                             for (std::size_t i = len + sep; i < 2 * len + sep; ++i) m[i] = true;
                             return m;
                           }()), 2);
        const MutualInfoSample s = mutual_info_disjoint(l, len, sep);
        CHECK(std::abs(s.value - ref) < 1e-8);
        CHECK(s.t_l == doctest::Approx(len * p.dt));
        CHECK(s.delta_t == doctest::Approx(sep * p.dt));
      }
  }
}

TEST_CASE("n = 3 on the chaotic point against the oracle") {
  const IsingParams p{1.0, 1.0, 0.9, 0.1};
  const TemporalMps l = contract_influence(p, 5, kExact);
  const auto ev = oracle::eigenvalues(oracle::influence_density_matrix(p.J, p.h, p.g, p.dt, 5));
  CHECK(std::abs(log_moments(l, 3).log_moments[2] - oracle::log_moment(ev, 3)) < 1e-8);
}

TEST_CASE("renyi_n at n = 2 agrees with renyi2") {
  const TemporalMps l = contract_influence({1.0, 1.0, 0.9, 0.1}, 10, 32);
  CHECK(std::abs(renyi_n(l, 2).value - renyi2(l)) < 1e-8);
}

TEST_CASE("Delta_{n,1} = (n - 1) S_n and monotonicity in n") {
  const TemporalMps l = contract_influence({1.0, 0.5, 0.9, 0.1}, 8, 64);
  const MomentSeries s = log_moments(l, 6);
  double previous = renyi2(l);
  for (int n = 2; n <= 6; ++n) {
    const double sn = renyi_from_moments(s, n);
    CHECK(std::abs(delta_from_moments(s, n, 1) - (n - 1) * sn) < 1e-10);
    CHECK(sn >= -1e-10);
    CHECK(sn <= previous + 1e-8);
    previous = sn;
  }
}

TEST_CASE("forward-backward entropies from the squared spectrum") {
  const IsingParams p{1.0, 1.0, 0.9, 0.1};
  const TemporalMps l = contract_influence(p, 4, kExact);
  const auto ev = oracle::eigenvalues(oracle::influence_density_matrix(p.J, p.h, p.g, p.dt, 4));
  // Weights lambda_i^2 / sum lambda^2.
  std::vector<double> w;
  double norm = 0.0;
  for (double x : ev) norm += x * x;
  for (double x : ev) w.push_back(x * x / norm);
  for (int n = 2; n <= 3; ++n) {
    const double ref = oracle::log_moment(w, n) / (1.0 - n);
    CHECK(std::abs(forward_backward_renyi(l, n).value - ref) < 1e-8);
    CHECK(std::abs((n - 1) * forward_backward_renyi(l, n).value - delta_nm(l, 2 * n, 2).value) < 1e-10);
  }
  CHECK(std::abs(forward_backward_renyi(l, 2).value - delta_nm(l, 4, 2).value) < 1e-12);
}

TEST_CASE("bipartition I2 is symmetric under t -> T - t and non-negative") {
  const TemporalMps l = contract_influence({1.0, 1.0, 0.9, 0.1}, 14, 64);
  for (std::size_t cut = 1; cut < 14; ++cut) {
    const double a = mutual_info_bipartition(l, cut).value;
    CHECK(std::abs(a - mutual_info_bipartition(l, 14 - cut).value) < 1e-10);
    CHECK(a >= -1e-8);
  }
  const Measured best = max_mutual_info(l);
  CHECK(best.value >= mutual_info_bipartition(l, 7).value);
  CHECK_THROWS_AS(mutual_info_bipartition(l, 0), std::invalid_argument);
  CHECK_THROWS_AS(mutual_info_bipartition(l, 14), std::invalid_argument);
}

TEST_CASE("partial-trace identity: S2 of a prefix equals S2 at the shorter time") {
  const IsingParams p{1.0, 0.5, 0.9, 0.1};
  const TemporalMps l = contract_influence(p, 12, 128);
  for (std::size_t k = 1; k <= 12; ++k) {
    CHECK(std::abs(subset_renyi2(l, block_mask(12, 0, k)) - l.renyi2_history[k - 1]) < 1e-8);
    CHECK(std::abs(renyi2(reduced_trace_prefix(l, k)) - l.renyi2_history[k - 1]) < 1e-8);
  }
}

TEST_CASE("disjoint-block I2: translation invariance, touching limit, decay") {
  const IsingParams p{1.0, 1.0, 0.9, 0.1};
  const TemporalMps l = contract_influence(p, 12, 128);
  for (std::size_t sep = 0; sep <= 4; ++sep) {
    const double at0 = mutual_info_disjoint(l, 2, sep, 0).value;
    CHECK(at0 >= -1e-8);
    for (std::size_t off = 1; off + 4 + sep <= 12; ++off) {
      CHECK(std::abs(mutual_info_disjoint(l, 2, sep, off).value - at0) < 1e-8);
    }
  }
  CHECK(std::abs(mutual_info_disjoint(l, 6, 0).value - mutual_info_bipartition(l, 6).value) < 1e-10);
  CHECK_THROWS_AS(mutual_info_disjoint(l, 4, 5), std::invalid_argument);

  // Integrable point: correlations between short blocks die off with
  // distance, with a constant ratio per separation step once past the
  // initial transient.
  const TemporalMps integ = contract_influence({1.0, 0.5, 0.0, 0.1}, 40, 64);
  std::vector<double> values;
  for (std::size_t sep = 0; sep <= 36; sep += 4) values.push_back(mutual_info_disjoint(integ, 2, sep).value);
  for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] < values[i - 1]);
  const double ratio = values[5] / values[4];
  CHECK(ratio < 0.9);
  for (std::size_t i = 5; i + 1 < values.size(); ++i) CHECK(std::abs(values[i + 1] / values[i] - ratio) < 0.02 * ratio);
}
