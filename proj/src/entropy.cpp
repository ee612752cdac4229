#include "tempent/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tempent {

namespace {

// sum_s a[s] b[swap(s)] with s = 2r + r': the trace of a product of two
// folded operators.
const Matrix& swap_op() {
  static const Matrix m = [] {
    Matrix s = Matrix::Zero(4, 4);
    for (int r = 0; r < 2; ++r)
      for (int rp = 0; rp < 2; ++rp) s(2 * r + rp, 2 * rp + r) = 1.0;
    return s;
  }();
  return m;
}

// Tracing a step in both copies.
const Matrix& double_cap_op() {
  static const Matrix m = [] {
    Matrix c = Matrix::Zero(4, 4);
    for (int a : {0, 3})
      for (int b : {0, 3}) c(a, b) = 1.0;
    return c;
  }();
  return m;
}

// rho acting on the ket index of a folded operator: [w, (a,b), (r,b), w'].
MpoSites left_multiplier(const Mps& rho) {
  MpoSites out;
  for (const auto& s : rho.sites) {
    const std::size_t wl = s.dim(0), wr = s.dim(2);
    DenseTensor w({wl, 4, 4, wr});
    for (std::size_t i = 0; i < wl; ++i)
      for (std::size_t j = 0; j < wr; ++j)
        for (std::size_t r = 0; r < 2; ++r)
          for (std::size_t a = 0; a < 2; ++a) {
            const cplx v = s.at({i, 2 * r + a, j});
            for (std::size_t b = 0; b < 2; ++b) w.at({i, 2 * a + b, 2 * r + b, j}) = v;
          }
    out.push_back(std::move(w));
  }
  return out;
}

double log_trace_product(const Mps& a, const Mps& b) {
  return transfer_contract(a, b, [](std::size_t) -> const Matrix& { return swap_op(); }, false).log_abs;
}

std::size_t resolve_power_cap(const TemporalMps& l, std::size_t cap) {
  return cap == 0 ? 2 * l.bond_cap : cap;
}

}  // namespace

MomentSeries log_moments(const TemporalMps& l, int n_max, std::size_t power_bond_cap) {
  if (n_max < 1) throw std::invalid_argument("log_moments: n_max must be >= 1");
  MomentSeries out;
  out.log_moments.push_back(log_trace(l));
  if (n_max == 1) return out;
  const std::size_t cap = resolve_power_cap(l, power_bond_cap);
  const MpoSites rho_left = left_multiplier(l.state);
  Mps power = l.state;  // rho^(k-1)
  right_canonicalize(power);
  for (int k = 2; k <= n_max; ++k) {
    out.log_moments.push_back(log_trace_product(l.state, power));
    if (k < n_max) {
      const double lost = zip_apply(power, rho_left, {cap, kDefaultRelCutoff, true});
      power.log_norm += l.state.log_norm;  // the multiplier sites carry no scale
      out.max_discarded = std::max(out.max_discarded, lost);
    }
  }
  out.flagged = out.max_discarded > kPowerDiscardFlag;
  return out;
}

double renyi_from_moments(const MomentSeries& s, int n) {
  if (n < 2 || static_cast<std::size_t>(n) > s.log_moments.size()) {
    throw std::invalid_argument("renyi_from_moments: order outside the series");
  }
  return (s.log_moments[n - 1] - n * s.log_moments[0]) / (1.0 - n);
}

double delta_from_moments(const MomentSeries& s, int n, int m) {
  if (!(n > m && m >= 1) || static_cast<std::size_t>(n) > s.log_moments.size()) {
    throw std::invalid_argument("delta_from_moments: need n > m >= 1 within the series");
  }
  return -(s.log_moments[n - 1] - static_cast<double>(n) / m * s.log_moments[m - 1]);
}

double renyi2(const TemporalMps& l) {
  const LogScalar norm2 = overlap(l.state, l.state);
  return 2.0 * log_trace(l) - norm2.log_abs;
}

double subset_renyi2(const TemporalMps& l, const std::vector<bool>& keep) {
  if (keep.size() != l.n_t()) throw std::invalid_argument("subset_renyi2: mask length differs from n_t");
  const LogScalar pur = transfer_contract(
      l.state, l.state,
      [&](std::size_t t) -> const Matrix& { return keep[t] ? swap_op() : double_cap_op(); }, false);
  return 2.0 * log_trace(l) - pur.log_abs;
}

Measured renyi_n(const TemporalMps& l, int n, std::size_t power_bond_cap) {
  if (n < 2) throw std::invalid_argument("renyi_n: n must be >= 2");
  const MomentSeries m = log_moments(l, n, power_bond_cap);
  return {renyi_from_moments(m, n), m.flagged || !l.converged()};
}

Measured delta_nm(const TemporalMps& l, int n, int m, std::size_t power_bond_cap) {
  if (!(n > m && m >= 1)) throw std::invalid_argument("delta_nm: need n > m >= 1");
  const MomentSeries s = log_moments(l, n, power_bond_cap);
  return {delta_from_moments(s, n, m), s.flagged || !l.converged()};
}

Measured forward_backward_renyi(const TemporalMps& l, int n, std::size_t power_bond_cap) {
  if (n < 2) throw std::invalid_argument("forward_backward_renyi: n must be >= 2");
  Measured d = delta_nm(l, 2 * n, 2, power_bond_cap);
  d.value /= (n - 1);
  return d;
}

Measured mutual_info_bipartition(const TemporalMps& l, std::size_t n_cut) {
  const std::size_t n = l.n_t();
  if (n_cut == 0 || n_cut >= n) throw std::invalid_argument("mutual_info_bipartition: need 0 < n_cut < n_t");
  if (l.renyi2_history.size() != n) {
    throw std::invalid_argument("mutual_info_bipartition: influence lacks a full S2 history");
  }
  const auto& s = l.renyi2_history;
  return {s[n_cut - 1] + s[n - n_cut - 1] - s[n - 1], !l.converged()};
}

Measured mutual_info_bipartition(const IsingParams& p, std::size_t n_t, std::size_t n_cut,
                                 std::size_t bond_cap, double drift_threshold) {
  if (n_cut == 0 || n_cut >= n_t) throw std::invalid_argument("mutual_info_bipartition: need 0 < n_cut < n_t");
  return mutual_info_bipartition(contract_influence(p, n_t, bond_cap, drift_threshold), n_cut);
}

Measured max_mutual_info(const TemporalMps& l) {
  Measured best{0.0, !l.converged()};
  for (std::size_t cut = 1; cut < l.n_t(); ++cut) {
    best.value = std::max(best.value, mutual_info_bipartition(l, cut).value);
  }
  return best;
}

MutualInfoSample mutual_info_disjoint(const TemporalMps& l, std::size_t block_len,
                                      std::size_t separation, std::size_t offset) {
  const std::size_t n = l.n_t();
  if (block_len == 0 || offset + 2 * block_len + separation > n) {
    throw std::invalid_argument("mutual_info_disjoint: blocks do not fit in n_t");
  }
  std::vector<bool> a(n, false), b(n, false), ab(n, false);
  for (std::size_t i = 0; i < block_len; ++i) {
    a[offset + i] = ab[offset + i] = true;
    b[offset + block_len + separation + i] = ab[offset + block_len + separation + i] = true;
  }
  MutualInfoSample out;
  out.t_l = block_len * l.params.dt;
  out.delta_t = separation * l.params.dt;
  out.value = subset_renyi2(l, a) + subset_renyi2(l, b) - subset_renyi2(l, ab);
  out.flagged = !l.converged();
  return out;
}

}  // namespace tempent
