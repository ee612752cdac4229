#include "tempent/influence.hpp"

#include <cmath>
#include <stdexcept>

namespace tempent {

namespace {

TruncationPolicy column_policy(std::size_t cap) { return {cap, kDefaultRelCutoff, true}; }

void absorb_step(TemporalMps& l) {
  const IsingParams& p = l.params;
  const double factor = trace_growth_factor(p);

  // The new top step enters as a bath site: an identity cap weighted so the
  // exact trace grows by `factor` per step.
  DenseTensor bath = identity_cap().reshaped({1, 4, 1});
  bath *= cplx(1.0 / std::sqrt(2.0));
  l.state.sites.push_back(std::move(bath));
  l.state.log_norm += std::log(std::sqrt(2.0) / factor);

  const std::size_t n = l.state.size();
  const double worst = zip_apply(l.state, influence_column(p, n, l.side), column_policy(l.bond_cap));
  l.max_discarded = std::max(l.max_discarded, worst);

  const double log_tr = log_trace(l);
  l.trace_drift = trace_drift(p, n, log_tr);
  l.renyi2_history.push_back(2.0 * log_tr - 2.0 * l.state.log_norm);
}

}  // namespace

MpoSites influence_column(const IsingParams& p, std::size_t height, Side side) {
  if (height == 0) return {};
  const StepMpo step = build_step_mpo(p);
  // folded_bulk legs: [in, out, l, r]; column layout [in, from, to, out].
  const DenseTensor site = side == Side::left ? step.folded_bulk.permuted({0, 2, 3, 1})
                                              : step.folded_bulk.permuted({0, 3, 2, 1});
  const DenseTensor cap = identity_cap();
  DenseTensor bottom = cap;
  bottom *= cplx(0.5);  // infinite-temperature initial state per site

  MpoSites col(height, site);
  col.front() = contract(bottom, col.front(), {{0, 0}}).reshaped({1, 4, 4, 4});
  DenseTensor& top = col.back();
  const std::size_t below = top.dim(0);
  top = contract(top, cap, {{3, 0}}).reshaped({below, 4, 4, 1});
  return col;
}

TemporalMps contract_influence(const IsingParams& p, std::size_t n_t, std::size_t bond_cap,
                               double drift_threshold, Side side) {
  p.validate();
  if (n_t < 1) throw std::invalid_argument("contract_influence: n_t must be >= 1");
  if (bond_cap < 1) throw std::invalid_argument("contract_influence: bond_cap must be >= 1");
  if (!(drift_threshold > 0)) throw std::invalid_argument("contract_influence: drift_threshold must be > 0");
  TemporalMps l;
  l.params = p;
  l.bond_cap = bond_cap;
  l.drift_threshold = drift_threshold;
  l.side = side;
  extend(l, n_t);
  return l;
}

void extend(TemporalMps& l, std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) absorb_step(l);
}

double log_trace(const TemporalMps& l) {
  const DenseTensor cap = identity_cap();
  const LogScalar tr = cap_contract(l.state, [&](std::size_t) -> const DenseTensor& { return cap; });
  return tr.log_abs;
}

double trace_drift(const IsingParams& p, std::size_t n_t, double log_tr) {
  if (n_t == 0) return 0.0;
  const double exact = std::log(trace_growth_factor(p)) / p.dt;
  const double measured = log_tr / (static_cast<double>(n_t) * p.dt);
  const double dev = std::abs(measured - exact);
  return exact == 0.0 ? dev : dev / std::abs(exact);
}

TemporalMps reduced_trace_prefix(const TemporalMps& l, std::size_t n_keep) {
  const std::size_t n = l.n_t();
  if (n_keep > n) throw std::invalid_argument("reduced_trace_prefix: n_keep exceeds n_t");
  TemporalMps out = l;
  if (n_keep == n) return out;

  const DenseTensor cap = identity_cap();
  DenseTensor env({1}, {1.0});
  double log_scale = 0.0;
  for (std::size_t t = n; t-- > n_keep;) {
    DenseTensor x = contract(l.state.sites[t], env, {{2, 0}});  // [a, s]
    env = contract(x, cap, {{1, 0}});                           // [a]
    const double m = env.max_abs();
    if (m > 0) {
      env *= cplx(1.0 / m);
      log_scale += std::log(m);
    }
  }
  out.state.sites.resize(n_keep);
  out.state.log_norm += log_scale;
  if (n_keep == 0) {
    out.state.log_norm += std::log(std::abs(env[0]));
  } else {
    DenseTensor& last = out.state.sites.back();
    last = contract(last, env, {{2, 0}});
    last = std::move(last).reshaped({last.dim(0), last.dim(1), 1});
    right_canonicalize(out.state);
  }
  out.renyi2_history.resize(std::min(out.renyi2_history.size(), n_keep));
  out.trace_drift = trace_drift(out.params, n_keep, log_trace(out) - (n - n_keep) *
                                                      std::log(trace_growth_factor(out.params)));
  return out;
}

InfluenceMpo to_mpo(const TemporalMps& l) {
  InfluenceMpo m;
  m.log_norm = l.state.log_norm;
  for (const auto& s : l.state.sites) m.sites.push_back(s.reshaped({s.dim(0), 2, 2, s.dim(2)}));
  return m;
}

TemporalMps fold(const InfluenceMpo& m, const TemporalMps& like) {
  TemporalMps l = like;
  l.state.sites.clear();
  l.state.log_norm = m.log_norm;
  for (const auto& s : m.sites) l.state.sites.push_back(s.reshaped({s.dim(0), 4, s.dim(3)}));
  return l;
}

Matrix dense_density_matrix(const TemporalMps& l) {
  const std::size_t n = l.n_t();
  if (n > 12) throw std::invalid_argument("dense_density_matrix: n_t too large to densify");
  const std::vector<cplx> v = to_dense(l.state);
  const std::size_t dim = std::size_t{1} << n;
  Matrix rho(dim, dim);
  for (std::size_t flat = 0; flat < v.size(); ++flat) {
    std::size_t ket = 0, bra = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t s = (flat >> (2 * (n - 1 - t))) & 3u;
      ket = (ket << 1) | (s >> 1);
      bra = (bra << 1) | (s & 1u);
    }
    rho(static_cast<Eigen::Index>(ket), static_cast<Eigen::Index>(bra)) = v[flat];
  }
  return rho;
}

}  // namespace tempent
