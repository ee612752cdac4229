#pragma once

#include <cstddef>
#include <vector>

#include "tempent/ising.hpp"
#include "tempent/mps.hpp"

namespace tempent {

enum class Side { left, right };

/// Vectorized influence functional <L(T)| of a half-infinite chain.
/// Sites are Trotter steps in time order; the physical leg folds the cut
/// bond index as 2*r + r' (forward r, backward r').
struct TemporalMps {
  Mps state;
  IsingParams params;
  std::size_t bond_cap = 1;
  double drift_threshold = 1e-3;
  double trace_drift = 0.0;
  double max_discarded = 0.0;  // worst relative truncation of any column
  Side side = Side::left;
  // S2 of rho_L after each absorbed step, indexed by n_t - 1.
  std::vector<double> renyi2_history;

  std::size_t n_t() const { return state.size(); }
  bool converged() const { return trace_drift <= drift_threshold; }
};

/// Same object with every folded leg split into (ket, bra): sites are
/// [left, ket, bra, right].
struct InfluenceMpo {
  std::vector<DenseTensor> sites;
  double log_norm = 0.0;
};

TemporalMps contract_influence(const IsingParams& p, std::size_t n_t, std::size_t bond_cap,
                               double drift_threshold = 1e-3, Side side = Side::left);

/// Adds `steps` Trotter steps. The result is the same as a fresh
/// contraction to the new length with identical settings.
void extend(TemporalMps& l, std::size_t steps);

/// log Tr rho_L.
double log_trace(const TemporalMps& l);

/// Relative deviation of log Tr rho_L / T from the exact rate.
double trace_drift(const IsingParams& p, std::size_t n_t, double log_tr);

/// Traces out the last n_t - n_keep steps. The scalar left behind is kept,
/// so n_keep = 0 carries the full trace in log_norm.
TemporalMps reduced_trace_prefix(const TemporalMps& l, std::size_t n_keep);

InfluenceMpo to_mpo(const TemporalMps& l);
/// Inverse of to_mpo; params and bookkeeping come from `like`.
TemporalMps fold(const InfluenceMpo& m, const TemporalMps& like);

/// Dense rho_L[r; r'] with the first time step as the most significant bit.
Matrix dense_density_matrix(const TemporalMps& l);

/// One transverse column of height n as MPO sites [below, from, to, above].
MpoSites influence_column(const IsingParams& p, std::size_t height, Side side);

}  // namespace tempent
