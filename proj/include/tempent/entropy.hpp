#pragma once

#include <cstddef>
#include <vector>

#include "tempent/influence.hpp"

namespace tempent {

/// A scalar diagnostic plus whether any ingredient failed its quality gate
/// (trace drift or power-compression loss).
struct Measured {
  double value = 0.0;
  bool flagged = false;
};

/// log Tr rho^k for k = 1..n_max (entry k-1), from sequential products
/// rho * rho^(k-1) compressed to `power_bond_cap`.
struct MomentSeries {
  std::vector<double> log_moments;
  double max_discarded = 0.0;
  bool flagged = false;
};

inline constexpr double kPowerDiscardFlag = 1e-6;

MomentSeries log_moments(const TemporalMps& l, int n_max, std::size_t power_bond_cap = 0);

/// Scalars derived from a moment series (orders must be <= its length).
double renyi_from_moments(const MomentSeries& s, int n);
double delta_from_moments(const MomentSeries& s, int n, int m);

/// S2 = -log(<L|L> / Tr(rho)^2).
double renyi2(const TemporalMps& l);

/// S2 of the reduced matrix on the steps flagged in `keep`.
double subset_renyi2(const TemporalMps& l, const std::vector<bool>& keep);

/// power_bond_cap = 0 selects twice the influence bond cap.
Measured renyi_n(const TemporalMps& l, int n, std::size_t power_bond_cap = 0);

/// Delta_{n,m} = -log Tr rho^n / (Tr rho^m)^(n/m).
Measured delta_nm(const TemporalMps& l, int n, int m, std::size_t power_bond_cap = 0);

/// S_{L,n} = Delta_{2n,2} / (n - 1).
Measured forward_backward_renyi(const TemporalMps& l, int n, std::size_t power_bond_cap = 0);

/// I2 = S2(t) + S2(T - t) - S2(T) using the per-step history of `l`.
Measured mutual_info_bipartition(const TemporalMps& l, std::size_t n_cut);
Measured mutual_info_bipartition(const IsingParams& p, std::size_t n_t, std::size_t n_cut,
                                 std::size_t bond_cap, double drift_threshold = 1e-3);

/// Largest bipartition I2 over all cuts.
Measured max_mutual_info(const TemporalMps& l);

struct MutualInfoSample {
  double t_l = 0.0;
  double delta_t = 0.0;
  double value = 0.0;
  bool flagged = false;
};

/// Blocks A = [offset, offset + len) and B starting `separation` steps after A.
MutualInfoSample mutual_info_disjoint(const TemporalMps& l, std::size_t block_len,
                                      std::size_t separation, std::size_t offset = 0);

}  // namespace tempent
