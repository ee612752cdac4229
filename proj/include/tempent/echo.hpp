#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "tempent/ising.hpp"
#include "tempent/mps.hpp"

namespace tempent {

/// Finite open chain of L sites with the boundary terms -J X_1 - J X_L,
/// cut between sites L/2 and L/2 + 1.
struct EchoConfig {
  std::size_t L = 8;
  IsingParams params{1.0, 0.809, -0.9045, 0.05};
  std::size_t bond_cap = 64;
  double t_max = 5.0;

  void validate() const;
  std::size_t steps() const;
};

inline constexpr double kEchoDiscardFlag = 1e-6;

struct AmplitudeSample {
  double t = 0.0;
  double log_abs2 = 0.0;  // ln |A(t)|^2
  bool flagged = false;
};

struct AmplitudeCurve {
  std::vector<AmplitudeSample> samples;
  double max_discarded = 0.0;
  std::size_t max_bond = 1;
};

/// Transverse field per site: g on the interior, g + J on both ends
/// (the pinning terms in the sign convention of the gates).
std::vector<double> pinned_fields(const IsingParams& p, std::size_t L);

/// One Trotter step A B A of the chain acting on vec(U) (physical index
/// 2 * out + in). Bonds with bonds[i] == false (between sites i and i+1)
/// are omitted.
MpoSites chain_step_mpo(const IsingParams& p, const std::vector<double>& fields,
                        const std::vector<bool>& bonds);

/// A(t) = tr(U(t) U_LR(t)^dagger) / 2^L at every step from t = 0 to t_max.
/// `on_sample` fires after each sample (for streaming output).
AmplitudeCurve amplitude_curve(const EchoConfig& c,
                               const std::function<void(const AmplitudeSample&)>& on_sample = {});

struct ExponentFit {
  double beta = 0.0;
  double beta_error = 0.0;
  double prefactor = 0.0;  // c in ln|A|^2 = -c t^beta
  double rss = 0.0;
  std::size_t samples = 0;
  bool converged = false;
};

/// Fits ln|A|^2 = -c t^beta over samples with t in [t_min, t_max].
ExponentFit diffusive_exponent(const AmplitudeCurve& curve, double t_min, double t_max);

}  // namespace tempent
