#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace tempent {

struct Point {
  double x;
  double y;
};

/// Centered differences inside, one-sided at the ends.
std::vector<Point> finite_diff(const std::vector<double>& x, const std::vector<double>& y);

enum class FitKind { power_law, exponential, logarithmic, linear };

/// power_law:   A x^alpha + C      params [A, alpha, C]
/// exponential: A exp(-x/tau) + C  params [A, tau, C]
/// logarithmic: A log x + C        params [A, C]
/// linear:      A x + C            params [A, C]
/// Without the offset (include_offset false, or derivative mode) C is absent.
struct FitOptions {
  bool derivative_mode = false;  // fit the model derivative to finite_diff of the data
  bool include_offset = true;
  double rel_tol = 1e-8;
  int max_iterations = 500;
};

struct FitResult {
  FitKind kind = FitKind::power_law;
  std::vector<double> params;
  std::vector<double> errors;  // one sigma, from the curvature of the RSS
  bool has_offset = false;
  bool derivative_mode = false;
  double rss = 0.0;
  std::size_t samples = 0;
  int iterations = 0;
  bool converged = false;
  std::string diagnostics;

  double evaluate(double x) const;  // the fitted (non-derivative) model without offset if absent
  double aic() const;
};

FitResult fit_model(FitKind kind, const std::vector<double>& x, const std::vector<double>& y,
                    const FitOptions& options = {});

std::size_t shape_param_count(FitKind kind);  // 1 for power/exponential, 0 otherwise

/// AIC = 2k + n ln(RSS/n); -infinity when RSS is zero.
double aic(double rss, std::size_t n, std::size_t k);

struct EnsembleMember {
  double lower_bound;
  FitResult fit;
};

struct FitEnsemble {
  FitKind kind = FitKind::power_law;
  std::vector<EnsembleMember> members;  // converged and failed alike
  std::vector<double> mean;             // over converged members
  std::vector<double> error;            // quadrature of std and mean fit error
  std::size_t failures = 0;
  // Least-squares slope of the shape parameter (or A) against the lower bound.
  double trend_slope = 0.0;
};

FitEnsemble window_ensemble(FitKind kind, const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& lower_bounds, double upper_bound,
                            const FitOptions& options = {});

struct AicRank {
  std::size_t index;  // position in the input list
  double aic;
  bool winner;
  bool tied;  // equal (to rounding) with the best AIC
};

/// Sorted by AIC; ties keep declaration order and the first one wins.
std::vector<AicRank> aic_compare(const std::vector<FitResult>& fits, std::size_t sample_count);

struct WinLoss {
  std::size_t wins = 0;
  std::size_t total = 0;
  FitKind winner = FitKind::power_law;
  std::vector<std::size_t> per_kind;  // wins for each candidate
};

/// Runs every candidate on each window [lb, upper] and tallies AIC winners.
WinLoss compare_over_windows(const std::vector<FitKind>& kinds, const std::vector<double>& x,
                             const std::vector<double>& y, const std::vector<double>& lower_bounds,
                             double upper_bound, const FitOptions& options = {});

/// "16 / 25, exponential"
std::string format_win_loss(const WinLoss& w);

/// "0.616 ± 0.0396": value to three decimals, error to three significant figures.
std::string format_value_error(double value, double error);
bool parse_value_error(const std::string& text, double& value, double& error);

std::string to_string(FitKind kind);
FitKind fit_kind_from_string(const std::string& s);

}  // namespace tempent
