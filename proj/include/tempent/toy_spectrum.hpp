#pragma once

#include <functional>
#include <string>
#include <vector>

namespace tempent {

enum class ToyVariant { single, double_, triple };

/// Analytic spectra of rho_L: up to three distinguished eigenvalues over a
/// bulk of N equal ones.
///   single: l1 = exp(-g1 T^a1)
///   double: l1 = (1-r) exp(-g1 T^a1), l2 = r exp(-g2 T^a2)
///   triple: as double with l2 split into r(1-r') and r r'
/// and lN = (1 - sum of distinguished) / N.
struct SpectrumModel {
  ToyVariant variant = ToyVariant::single;
  double alpha1 = 0.5;
  double gamma1 = 1.0;
  double alpha2 = 0.5;
  double gamma2 = 1.0;
  double r = 0.1;
  double r_prime = 0.3;
  // Bulk size as a function of T; empty means max(1, 2^(2T) - 2).
  std::function<double(double)> bulk_count;

  void validate() const;
  double bulk(double T) const;
  // True where the raw bulk size is below one and bulk() clamps it.
  bool bulk_clamped(double T) const;
};

struct Eigenvalue {
  double log_value;     // log of the eigenvalue (-inf for zero)
  double multiplicity;  // may be non-integer for a continuous bulk size
  double value() const;
};

std::vector<Eigenvalue> spectrum(const SpectrumModel& m, double T);

/// log sum_i mult_i * lambda_i^n, max-shifted.
double log_moment(const std::vector<Eigenvalue>& spec, double n);

double delta_nm_toy(const SpectrumModel& m, double T, int n, int m_idx);

/// The single-variant closed form, evaluated with expm1/log1p.
double delta_nm_single_closed(const SpectrumModel& m, double T, int n, int m_idx);

/// Limit of Delta_{n,m} for the triple variant at large T.
double triple_asymptote(double r_prime, int n, int m_idx);

/// Renyi-n entropy of the weights lambda_i^2 / sum lambda^2, any n > 0, n != 1.
double forward_backward_renyi_toy(const SpectrumModel& m, double T, double n);

/// Long-time form for n < 1: (1/(1-n)) log(1 + 1/((l1^2n + l2^2n) N^(2n-1))).
double forward_backward_asymptote(const SpectrumModel& m, double T, double n);

enum class ExtremumKind { max, min };

struct Extremum {
  double T;
  ExtremumKind kind;
};

/// Grid-level local extrema of delta_nm_toy. Steps smaller than
/// `noise` in magnitude do not count as a change of direction. Grid points
/// where the bulk size is clamped are skipped: the model is undefined there.
std::vector<Extremum> scan_extrema(const SpectrumModel& m, int n, int m_idx,
                                   const std::vector<double>& T_grid, double noise = 1e-10);

std::string to_string(ToyVariant v);
ToyVariant toy_variant_from_string(const std::string& s);

}  // namespace tempent
