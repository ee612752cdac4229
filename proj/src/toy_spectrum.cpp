#include "tempent/toy_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace tempent {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) {
  if (x == kNegInf) return 0.0;
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// log(1 - sum of distinguished eigenvalues), written with expm1 so that it
// stays accurate when the distinguished weight is close to one.
double log_bulk_weight(const SpectrumModel& m, double a, double b) {
  double w = 0.0;
  switch (m.variant) {
    case ToyVariant::single:
      w = -std::expm1(-a);
      break;
    case ToyVariant::double_:
    case ToyVariant::triple:
      w = -(1.0 - m.r) * std::expm1(-a) - m.r * std::expm1(-b);
      break;
  }
  if (w < 0) {
    std::ostringstream msg;
    msg << "spectrum: bulk eigenvalue is negative (" << w << ")";
    throw std::domain_error(msg.str());
  }
  return w == 0.0 ? kNegInf : std::log(w);
}

}  // namespace

double Eigenvalue::value() const { return std::exp(log_value); }

void SpectrumModel::validate() const {
  auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!open_unit(alpha1) || !(gamma1 >= 0.0)) throw std::invalid_argument("SpectrumModel: need 0 < alpha1 < 1, gamma1 >= 0");
  if (variant != ToyVariant::single) {
    if (!open_unit(alpha2) || !(gamma2 >= 0.0)) throw std::invalid_argument("SpectrumModel: need 0 < alpha2 < 1, gamma2 >= 0");
    if (!open_unit(r)) throw std::invalid_argument("SpectrumModel: need 0 < r < 1");
  }
  if (variant == ToyVariant::triple && !open_unit(r_prime)) {
    throw std::invalid_argument("SpectrumModel: need 0 < r_prime < 1");
  }
}

namespace {
double raw_bulk(const SpectrumModel& m, double T) {
  return m.bulk_count ? m.bulk_count(T) : std::exp2(2.0 * T) - 2.0;
}
}  // namespace

double SpectrumModel::bulk(double T) const { return std::max(1.0, raw_bulk(*this, T)); }

bool SpectrumModel::bulk_clamped(double T) const { return raw_bulk(*this, T) < 1.0; }

std::vector<Eigenvalue> spectrum(const SpectrumModel& m, double T) {
  m.validate();
  if (T < 0) throw std::invalid_argument("spectrum: T must be >= 0");
  const double a = m.gamma1 * std::pow(T, m.alpha1);
  const double b = m.gamma2 * std::pow(T, m.alpha2);
  std::vector<Eigenvalue> out;
  switch (m.variant) {
    case ToyVariant::single:
      out.push_back({-a, 1.0});
      break;
    case ToyVariant::double_:
      out.push_back({std::log1p(-m.r) - a, 1.0});
      out.push_back({std::log(m.r) - b, 1.0});
      break;
    case ToyVariant::triple:
      out.push_back({std::log1p(-m.r) - a, 1.0});
      out.push_back({std::log(m.r) + std::log1p(-m.r_prime) - b, 1.0});
      out.push_back({std::log(m.r) + std::log(m.r_prime) - b, 1.0});
      break;
  }
  const double n = m.bulk(T);
  out.push_back({log_bulk_weight(m, a, b) - std::log(n), n});
  return out;
}

double log_moment(const std::vector<Eigenvalue>& spec, double n) {
  double hi = kNegInf;
  std::vector<double> terms;
  for (const auto& e : spec) {
    if (e.log_value == kNegInf || e.multiplicity <= 0) continue;
    terms.push_back(n * e.log_value + std::log(e.multiplicity));
    hi = std::max(hi, terms.back());
  }
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return hi + std::log(s);
}

double delta_nm_toy(const SpectrumModel& m, double T, int n, int m_idx) {
  if (!(n > m_idx && m_idx >= 1)) throw std::invalid_argument("delta_nm_toy: need n > m >= 1");
  const auto spec = spectrum(m, T);
  return -log_moment(spec, n) + static_cast<double>(n) / m_idx * log_moment(spec, m_idx);
}

double delta_nm_single_closed(const SpectrumModel& m, double T, int n, int m_idx) {
  const double u = m.gamma1 * std::pow(T, m.alpha1);
  // log(1/l1 - 1) = log(e^u - 1)
  const double l = u == 0.0 ? kNegInf : u + std::log(-std::expm1(-u));
  const double log_n = std::log(m.bulk(T));
  auto term = [&](int k) { return l == kNegInf ? kNegInf : k * l - (k - 1) * log_n; };
  return -softplus(term(n)) + static_cast<double>(n) / m_idx * softplus(term(m_idx));
}

double triple_asymptote(double r_prime, int n, int m_idx) {
  const double q = 1.0 - r_prime;
  const double num = std::pow(q, n) + std::pow(r_prime, n);
  const double den = std::pow(q, m_idx) + std::pow(r_prime, m_idx);
  return -(std::log(num) - static_cast<double>(n) / m_idx * std::log(den));
}

double forward_backward_renyi_toy(const SpectrumModel& m, double T, double n) {
  if (!(n > 0) || n == 1.0) throw std::invalid_argument("forward_backward_renyi_toy: need n > 0, n != 1");
  const auto spec = spectrum(m, T);
  return (log_moment(spec, 2.0 * n) - n * log_moment(spec, 2.0)) / (1.0 - n);
}

double forward_backward_asymptote(const SpectrumModel& m, double T, double n) {
  const auto spec = spectrum(m, T);
  // Distinguished eigenvalues are every entry but the bulk.
  double hi = kNegInf;
  std::vector<double> terms;
  for (std::size_t i = 0; i + 1 < spec.size(); ++i) {
    terms.push_back(2.0 * n * spec[i].log_value);
    hi = std::max(hi, terms.back());
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  const double log_sum = hi + std::log(s);
  const double x = -(log_sum + (2.0 * n - 1.0) * std::log(m.bulk(T)));
  return softplus(x) / (1.0 - n);
}

std::vector<Extremum> scan_extrema(const SpectrumModel& m, int n, int m_idx,
                                   const std::vector<double>& T_grid, double noise) {
  if (T_grid.size() < 3) throw std::invalid_argument("scan_extrema: need at least 3 grid points");
  for (std::size_t i = 1; i < T_grid.size(); ++i) {
    if (!(T_grid[i] > T_grid[i - 1])) throw std::invalid_argument("scan_extrema: grid must be strictly increasing");
  }
  std::vector<double> grid, v;
  for (double T : T_grid) {
    if (m.bulk_clamped(T)) continue;
    grid.push_back(T);
    v.push_back(delta_nm_toy(m, T, n, m_idx));
  }

  std::vector<Extremum> out;
  int last_sign = 0;
  std::size_t turn = 0;  // grid index where the last run of rises/falls ended
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (std::abs(d) <= noise) continue;
    const int sign = d > 0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) {
      out.push_back({grid[turn], last_sign > 0 ? ExtremumKind::max : ExtremumKind::min});
    }
    last_sign = sign;
    turn = i;
  }
  return out;
}

std::string to_string(ToyVariant v) {
  switch (v) {
    case ToyVariant::single: return "single";
    case ToyVariant::double_: return "double";
    case ToyVariant::triple: return "triple";
  }
  return "single";
}

ToyVariant toy_variant_from_string(const std::string& s) {
  if (s == "single") return ToyVariant::single;
  if (s == "double") return ToyVariant::double_;
  if (s == "triple") return ToyVariant::triple;
  throw std::invalid_argument("unknown toy variant '" + s + "'");
}

}  // namespace tempent
