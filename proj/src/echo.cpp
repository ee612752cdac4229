#include "tempent/echo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tempent/fit.hpp"

namespace tempent {

namespace {

Matrix pauli_x() {
  Matrix x = Matrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  return x;
}

Matrix as_matrix2(const DenseTensor& t) {
  Matrix m(2, 2);
  for (std::size_t o = 0; o < 2; ++o)
    for (std::size_t i = 0; i < 2; ++i) m(o, i) = t.at({o, i});
  return m;
}

// Channels (weight, operator) of exp(+i dt J XX) on one bond; zero channels dropped.
struct Channel {
  cplx root_weight;
  bool x;
};

std::vector<Channel> bond_channels(const IsingParams& p, bool active) {
  if (!active) return {{1.0, false}};
  const double theta = p.J * p.dt;
  std::vector<Channel> out;
  if (std::cos(theta) != 0.0) out.push_back({std::sqrt(cplx(std::cos(theta), 0.0)), false});
  if (std::sin(theta) != 0.0) out.push_back({std::sqrt(cplx(0.0, std::sin(theta))), true});
  return out;
}

Mps identity_operator(std::size_t L) {
  DenseTensor v({4});
  v[0] = v[3] = 1.0;
  return product_mps(v, L);
}

}  // namespace

void EchoConfig::validate() const {
  params.validate();
  if (L < 4 || L % 2 != 0) {
    std::ostringstream msg;
    msg << "EchoConfig: L must be even and >= 4 (got " << L << ")";
    throw std::invalid_argument(msg.str());
  }
  if (bond_cap == 0) throw std::invalid_argument("EchoConfig: bond_cap must be positive");
  if (!(t_max >= 0.0)) throw std::invalid_argument("EchoConfig: t_max must be >= 0");
}

std::size_t EchoConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_max / params.dt));
}

std::vector<double> pinned_fields(const IsingParams& p, std::size_t L) {
  std::vector<double> g(L, p.g);
  if (L > 0) {
    g.front() += p.J;
    g.back() += p.J;
  }
  return g;
}

MpoSites chain_step_mpo(const IsingParams& p, const std::vector<double>& fields,
                        const std::vector<bool>& bonds) {
  const std::size_t L = fields.size();
  if (L == 0 || bonds.size() + 1 != L) throw std::invalid_argument("chain_step_mpo: need L sites and L-1 bond flags");
  const Matrix x = pauli_x();
  const Matrix id = Matrix::Identity(2, 2);
  MpoSites out;
  out.reserve(L);
  std::vector<Channel> left{{1.0, false}};
  for (std::size_t s = 0; s < L; ++s) {
    const std::vector<Channel> right =
        s + 1 < L ? bond_channels(p, bonds[s]) : std::vector<Channel>{{1.0, false}};
    const Matrix a = as_matrix2(single_qubit_rotation(p.h, fields[s], 0.5 * p.dt));
    DenseTensor w({left.size(), 4, 4, right.size()});
    for (std::size_t l = 0; l < left.size(); ++l)
      for (std::size_t r = 0; r < right.size(); ++r) {
        const Matrix op = a * (left[l].x ? x : id) * (right[r].x ? x : id) * a *
                          (left[l].root_weight * right[r].root_weight);
        for (std::size_t o = 0; o < 2; ++o)
          for (std::size_t o2 = 0; o2 < 2; ++o2)
            for (std::size_t i = 0; i < 2; ++i) w.at({l, 2 * o + i, 2 * o2 + i, r}) = op(o2, o);
      }
    out.push_back(std::move(w));
    left = right;
  }
  return out;
}

AmplitudeCurve amplitude_curve(const EchoConfig& c,
                               const std::function<void(const AmplitudeSample&)>& on_sample) {
  c.validate();
  const std::size_t L = c.L;
  const auto fields = pinned_fields(c.params, L);
  std::vector<bool> all(L - 1, true), split(L - 1, true);
  split[L / 2 - 1] = false;
  const MpoSites full_step = chain_step_mpo(c.params, fields, all);
  const MpoSites split_step = chain_step_mpo(c.params, fields, split);
  const TruncationPolicy policy{c.bond_cap, kDefaultRelCutoff, true};

  Mps u = identity_operator(L);
  Mps u_lr = identity_operator(L);
  right_canonicalize(u);
  right_canonicalize(u_lr);
  const double log_dim = static_cast<double>(L) * std::log(2.0);

  AmplitudeCurve curve;
  auto record = [&](std::size_t step, double discarded) {
    const LogScalar a = overlap(u_lr, u);
    AmplitudeSample s{step * c.params.dt, 2.0 * (a.log_abs - log_dim), discarded > kEchoDiscardFlag};
    curve.samples.push_back(s);
    curve.max_bond = std::max({curve.max_bond, u.max_bond(), u_lr.max_bond()});
    if (on_sample) on_sample(s);
  };
  record(0, 0.0);
  for (std::size_t step = 1; step <= c.steps(); ++step) {
    const double d1 = zip_apply(u, full_step, policy);
    const double d2 = zip_apply(u_lr, split_step, policy);
    const double d = std::max(d1, d2);
    curve.max_discarded = std::max(curve.max_discarded, d);
    record(step, d);
  }
  return curve;
}

ExponentFit diffusive_exponent(const AmplitudeCurve& curve, double t_min, double t_max) {
  std::vector<double> xs, ys;
  for (const auto& s : curve.samples) {
    if (s.t >= t_min && s.t <= t_max) {
      xs.push_back(s.t);
      ys.push_back(s.log_abs2);
    }
  }
  if (xs.size() < 10) {
    std::ostringstream msg;
    msg << "diffusive_exponent: window [" << t_min << ", " << t_max << "] holds " << xs.size()
        << " samples, need >= 10";
    throw std::invalid_argument(msg.str());
  }
  FitOptions opt;
  opt.include_offset = false;
  const FitResult f = fit_model(FitKind::power_law, xs, ys, opt);
  ExponentFit out;
  out.prefactor = -f.params[0];
  out.beta = f.params[1];
  out.beta_error = f.errors[1];
  out.rss = f.rss;
  out.samples = xs.size();
  out.converged = f.converged;
  return out;
}

}  // namespace tempent
