#include "tempent/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace tempent {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Model {
  FitKind kind;
  bool derivative;
  bool offset;

  std::size_t size() const { return 1 + shape_param_count(kind) + (offset ? 1 : 0); }

  // Value and gradient with respect to the parameters.
  double eval(double x, const Vec& p, double* grad) const {
    const double a = p[0];
    switch (kind) {
      case FitKind::power_law: {
        const double al = p[1];
        const double lx = std::log(x);
        if (!derivative) {
          const double xa = std::pow(x, al);
          if (grad) {
            grad[0] = xa;
            grad[1] = a * xa * lx;
            if (offset) grad[2] = 1.0;
          }
          return a * xa + (offset ? p[2] : 0.0);
        }
        const double xm = std::pow(x, al - 1.0);
        if (grad) {
          grad[0] = al * xm;
          grad[1] = a * xm * (1.0 + al * lx);
        }
        return a * al * xm;
      }
      case FitKind::exponential: {
        const double tau = p[1];
        const double e = std::exp(-x / tau);
        if (!derivative) {
          if (grad) {
            grad[0] = e;
            grad[1] = a * e * x / (tau * tau);
            if (offset) grad[2] = 1.0;
          }
          return a * e + (offset ? p[2] : 0.0);
        }
        if (grad) {
          grad[0] = -e / tau;
          grad[1] = a * e * (1.0 / (tau * tau) - x / (tau * tau * tau));
        }
        return -a * e / tau;
      }
      case FitKind::logarithmic:
        if (!derivative) {
          if (grad) {
            grad[0] = std::log(x);
            if (offset) grad[1] = 1.0;
          }
          return a * std::log(x) + (offset ? p[1] : 0.0);
        }
        if (grad) grad[0] = 1.0 / x;
        return a / x;
      case FitKind::linear:
        if (!derivative) {
          if (grad) {
            grad[0] = x;
            if (offset) grad[1] = 1.0;
          }
          return a * x + (offset ? p[1] : 0.0);
        }
        if (grad) grad[0] = 1.0;
        return a;
    }
    return 0.0;
  }

  double rss(const std::vector<double>& x, const std::vector<double>& y, const Vec& p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - eval(x[i], p, nullptr);
      s += r * r;
    }
    return s;
  }

  void jacobian(const std::vector<double>& x, const std::vector<double>& y, const Vec& p, Mat& j,
                Vec& r) const {
    const std::size_t n = x.size(), k = size();
    j.resize(n, k);
    r.resize(n);
    std::vector<double> g(k);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = y[i] - eval(x[i], p, g.data());
      for (std::size_t c = 0; c < k; ++c) j(i, c) = g[c];
    }
  }
};

// Best linear coefficients for fixed shape: returns rss, fills p.
double linear_solve(const Model& m, const std::vector<double>& x, const std::vector<double>& y,
                    double shape, Vec& p) {
  const std::size_t n = x.size(), k = m.size();
  const std::size_t nshape = shape_param_count(m.kind);
  Vec probe = Vec::Zero(k);
  probe[0] = 1.0;
  if (nshape) probe[1] = shape;
  Mat basis(n, k - nshape);
  for (std::size_t i = 0; i < n; ++i) {
    // With A = 1 and C = 0 the model value is the A-basis function.
    basis(i, 0) = m.eval(x[i], probe, nullptr);
    if (m.offset) basis(i, 1) = 1.0;
  }
  Vec yy = Eigen::Map<const Vec>(y.data(), static_cast<Eigen::Index>(n));
  Eigen::ColPivHouseholderQR<Mat> qr(basis);
  if (qr.rank() < basis.cols()) return kInf;
  const Vec coef = qr.solve(yy);
  p = Vec::Zero(k);
  p[0] = coef[0];
  if (nshape) p[1] = shape;
  if (m.offset) p[k - 1] = coef[1];
  const double s = m.rss(x, y, p);
  return std::isfinite(s) ? s : kInf;
}

std::vector<double> shape_grid(FitKind kind, const std::vector<double>& x) {
  std::vector<double> g;
  if (kind == FitKind::power_law) {
    for (int i = -300; i <= 300; ++i)
      if (i != 0) g.push_back(0.01 * i);
  } else if (kind == FitKind::exponential) {
    const double span = std::max(x.back() - x.front(), 1e-12);
    for (int i = -200; i <= 200; ++i) {
      const double tau = span * std::pow(10.0, 0.02 * i);
      g.push_back(tau);
      g.push_back(-tau);
    }
  }
  return g;
}

Vec initial_guess(const Model& m, const std::vector<double>& x, const std::vector<double>& y) {
  Vec best;
  double best_rss = kInf;
  if (shape_param_count(m.kind) == 0) {
    linear_solve(m, x, y, 0.0, best);
    return best;
  }
  for (double s : shape_grid(m.kind, x)) {
    Vec p;
    const double r = linear_solve(m, x, y, s, p);
    if (r < best_rss) {
      best_rss = r;
      best = p;
    }
  }
  if (best.size() == 0) throw std::runtime_error("fit_model: no admissible starting point");
  return best;
}

void check_samples(FitKind kind, const std::vector<double>& x, const std::vector<double>& y,
                   std::size_t k) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_model: x and y differ in length");
  if (x.size() < k + 2) {
    std::ostringstream msg;
    msg << "fit_model: " << x.size() << " samples, need at least " << k + 2;
    throw std::invalid_argument(msg.str());
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw std::invalid_argument("fit_model: non-finite sample");
    if ((kind == FitKind::power_law || kind == FitKind::logarithmic) && x[i] <= 0.0) {
      throw std::invalid_argument("fit_model: power-law and logarithmic fits need x > 0");
    }
    if (i > 0 && !(x[i] > x[i - 1])) throw std::invalid_argument("fit_model: x must be strictly increasing");
  }
}

}  // namespace

std::size_t shape_param_count(FitKind kind) {
  return kind == FitKind::power_law || kind == FitKind::exponential ? 1 : 0;
}

std::vector<Point> finite_diff(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("finite_diff: x and y differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("finite_diff: need at least 2 points");
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] == x[i - 1]) throw std::invalid_argument("finite_diff: duplicate x");
    if (!(x[i] > x[i - 1])) throw std::invalid_argument("finite_diff: x must be strictly increasing");
  }
  std::vector<Point> out(n);
  out[0] = {x[0], (y[1] - y[0]) / (x[1] - x[0])};
  out[n - 1] = {x[n - 1], (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2])};
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = {x[i], (y[i + 1] - y[i - 1]) / (x[i + 1] - x[i - 1])};
  return out;
}

double aic(double rss, std::size_t n, std::size_t k) {
  if (rss <= 0.0) return -kInf;
  return 2.0 * static_cast<double>(k) + static_cast<double>(n) * std::log(rss / static_cast<double>(n));
}

double FitResult::evaluate(double x) const {
  Model m{kind, false, has_offset};
  Vec p = Eigen::Map<const Vec>(params.data(), static_cast<Eigen::Index>(params.size()));
  return m.eval(x, p, nullptr);
}

double FitResult::aic() const { return tempent::aic(rss, samples, params.size()); }

FitResult fit_model(FitKind kind, const std::vector<double>& x_in, const std::vector<double>& y_in,
                    const FitOptions& options) {
  const Model model{kind, options.derivative_mode, options.include_offset && !options.derivative_mode};
  const std::size_t k = model.size();
  check_samples(kind, x_in, y_in, k);

  std::vector<double> x = x_in, y = y_in;
  if (options.derivative_mode) {
    const auto d = finite_diff(x_in, y_in);
    for (std::size_t i = 0; i < d.size(); ++i) y[i] = d[i].y;
  }

  FitResult out;
  out.kind = kind;
  out.has_offset = model.offset;
  out.derivative_mode = options.derivative_mode;
  out.samples = x.size();

  Vec p = initial_guess(model, x, y);
  double rss = model.rss(x, y, p);
  double lambda = 1e-3;
  Mat j;
  Vec r;
  std::ostringstream diag;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (rss == 0.0) {
      out.converged = true;
      break;
    }
    model.jacobian(x, y, p, j, r);
    const Mat jtj = j.transpose() * j;
    const Vec jtr = j.transpose() * r;
    bool accepted = false;
    bool small_step = false;
    while (lambda < 1e16) {
      Mat a = jtj;
      for (Eigen::Index c = 0; c < a.rows(); ++c) a(c, c) += lambda * std::max(jtj(c, c), 1e-300);
      const Vec step = a.ldlt().solve(jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Vec trial = p + step;
      const double trial_rss = model.rss(x, y, trial);
      if (std::isfinite(trial_rss) && trial_rss <= rss) {
        small_step = true;
        for (Eigen::Index c = 0; c < p.size(); ++c) {
          if (std::abs(step[c]) > options.rel_tol * (std::abs(p[c]) + options.rel_tol)) small_step = false;
        }
        p = trial;
        rss = trial_rss;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 2.0;
    }
    if (!accepted) {
      // No downhill step at any damping: accept only if the gradient vanishes.
      const double scale = j.norm() * r.norm();
      if (jtr.norm() <= 1e-8 * std::max(scale, 1e-300)) {
        out.converged = true;
      } else {
        diag << "stalled with gradient norm " << jtr.norm() << "; ";
      }
      break;
    }
    if (small_step) {
      out.converged = true;
      ++it;
      break;
    }
  }
  if (it >= options.max_iterations && !out.converged) diag << "iteration cap " << options.max_iterations << " reached; ";
  out.iterations = it;
  out.rss = rss;
  out.params.assign(p.data(), p.data() + p.size());

  model.jacobian(x, y, p, j, r);
  const std::size_t dof = x.size() - k;
  const double s2 = rss / static_cast<double>(dof);
  Eigen::JacobiSVD<Mat> svd(j.transpose() * j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec sv = svd.singularValues();
  out.errors.assign(k, 0.0);
  if (sv[sv.size() - 1] <= 1e-14 * sv[0]) {
    out.errors.assign(k, kInf);
    diag << "ill-conditioned normal matrix; ";
  } else {
    const Mat cov = svd.solve(Mat::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))) * s2;
    for (std::size_t c = 0; c < k; ++c) out.errors[c] = std::sqrt(std::max(0.0, cov(c, c)));
  }
  if (!out.converged) diag << "last rss " << rss;
  out.diagnostics = diag.str();
  return out;
}

FitEnsemble window_ensemble(FitKind kind, const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& lower_bounds, double upper_bound,
                            const FitOptions& options) {
  if (x.size() != y.size()) throw std::invalid_argument("window_ensemble: x and y differ in length");
  if (lower_bounds.empty()) throw std::invalid_argument("window_ensemble: no lower bounds");
  FitEnsemble e;
  e.kind = kind;
  for (double lb : lower_bounds) {
    std::vector<double> wx, wy;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= lb && x[i] <= upper_bound) {
        wx.push_back(x[i]);
        wy.push_back(y[i]);
      }
    }
    FitResult f;
    try {
      f = fit_model(kind, wx, wy, options);
    } catch (const std::invalid_argument& err) {
      f.kind = kind;
      f.diagnostics = err.what();
    }
    if (!f.converged) ++e.failures;
    e.members.push_back({lb, std::move(f)});
  }

  std::vector<const EnsembleMember*> ok;
  for (const auto& m : e.members)
    if (m.fit.converged) ok.push_back(&m);
  if (ok.empty()) return e;
  const std::size_t k = ok.front()->fit.params.size();
  e.mean.assign(k, 0.0);
  e.error.assign(k, 0.0);
  const double n = static_cast<double>(ok.size());
  for (std::size_t c = 0; c < k; ++c) {
    double mean = 0.0, mean_err = 0.0;
    for (const auto* m : ok) {
      mean += m->fit.params[c];
      mean_err += m->fit.errors[c];
    }
    mean /= n;
    mean_err /= n;
    double var = 0.0;
    for (const auto* m : ok) var += (m->fit.params[c] - mean) * (m->fit.params[c] - mean);
    var = ok.size() > 1 ? var / (n - 1.0) : 0.0;
    e.mean[c] = mean;
    e.error[c] = std::hypot(std::sqrt(var), mean_err);
  }
  if (ok.size() > 1) {
    const std::size_t c = shape_param_count(kind) ? 1 : 0;
    double mx = 0.0, my = 0.0;
    for (const auto* m : ok) {
      mx += m->lower_bound;
      my += m->fit.params[c];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (const auto* m : ok) {
      sxy += (m->lower_bound - mx) * (m->fit.params[c] - my);
      sxx += (m->lower_bound - mx) * (m->lower_bound - mx);
    }
    e.trend_slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  return e;
}

std::vector<AicRank> aic_compare(const std::vector<FitResult>& fits, std::size_t sample_count) {
  std::vector<AicRank> out;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    if (fits[i].samples != sample_count) {
      throw std::invalid_argument("aic_compare: fits were made on different sample sets");
    }
    out.push_back({i, aic(fits[i].rss, sample_count, fits[i].params.size()), false, false});
  }
  std::stable_sort(out.begin(), out.end(), [](const AicRank& a, const AicRank& b) { return a.aic < b.aic; });
  if (out.empty()) return out;
  out.front().winner = true;
  const double best = out.front().aic;
  auto same = [&](double v) {
    if (std::isinf(best) || std::isinf(v)) return v == best;
    return std::abs(v - best) <= 1e-12 * std::max(1.0, std::abs(best));
  };
  std::size_t tied = 0;
  for (const auto& r : out) tied += same(r.aic);
  if (tied > 1)
    for (auto& r : out) r.tied = same(r.aic);
  return out;
}

WinLoss compare_over_windows(const std::vector<FitKind>& kinds, const std::vector<double>& x,
                             const std::vector<double>& y, const std::vector<double>& lower_bounds,
                             double upper_bound, const FitOptions& options) {
  if (kinds.empty()) throw std::invalid_argument("compare_over_windows: no candidate models");
  WinLoss w;
  w.per_kind.assign(kinds.size(), 0);
  for (double lb : lower_bounds) {
    std::vector<double> wx, wy;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= lb && x[i] <= upper_bound) {
        wx.push_back(x[i]);
        wy.push_back(y[i]);
      }
    }
    std::vector<FitResult> fits;
    for (FitKind k : kinds) fits.push_back(fit_model(k, wx, wy, options));
    const auto ranked = aic_compare(fits, fits.front().samples);
    ++w.per_kind[ranked.front().index];
    ++w.total;
  }
  const auto best = std::max_element(w.per_kind.begin(), w.per_kind.end());
  w.wins = *best;
  w.winner = kinds[static_cast<std::size_t>(best - w.per_kind.begin())];
  return w;
}

std::string format_win_loss(const WinLoss& w) {
  std::ostringstream s;
  s << w.wins << " / " << w.total << ", " << to_string(w.winner);
  return s.str();
}

std::string format_value_error(double value, double error) {
  char vbuf[64], ebuf[64];
  std::snprintf(vbuf, sizeof vbuf, "%.3f", value);
  if (error > 0.0 && std::isfinite(error)) {
    const int decimals = std::max(0, 2 - static_cast<int>(std::floor(std::log10(error))));
    std::snprintf(ebuf, sizeof ebuf, "%.*f", decimals, error);
  } else {
    std::snprintf(ebuf, sizeof ebuf, "%g", error);
  }
  return std::string(vbuf) + " ± " + ebuf;
}

bool parse_value_error(const std::string& text, double& value, double& error) {
  const std::string sep = "±";
  const auto pos = text.find(sep);
  if (pos == std::string::npos) return false;
  try {
    std::size_t used = 0;
    value = std::stod(text.substr(0, pos), &used);
    error = std::stod(text.substr(pos + sep.size()), &used);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::string to_string(FitKind kind) {
  switch (kind) {
    case FitKind::power_law: return "power_law";
    case FitKind::exponential: return "exponential";
    case FitKind::logarithmic: return "logarithmic";
    case FitKind::linear: return "linear";
  }
  return "power_law";
}

FitKind fit_kind_from_string(const std::string& s) {
  if (s == "power_law" || s == "power") return FitKind::power_law;
  if (s == "exponential") return FitKind::exponential;
  if (s == "logarithmic") return FitKind::logarithmic;
  if (s == "linear") return FitKind::linear;
  throw std::invalid_argument("unknown fit kind '" + s + "'");
}

}  // namespace tempent
