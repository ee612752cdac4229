#include "tempent/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tempent {

namespace {

// Pulls the overall magnitude of `t` into `log_norm`; returns false for zero.
bool absorb_norm(DenseTensor& t, double& log_norm) {
  const double n = t.norm();
  if (n == 0.0 || !std::isfinite(n)) return false;
  t *= cplx(1.0 / n);
  log_norm += std::log(n);
  return true;
}

LogScalar finish(cplx v, double log_scale) {
  LogScalar out;
  const double a = std::abs(v);
  if (a == 0.0) {
    out.log_abs = -std::numeric_limits<double>::infinity();
    out.phase = 1.0;
    return out;
  }
  out.log_abs = std::log(a) + log_scale;
  out.phase = v / a;
  return out;
}

// Right-to-left sweep from a left-canonical state whose norm sits on the last
// site. Bonds above `cap` are cut by SVD; the rest get an LQ step.
double gauge_sweep(Mps& psi, std::size_t cap, double rel_cutoff) {
  double worst = 0.0;
  const std::size_t n = psi.size();
  for (std::size_t t = n; t-- > 1;) {
    DenseTensor& site = psi.sites[t];
    const std::size_t dl = site.dim(0), d = site.dim(1), dr = site.dim(2);
    const auto m = site.as_matrix(dl);
    Matrix left, right;
    if (dl > cap) {
      MatrixSvd svd = svd_truncate(m, {cap, rel_cutoff, false, false});
      if (svd.total_weight > 0) worst = std::max(worst, svd.discarded_weight / svd.total_weight);
      left = svd.u;
      for (Eigen::Index j = 0; j < left.cols(); ++j) left.col(j) *= svd.s[j];
      right = std::move(svd.vh);
    } else {
      thin_lq(m, left, right);
    }
    const std::size_t k = static_cast<std::size_t>(right.rows());
    site = DenseTensor::from_matrix(right).reshaped({k, d, dr});
    DenseTensor& prev = psi.sites[t - 1];
    const std::size_t pl = prev.dim(0), pd = prev.dim(1);
    Matrix merged = prev.as_matrix(pl * pd) * left;
    prev = DenseTensor::from_matrix(merged).reshaped({pl, pd, k});
  }
  if (n > 0 && !absorb_norm(psi.sites[0], psi.log_norm)) {
    psi.log_norm = -std::numeric_limits<double>::infinity();
  }
  return worst;
}

}  // namespace

std::size_t Mps::bond(std::size_t i) const { return sites.at(i).dim(2); }

std::size_t Mps::max_bond() const {
  std::size_t b = 1;
  for (const auto& s : sites) b = std::max(b, s.dim(2));
  return b;
}

Mps product_mps(const DenseTensor& v, std::size_t n) {
  Mps psi;
  const std::size_t d = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    psi.sites.push_back(v.reshaped({1, d, 1}));
  }
  right_canonicalize(psi);
  return psi;
}

void right_canonicalize(Mps& psi) {
  // A left-to-right QR pass first makes the left part isometric so the
  // closing sweep yields a true right-canonical form.
  const std::size_t n = psi.size();
  for (std::size_t t = 0; t + 1 < n; ++t) {
    DenseTensor& site = psi.sites[t];
    const std::size_t dl = site.dim(0), d = site.dim(1);
    Matrix q, r;
    thin_qr(site.as_matrix(dl * d), q, r);
    const std::size_t k = static_cast<std::size_t>(q.cols());
    site = DenseTensor::from_matrix(q).reshaped({dl, d, k});
    DenseTensor& next = psi.sites[t + 1];
    const std::size_t nd = next.dim(1), nr = next.dim(2);
    Matrix merged = r * next.as_matrix(next.dim(0));
    next = DenseTensor::from_matrix(merged).reshaped({k, nd, nr});
    absorb_norm(next, psi.log_norm);
  }
  gauge_sweep(psi, std::numeric_limits<std::size_t>::max(), 0.0);
}

double zip_apply(Mps& psi, const MpoSites& mpo, const TruncationPolicy& policy) {
  const std::size_t n = psi.size();
  if (mpo.size() != n) throw std::invalid_argument("zip_apply: MPO length differs from MPS");
  if (n == 0) return 0.0;
  if (mpo.front().dim(0) != 1 || mpo.back().dim(3) != 1) {
    throw std::invalid_argument("zip_apply: MPO outer bonds must be 1");
  }
  double worst = 0.0;
  DenseTensor carry({1, 1, 1}, {1.0});  // [new, w, old]
  for (std::size_t t = 0; t < n; ++t) {
    const DenseTensor& a = psi.sites[t];
    const DenseTensor& w = mpo[t];
    if (w.dim(1) != a.dim(1)) throw std::invalid_argument("zip_apply: physical dimension mismatch");
    const std::size_t dn = carry.dim(0);
    const std::size_t dout = w.dim(2), wr = w.dim(3), dor = a.dim(2);
    DenseTensor y = contract(carry, a, {{2, 0}});          // [new, w, d, old']
    DenseTensor z = contract(y, w, {{1, 0}, {2, 1}});      // [new, old', dout, w']
    z = z.permuted({0, 2, 3, 1});                          // [new, dout, w', old']
    if (t + 1 == n) {
      psi.sites[t] = std::move(z).reshaped({dn, dout, wr * dor});
      break;
    }
    MatrixSvd svd = svd_truncate(z.as_matrix(dn * dout), policy);
    if (svd.total_weight > 0) worst = std::max(worst, svd.discarded_weight / svd.total_weight);
    const std::size_t k = svd.s.size();
    psi.sites[t] = DenseTensor::from_matrix(svd.u).reshaped({dn, dout, k});
    for (std::size_t j = 0; j < k; ++j) svd.vh.row(static_cast<Eigen::Index>(j)) *= svd.s[j];
    carry = DenseTensor::from_matrix(svd.vh).reshaped({k, wr, dor});
    if (!absorb_norm(carry, psi.log_norm)) {
      psi.log_norm = -std::numeric_limits<double>::infinity();
    }
  }
  worst = std::max(worst, gauge_sweep(psi, policy.max_rank, policy.rel_cutoff));
  return worst;
}

LogScalar transfer_contract(const Mps& a, const Mps& b,
                            const std::function<const Matrix&(std::size_t)>& site_op,
                            bool conj_a) {
  if (a.size() != b.size()) throw std::invalid_argument("transfer_contract: length mismatch");
  double log_scale = a.log_norm + b.log_norm;
  DenseTensor env({1, 1}, {1.0});  // [a, b]
  for (std::size_t t = 0; t < a.size(); ++t) {
    const DenseTensor at = conj_a ? a.sites[t].conj() : a.sites[t];
    const Matrix& m = site_op(t);
    const DenseTensor op = DenseTensor::from_matrix(m);
    DenseTensor t1 = contract(env, at, {{0, 0}});      // [b, s, a']
    DenseTensor t2 = contract(t1, op, {{1, 0}});       // [b, a', s']
    env = contract(t2, b.sites[t], {{0, 0}, {2, 1}});  // [a', b']
    const double m_abs = env.max_abs();
    if (m_abs == 0.0) return finish(0.0, 0.0);
    env *= cplx(1.0 / m_abs);
    log_scale += std::log(m_abs);
  }
  return finish(env[0], log_scale);
}

LogScalar overlap(const Mps& a, const Mps& b) {
  if (a.size() != b.size()) throw std::invalid_argument("overlap: length mismatch");
  std::vector<Matrix> ids;
  for (const auto& s : a.sites) ids.push_back(Matrix::Identity(s.dim(1), s.dim(1)));
  return transfer_contract(a, b, [&](std::size_t t) -> const Matrix& { return ids[t]; }, true);
}

LogScalar cap_contract(const Mps& a, const std::function<const DenseTensor&(std::size_t)>& cap) {
  double log_scale = a.log_norm;
  DenseTensor env({1}, {1.0});
  for (std::size_t t = 0; t < a.size(); ++t) {
    DenseTensor x = contract(env, a.sites[t], {{0, 0}});  // [s, a']
    env = contract(cap(t), x, {{0, 0}});                  // [a']
    const double m_abs = env.max_abs();
    if (m_abs == 0.0) return finish(0.0, 0.0);
    env *= cplx(1.0 / m_abs);
    log_scale += std::log(m_abs);
  }
  return finish(env[0], log_scale);
}

std::vector<cplx> to_dense(const Mps& a) {
  DenseTensor acc({1, 1}, {std::exp(a.log_norm)});  // [amplitudes, bond]
  for (const auto& s : a.sites) {
    DenseTensor next = contract(acc, s, {{1, 0}});  // [amp, d, bond]
    acc = std::move(next).reshaped({next.dim(0) * next.dim(1), next.dim(2)});
  }
  return {acc.data().begin(), acc.data().end()};
}

}  // namespace tempent
