#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "tempent/linalg.hpp"
#include "tempent/tensor.hpp"

namespace tempent {

/// Open-boundary MPS with sites [left, phys, right]. The represented vector
/// is exp(log_norm) times the plain contraction of `sites`. Outer bonds have
/// dimension 1. With zero sites the vector is the scalar exp(log_norm).
struct Mps {
  std::vector<DenseTensor> sites;
  double log_norm = 0.0;

  std::size_t size() const { return sites.size(); }
  std::size_t bond(std::size_t i) const;  // bond to the right of site i
  std::size_t max_bond() const;
};

/// MPO sites are [w_left, in, out, w_right].
using MpoSites = std::vector<DenseTensor>;

/// A complex number kept as (log|z|, z/|z|).
struct LogScalar {
  double log_abs = 0.0;
  cplx phase{1.0, 0.0};

  cplx value() const { return std::exp(log_abs) * phase; }
};

/// Product MPS where every site holds `v` (shape [d]).
Mps product_mps(const DenseTensor& v, std::size_t n);

/// Right-canonical form with unit-norm tensors; the norm moves to log_norm.
void right_canonicalize(Mps& psi);

/// Applies `mpo` and compresses in one left-to-right pass (zip-up), then
/// restores right-canonical form with a right-to-left sweep that also
/// truncates any bond above the cap. The input must be right-canonical.
/// Returns the largest relative discarded weight of any single truncation.
double zip_apply(Mps& psi, const MpoSites& mpo, const TruncationPolicy& policy);

/// sum_{s,s'} a[s] M_t[s,s'] b[s'] over all sites, with M_t = site_op(t),
/// a [d,d] matrix. With conj_a the a-amplitudes are conjugated.
LogScalar transfer_contract(const Mps& a, const Mps& b,
                            const std::function<const Matrix&(std::size_t)>& site_op,
                            bool conj_a);

/// <a|b>.
LogScalar overlap(const Mps& a, const Mps& b);

/// Contracts every physical leg with a vector: sum_s a[s] caps_t[s].
LogScalar cap_contract(const Mps& a, const std::function<const DenseTensor&(std::size_t)>& cap);

/// Dense vector with the first site as the most significant index.
std::vector<cplx> to_dense(const Mps& a);

}  // namespace tempent
