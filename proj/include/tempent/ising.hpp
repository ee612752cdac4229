#pragma once

#include <cstddef>
#include <vector>

#include "tempent/tensor.hpp"

namespace tempent {

/// Kicked/Trotterized Ising chain H = -J sum XX - sum (h Z + g X).
struct IsingParams {
  double J = 1.0;
  double h = 0.5;
  double g = 0.0;
  double dt = 0.1;

  void validate() const;
  bool operator==(const IsingParams&) const = default;
};

/// exp(-i tau (h Z + g X)) as a 2x2 matrix [out, in].
DenseTensor single_qubit_rotation(double h, double g, double tau);

/// Half-step rotation A = exp(-i dt/2 (h Z + g X)).
DenseTensor single_qubit_gate(const IsingParams& p);

/// exp(+i dt J X(x)X) split as sum_k left[.,.,k] (x) right[.,.,k].
/// Tensors are [in, out, k]; each carries sqrt(c_k) with c = (cos, i sin).
struct GateSplit {
  DenseTensor left_tensor;
  DenseTensor right_tensor;
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  std::size_t bond_dim() const { return left_tensor.dim(2); }
};

GateSplit split_two_qubit_gate(const IsingParams& p);

/// One Trotter step A B A written as an MPO row.
/// bulk: [in, out, left, right]; edge: [in, out, bond].
/// Folded tensors pair (forward, conjugated backward) on every leg with
/// combined index 2*x + x'.
struct StepMpo {
  DenseTensor bulk_tensor;
  DenseTensor edge_tensor;
  DenseTensor folded_bulk;
  DenseTensor folded_edge;
};

StepMpo build_step_mpo(const IsingParams& p);

/// Folds a tensor with its conjugate leg by leg: out[(a,a'),(b,b'),...].
DenseTensor fold(const DenseTensor& t);

/// (|lambda1| + |lambda2|) / 2: growth of Tr rho_L per step.
double trace_growth_factor(const IsingParams& p);

/// Dense 2^W x 2^W operator of an open row of W sites (edge, bulk..., edge).
/// Site 0 is the most significant bit.
Matrix row_operator(const StepMpo& mpo, std::size_t width);

/// Vectorized identity cap for a folded leg: (1, 0, 0, 1).
DenseTensor identity_cap();

}  // namespace tempent
