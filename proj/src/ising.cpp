#include "tempent/ising.hpp"

#include <cmath>
#include <stdexcept>

namespace tempent {

namespace {

const cplx kI{0.0, 1.0};

// Pauli I or X, as [out, in].
Matrix pauli_power(std::size_t k) {
  Matrix o = Matrix::Zero(2, 2);
  if (k == 0) {
    o(0, 0) = o(1, 1) = 1.0;
  } else {
    o(0, 1) = o(1, 0) = 1.0;
  }
  return o;
}

// The split drops a vanishing second channel; the step MPO keeps it so
// folded temporal legs always have dimension 4.
std::vector<cplx> bond_weights(const IsingParams& p, bool drop_zero) {
  const double theta = p.J * p.dt;
  std::vector<cplx> c{std::cos(theta)};
  const double s = std::sin(theta);
  if (s != 0.0 || !drop_zero) c.push_back(kI * s);
  return c;
}

}  // namespace

void IsingParams::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("IsingParams: dt must be > 0");
  if (!std::isfinite(J) || !std::isfinite(h) || !std::isfinite(g)) {
    throw std::invalid_argument("IsingParams: J, h, g must be finite");
  }
}

DenseTensor single_qubit_rotation(double h, double g, double tau) {
  const double n = std::hypot(h, g);
  DenseTensor a({2, 2});
  if (n == 0.0) {
    a.at({0, 0}) = a.at({1, 1}) = 1.0;
    return a;
  }
  const double c = std::cos(tau * n);
  const double s = std::sin(tau * n) / n;
  // cos(tau n) - i sin(tau n) (hZ + gX)/n
  a.at({0, 0}) = cplx(c, -s * h);
  a.at({1, 1}) = cplx(c, s * h);
  a.at({0, 1}) = a.at({1, 0}) = cplx(0.0, -s * g);
  return a;
}

DenseTensor single_qubit_gate(const IsingParams& p) {
  p.validate();
  return single_qubit_rotation(p.h, p.g, 0.5 * p.dt);
}

GateSplit split_two_qubit_gate(const IsingParams& p) {
  p.validate();
  const auto c = bond_weights(p, true);
  const std::size_t k = c.size();
  DenseTensor half({2, 2, k});
  for (std::size_t b = 0; b < k; ++b) {
    const cplx w = std::sqrt(c[b]);
    const Matrix o = pauli_power(b);
    for (std::size_t in = 0; in < 2; ++in)
      for (std::size_t out = 0; out < 2; ++out) half.at({in, out, b}) = w * o(out, in);
  }
  GateSplit s;
  s.left_tensor = half;
  s.right_tensor = half;
  s.lambda1 = 2.0 * std::cos(p.J * p.dt);
  s.lambda2 = 2.0 * std::sin(p.J * p.dt);
  return s;
}

double trace_growth_factor(const IsingParams& p) {
  return std::abs(std::cos(p.J * p.dt)) + std::abs(std::sin(p.J * p.dt));
}

DenseTensor fold(const DenseTensor& t) {
  const std::size_t r = t.rank();
  const DenseTensor both = outer(t, t.conj());
  std::vector<std::size_t> order;
  Shape shape;
  for (std::size_t leg = 0; leg < r; ++leg) {
    order.push_back(leg);
    order.push_back(leg + r);
    shape.push_back(t.dim(leg) * t.dim(leg));
  }
  return both.permuted(order).reshaped(shape);
}

StepMpo build_step_mpo(const IsingParams& p) {
  p.validate();
  const Matrix a = single_qubit_gate(p).to_matrix(2);
  const auto c = bond_weights(p, false);
  const std::size_t k = c.size();

  StepMpo m;
  m.bulk_tensor = DenseTensor({2, 2, k, k});
  m.edge_tensor = DenseTensor({2, 2, k});
  for (std::size_t l = 0; l < k; ++l) {
    const Matrix edge = a * pauli_power(l) * a * std::sqrt(c[l]);
    for (std::size_t in = 0; in < 2; ++in)
      for (std::size_t out = 0; out < 2; ++out) m.edge_tensor.at({in, out, l}) = edge(out, in);
    for (std::size_t r = 0; r < k; ++r) {
      const Matrix bulk =
          a * pauli_power(l) * pauli_power(r) * a * (std::sqrt(c[l]) * std::sqrt(c[r]));
      for (std::size_t in = 0; in < 2; ++in)
        for (std::size_t out = 0; out < 2; ++out) m.bulk_tensor.at({in, out, l, r}) = bulk(out, in);
    }
  }
  m.folded_bulk = fold(m.bulk_tensor);
  m.folded_edge = fold(m.edge_tensor);
  return m;
}

Matrix row_operator(const StepMpo& mpo, std::size_t width) {
  if (width < 2) throw std::invalid_argument("row_operator: width must be >= 2");
  // acc[out_1..out_j, in_1..in_j, bond] built site by site, then permuted.
  DenseTensor acc = mpo.edge_tensor.permuted({1, 0, 2});  // [out, in, b]
  std::size_t dim = 2;
  for (std::size_t site = 1; site < width; ++site) {
    const bool last = site + 1 == width;
    const DenseTensor& t = last ? mpo.edge_tensor : mpo.bulk_tensor;
    DenseTensor next = contract(acc, t, {{2, 2}});  // [O, I, in, out, (right)]
    if (last) {
      next = next.permuted({0, 3, 1, 2});  // [O, out, I, in]
      acc = next.reshaped({dim * 2, dim * 2});
    } else {
      next = next.permuted({0, 3, 1, 2, 4});
      acc = next.reshaped({dim * 2, dim * 2, t.dim(3)});
    }
    dim *= 2;
  }
  return acc.to_matrix(dim);
}

DenseTensor identity_cap() { return DenseTensor({4}, {1.0, 0.0, 0.0, 1.0}); }

}  // namespace tempent
