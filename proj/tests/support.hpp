#pragma once
// Shared helpers for the unit tests.

#include <cstdint>
#include <random>

#include "tempent/tensor.hpp"

namespace testing_support {

inline tempent::DenseTensor random_tensor(tempent::Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  tempent::DenseTensor t(std::move(shape));
  for (auto& v : t.storage()) v = {g(rng), g(rng)};
  return t;
}

inline tempent::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  return random_tensor({rows, cols}, seed).to_matrix(rows);
}

}  // namespace testing_support
