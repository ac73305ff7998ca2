#pragma once

#include <cstdint>
#include <random>

#include "j6/probgen.hpp"

namespace testing {

/// Gaussian instance whose dimensions (V in [2,8], d in [1,6], T in [1,3])
/// are drawn from the seed as well.
inline j6::ProblemInstance random_instance(std::uint64_t seed, j6::WMode mode) {
  std::mt19937_64 rng(seed * 7919 + 13);
  j6::GeneratorSpec spec;
  spec.V = std::uniform_int_distribution<int>(2, 8)(rng);
  spec.d = std::uniform_int_distribution<int>(1, 6)(rng);
  spec.T = std::uniform_int_distribution<int>(1, 3)(rng);
  spec.seed = seed;
  spec.w_mode = mode;
  return j6::generate(spec);
}

}  // namespace testing
