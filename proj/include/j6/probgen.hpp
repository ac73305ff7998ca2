#pragma once

// Seeded synthetic instances. The conflict families are defined by measurable
// certificates and produced by rejection sampling until they hold.

#include <cstdint>
#include <optional>
#include <string_view>

#include "j6/model.hpp"

namespace j6 {

enum class Family { Gaussian, Conflicting, RoleSwap };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

struct GeneratorSpec {
  int V = 8;
  int d = 4;
  int T = 1;
  std::uint64_t seed = 0;
  Family family = Family::Gaussian;
  WMode w_mode = WMode::FullMatrix;
  /// Explicit embedding row for SingleRow; defaults to y of the last position.
  std::optional<int> v_star;

  void validate() const;
};

/// RoleSwap accepts only instances with |J11|^2 / |J12|^2 below this.
inline constexpr double kRoleSwapRatio = 0.05;
/// Embedding scale used by RoleSwap; small W keeps grad_h Heat small.
inline constexpr double kRoleSwapEmbeddingScale = 0.1;
inline constexpr int kMaxGenerationAttempts = 100000;

struct Certificates {
  /// |J11|^2 / |J12|^2 at zero perturbation (infinity when |J12| = 0).
  double heat_ratio = 0.0;
  /// Flattened <grad_logits_heat, grad_logits_conf> over all positions.
  double logit_alignment = 0.0;
};

Certificates certify(const ProblemInstance& instance);

ProblemInstance generate(const GeneratorSpec& spec);

}  // namespace j6
