#pragma once

// Turning attribution scores into parameter updates: hard routing over J6 and
// J+, the temperature/contrast soft weighting, and three baselines.

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "j6/attribution.hpp"

namespace j6 {

enum class StrategyKind { HardJ6, HardJPlus, Soft, Static, Scalarized, GradSurgery };

std::string_view to_string(StrategyKind kind);
/// Accepts the CLI names: hard-j6, hard-jplus, soft, static, scalarized, gradsurgery.
StrategyKind parse_strategy(std::string_view text);

enum class PreNorm { None, MaxAbs };

std::string_view to_string(PreNorm pre_norm);
PreNorm parse_pre_norm(std::string_view text);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::HardJ6;
  double tau = 1.0;
  double gamma = 2.0;
  double eta_h = 0.05;
  double eta_w = 0.05;
  double beta_aux = 0.5;
  std::array<double, 2> lambda = {0.5, 0.5};
  PreNorm pre_norm = PreNorm::None;
  AlignmentMode alignment;

  /// Throws ConfigError naming the first out-of-range field.
  void validate() const;
};

struct UpdateDecision {
  Vector delta_h;
  Matrix delta_w;
  std::optional<int> chosen_index;           // 0..5 for J6, 1..15 for J+
  std::optional<std::array<double, 6>> alpha;
  std::vector<double> scores;
};

/// argmax with ties resolved to the lowest index.
int argmax_lowest(std::span<const double> values);

UpdateDecision hard_route_j6(const J6Vector& s, const GradientSet& gs,
                             const StrategyConfig& cfg);
/// chosen_index is reported 1-based, matching the action table rows.
UpdateDecision hard_route_jplus(const JPlusVector& s, const GradientSet& gs,
                                const StrategyConfig& cfg);

/// Contrast step: w_i^gamma, not renormalized.
std::vector<double> reward_powers(std::span<const double> weights, double gamma);
/// Divides by the sum; a zero sum is returned unchanged.
std::vector<double> renormalize(std::span<const double> weights);

std::array<double, 6> soft_weights(const J6Vector& s, const StrategyConfig& cfg);
UpdateDecision soft_update(const std::array<double, 6>& alpha, const GradientSet& gs,
                           const StrategyConfig& cfg);

UpdateDecision static_baseline(const GradientSet& gs, const StrategyConfig& cfg);
UpdateDecision scalarized_baseline(const GradientSet& gs, const StrategyConfig& cfg);

/// PCGrad projection of a pair of same-shaped gradients. Each gradient that
/// conflicts with the other (negative inner product) loses its component
/// along the other's original direction.
std::pair<Matrix, Matrix> project_conflicting(const Matrix& g1, const Matrix& g2);

UpdateDecision gradsurgery_baseline(const GradientSet& gs, const StrategyConfig& cfg);

/// Computes the score vector the strategy needs and produces its decision.
/// Baselines still report J6 scores so traces stay comparable.
UpdateDecision decide(const GradientSet& gs, const StrategyConfig& cfg,
                      const ProblemInstance& instance, const Perturbations& pert);

}  // namespace j6
