#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "j6/strategies.hpp"

namespace j6 {

struct RunConfig {
  int max_steps = 200;
  double grad_tol = 1e-8;  // stop once all four block norms are below this
  double loss_tol = 0.0;   // stop once |d ob1| + |d ob2| falls below this; 0 disables
  std::uint64_t seed = 0;
  double init_scale = 0.0;
  /// Verify zero-sum logit gradients and loss bounds on every forward pass.
  bool check_invariants = false;

  void validate() const;
};

enum class StopReason { MaxSteps, GradTol, LossTol };

std::string_view to_string(StopReason reason);
StopReason parse_stop_reason(std::string_view text);

struct TraceRecord {
  int step = 0;
  double ob1 = 0.0;
  double ob2 = 0.0;
  double entropy = 0.0;
  std::array<double, 4> norms{};  // n11, n12, n21, n22
  std::vector<double> scores;     // 6 entries, or 15 for hard-jplus
  /// Hard strategies: the chosen index. Soft: argmax of alpha. Baselines: -1.
  int slot = -1;
  std::optional<std::array<double, 6>> alpha;
  double dh_norm = 0.0;
  double dw_norm = 0.0;

  bool operator==(const TraceRecord&) const = default;
};

struct RunResult {
  StrategyKind kind = StrategyKind::HardJ6;
  Perturbations final_pert;
  ObjectivePair final_objectives;
  std::vector<TraceRecord> trace;
  StopReason stop_reason = StopReason::MaxSteps;
};

/// Zeros for init_scale == 0, else iid uniform in [-init_scale, init_scale].
Perturbations init_perturbations(const ProblemInstance& instance, double init_scale,
                                 std::uint64_t seed);

/// Precedence GradTol > LossTol > MaxSteps, evaluated on the records so far.
std::optional<StopReason> stop_check(const std::vector<TraceRecord>& records,
                                     const RunConfig& rcfg);

/// Throws NumericError if any of the forward-pass invariants is violated.
void verify_forward_invariants(const Matrix& logits, const std::vector<int>& y);

/// Sequential descent loop. Throws NumericError naming the step when a loss
/// turns non-finite, ConfigError on inconsistent configuration.
RunResult run(const ProblemInstance& instance, const StrategyConfig& cfg,
              const RunConfig& rcfg);

}  // namespace j6
