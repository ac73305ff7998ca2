#include "j6/optimizer.hpp"

#include <cmath>
#include <random>
#include <string>

#include "j6/errors.hpp"

namespace j6 {

void RunConfig::validate() const {
  if (max_steps < 0) throw ConfigError("max_steps must be non-negative");
  if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol must be non-negative");
  if (!(loss_tol >= 0.0)) throw ConfigError("loss_tol must be non-negative");
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw ConfigError("init_scale must be non-negative");
  }
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::MaxSteps: return "MaxSteps";
    case StopReason::GradTol: return "GradTol";
    case StopReason::LossTol: return "LossTol";
  }
  return "MaxSteps";
}

StopReason parse_stop_reason(std::string_view text) {
  for (auto r : {StopReason::MaxSteps, StopReason::GradTol, StopReason::LossTol}) {
    if (text == to_string(r)) return r;
  }
  throw FormatError("unknown stop reason '" + std::string(text) + "'");
}

Perturbations init_perturbations(const ProblemInstance& instance, double init_scale,
                                 std::uint64_t seed) {
  Perturbations pert = Perturbations::zeros(instance);
  if (init_scale == 0.0) return pert;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (double& v : pert.h) v = dist(rng);
  for (double& v : pert.w.reshaped()) v = dist(rng);
  return pert;
}

std::optional<StopReason> stop_check(const std::vector<TraceRecord>& records,
                                     const RunConfig& rcfg) {
  if (records.empty()) {
    if (rcfg.max_steps == 0) return StopReason::MaxSteps;
    return std::nullopt;
  }
  const TraceRecord& last = records.back();
  bool all_small = true;
  for (double n : last.norms) all_small = all_small && n < rcfg.grad_tol;
  if (all_small) return StopReason::GradTol;
  if (rcfg.loss_tol > 0.0 && records.size() >= 2) {
    const TraceRecord& prev = records[records.size() - 2];
    if (std::abs(last.ob1 - prev.ob1) + std::abs(last.ob2 - prev.ob2) < rcfg.loss_tol) {
      return StopReason::LossTol;
    }
  }
  if (static_cast<int>(records.size()) >= rcfg.max_steps) return StopReason::MaxSteps;
  return std::nullopt;
}

void verify_forward_invariants(const Matrix& logits, const std::vector<int>& y) {
  const double log_v = std::log(static_cast<double>(logits.cols()));
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Vector p = softmax(logits.row(t).transpose());
    const double e = entropy(p);
    if (!(e >= 0.0 && e <= log_v + 1e-12)) {
      throw NumericError("entropy " + std::to_string(e) + " outside [0, log V] at position " +
                         std::to_string(t));
    }
    const double heat_sum = grad_logits_heat(p, y[t]).sum();
    const double conf_sum = grad_logits_conf(p).sum();
    if (std::abs(heat_sum) > 1e-10 || std::abs(conf_sum) > 1e-10) {
      throw NumericError("logit gradient does not sum to zero at position " +
                         std::to_string(t));
    }
  }
  const double ob1 = heat_loss(logits, y);
  const double ob2 = confidence_loss(logits);
  if (!(ob1 >= 0.0)) throw NumericError("negative heat loss");
  if (!(ob2 <= 0.0 && ob2 >= -log_v - 1e-12)) {
    throw NumericError("confidence loss outside [-log V, 0]");
  }
}

RunResult run(const ProblemInstance& instance, const StrategyConfig& cfg,
              const RunConfig& rcfg) {
  instance.validate();
  cfg.validate();
  rcfg.validate();
  check_alignment(instance, cfg.alignment);

  RunResult result;
  result.kind = cfg.kind;
  Perturbations pert = init_perturbations(instance, rcfg.init_scale, rcfg.seed);

  std::optional<StopReason> stop = stop_check(result.trace, rcfg);
  for (int step = 0; !stop; ++step) {
    const Matrix logits = compute_logits(instance, pert);
    TraceRecord rec;
    rec.step = step;
    rec.ob1 = heat_loss(logits, instance.y);
    rec.ob2 = confidence_loss(logits);
    rec.entropy = -rec.ob2;
    if (!std::isfinite(rec.ob1) || !std::isfinite(rec.ob2)) {
      throw NumericError("non-finite loss at step " + std::to_string(step));
    }
    if (rcfg.check_invariants) verify_forward_invariants(logits, instance.y);

    const GradientSet gs = compute_gradient_set(instance, pert);
    rec.norms = gs.norms();
    const UpdateDecision decision = decide(gs, cfg, instance, pert);
    if (!decision.delta_h.allFinite() || !decision.delta_w.allFinite()) {
      throw NumericError("non-finite update at step " + std::to_string(step));
    }
    rec.scores = decision.scores;
    if (decision.chosen_index) {
      rec.slot = *decision.chosen_index;
    } else if (decision.alpha) {
      rec.slot = argmax_lowest(*decision.alpha);
    }
    rec.alpha = decision.alpha;
    rec.dh_norm = decision.delta_h.norm();
    rec.dw_norm = decision.delta_w.norm();

    pert.h += decision.delta_h;
    pert.w += decision.delta_w;
    result.trace.push_back(std::move(rec));
    stop = stop_check(result.trace, rcfg);
  }

  result.stop_reason = *stop;
  result.final_objectives = evaluate(instance, pert);
  if (!std::isfinite(result.final_objectives.ob1) ||
      !std::isfinite(result.final_objectives.ob2)) {
    throw NumericError("non-finite loss after step " +
                       std::to_string(result.trace.size()));
  }
  result.final_pert = std::move(pert);
  return result;
}

}  // namespace j6
