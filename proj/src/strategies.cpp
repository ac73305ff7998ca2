#include "j6/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "j6/errors.hpp"

namespace j6 {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::HardJ6: return "hard-j6";
    case StrategyKind::HardJPlus: return "hard-jplus";
    case StrategyKind::Soft: return "soft";
    case StrategyKind::Static: return "static";
    case StrategyKind::Scalarized: return "scalarized";
    case StrategyKind::GradSurgery: return "gradsurgery";
  }
  return "hard-j6";
}

StrategyKind parse_strategy(std::string_view text) {
  for (auto kind : {StrategyKind::HardJ6, StrategyKind::HardJPlus, StrategyKind::Soft,
                    StrategyKind::Static, StrategyKind::Scalarized,
                    StrategyKind::GradSurgery}) {
    if (text == to_string(kind)) return kind;
  }
  throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

std::string_view to_string(PreNorm pre_norm) {
  return pre_norm == PreNorm::None ? "none" : "maxabs";
}

PreNorm parse_pre_norm(std::string_view text) {
  if (text == "none") return PreNorm::None;
  if (text == "maxabs") return PreNorm::MaxAbs;
  throw ConfigError("unknown pre-norm '" + std::string(text) + "'");
}

void StrategyConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (!(gamma > 1.0) || !std::isfinite(gamma)) throw ConfigError("gamma must exceed 1");
  if (!(eta_h > 0.0) || !std::isfinite(eta_h)) throw ConfigError("eta_h must be positive");
  if (!(eta_w > 0.0) || !std::isfinite(eta_w)) throw ConfigError("eta_w must be positive");
  if (!(beta_aux >= 0.0 && beta_aux <= 1.0)) throw ConfigError("beta_aux must lie in [0, 1]");
  if (!(lambda[0] >= 0.0) || !(lambda[1] >= 0.0) ||
      std::abs(lambda[0] + lambda[1] - 1.0) > 1e-12) {
    throw ConfigError("lambda must be two non-negative weights summing to 1");
  }
}

int argmax_lowest(std::span<const double> values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

UpdateDecision zero_decision(const GradientSet& gs) {
  UpdateDecision d;
  d.delta_h = Vector::Zero(gs.J11.size());
  d.delta_w = Matrix::Zero(gs.J12.rows(), gs.J12.cols());
  return d;
}

}  // namespace

UpdateDecision hard_route_j6(const J6Vector& s, const GradientSet& gs,
                             const StrategyConfig& cfg) {
  UpdateDecision d = zero_decision(gs);
  d.scores.assign(s.begin(), s.end());
  const int idx = argmax_lowest(s);
  d.chosen_index = idx;
  switch (idx) {
    case 0: d.delta_h = -cfg.eta_h * gs.J11; break;
    case 1:
      d.delta_h = -cfg.eta_h * gs.J11;
      d.delta_w = -cfg.eta_w * gs.J22;
      break;
    case 2: d.delta_w = -cfg.eta_w * gs.J12; break;
    case 3: d.delta_h = -cfg.eta_h * gs.J21; break;
    case 4: d.delta_w = -cfg.eta_w * gs.J22; break;
    case 5:
      d.delta_h = -cfg.eta_h * gs.J21;
      d.delta_w = -cfg.eta_w * gs.J12;
      break;
  }
  return d;
}

UpdateDecision hard_route_jplus(const JPlusVector& s, const GradientSet& gs,
                                const StrategyConfig& cfg) {
  UpdateDecision d = zero_decision(gs);
  d.scores.assign(s.begin(), s.end());
  const int row = argmax_lowest(s) + 1;
  d.chosen_index = row;
  const double eh = cfg.eta_h;
  const double ew = cfg.eta_w;
  const double aux = cfg.beta_aux;
  const Vector h_sum = gs.J11 + gs.J21;
  const Matrix w_sum = gs.J12 + gs.J22;
  switch (row) {
    case 1: d.delta_h = -eh * gs.J11; break;
    case 2: d.delta_w = -ew * gs.J12; break;
    case 3: d.delta_h = -eh * gs.J21; break;
    case 4: d.delta_w = -ew * gs.J22; break;
    case 5:
      d.delta_h = -eh * gs.J11;
      d.delta_w = -ew * gs.J22;
      break;
    case 6:
      d.delta_h = -eh * gs.J21;
      d.delta_w = -ew * gs.J12;
      break;
    case 7:
    case 14: d.delta_h = -eh * h_sum; break;
    case 8:
    case 15: d.delta_w = -ew * w_sum; break;
    case 9:
      d.delta_h = -eh * h_sum;
      d.delta_w = -ew * w_sum;
      break;
    case 10:
      d.delta_h = -eh * gs.J11;
      d.delta_w = -ew * aux * w_sum;
      break;
    case 11:
      d.delta_h = -eh * gs.J21;
      d.delta_w = -ew * aux * w_sum;
      break;
    case 12:
      d.delta_w = -ew * gs.J12;
      d.delta_h = -eh * aux * h_sum;
      break;
    case 13:
      d.delta_w = -ew * gs.J22;
      d.delta_h = -eh * aux * h_sum;
      break;
  }
  return d;
}

std::vector<double> reward_powers(std::span<const double> weights, double gamma) {
  std::vector<double> out(weights.size());
  std::transform(weights.begin(), weights.end(), out.begin(),
                 [gamma](double w) { return gamma == 2.0 ? w * w : std::pow(w, gamma); });
  return out;
}

std::vector<double> renormalize(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> out(weights.begin(), weights.end());
  if (total > 0.0) {
    for (double& w : out) w /= total;
  }
  return out;
}

std::array<double, 6> soft_weights(const J6Vector& s, const StrategyConfig& cfg) {
  std::array<double, 6> scores = s;
  if (cfg.pre_norm == PreNorm::MaxAbs) {
    double max_abs = 0.0;
    for (double v : scores) max_abs = std::max(max_abs, std::abs(v));
    for (double& v : scores) v /= max_abs + 1e-12;
  }
  const double top = *std::max_element(scores.begin(), scores.end());
  std::array<double, 6> tilde{};
  for (std::size_t i = 0; i < 6; ++i) tilde[i] = std::exp((scores[i] - top) / cfg.tau);
  const std::vector<double> softmaxed = renormalize(tilde);
  const std::vector<double> alpha = renormalize(reward_powers(softmaxed, cfg.gamma));
  std::array<double, 6> out{};
  std::copy(alpha.begin(), alpha.end(), out.begin());
  return out;
}

UpdateDecision soft_update(const std::array<double, 6>& alpha, const GradientSet& gs,
                           const StrategyConfig& cfg) {
  UpdateDecision d;
  // alpha[1] and alpha[5] (the alignment slots) are not routed to any block.
  d.delta_h = -cfg.eta_h * (alpha[0] * gs.J11 + alpha[3] * gs.J21);
  d.delta_w = -cfg.eta_w * (alpha[2] * gs.J12 + alpha[4] * gs.J22);
  d.alpha = alpha;
  return d;
}

UpdateDecision static_baseline(const GradientSet& gs, const StrategyConfig& cfg) {
  UpdateDecision d;
  d.delta_h = -cfg.eta_h * gs.J11;
  d.delta_w = -cfg.eta_w * gs.J22;
  return d;
}

UpdateDecision scalarized_baseline(const GradientSet& gs, const StrategyConfig& cfg) {
  const auto [l1, l2] = cfg.lambda;
  UpdateDecision d;
  d.delta_h = -cfg.eta_h * (l1 * gs.J11 + l2 * gs.J21);
  d.delta_w = -cfg.eta_w * (l1 * gs.J12 + l2 * gs.J22);
  return d;
}

std::pair<Matrix, Matrix> project_conflicting(const Matrix& g1, const Matrix& g2) {
  const double dot = flat_dot(g1, g2);
  Matrix p1 = g1;
  Matrix p2 = g2;
  if (dot < 0.0) {
    const double n2 = g2.squaredNorm();
    const double n1 = g1.squaredNorm();
    if (n2 > 0.0) p1 = g1 - (dot / n2) * g2;
    if (n1 > 0.0) p2 = g2 - (dot / n1) * g1;
  }
  return {std::move(p1), std::move(p2)};
}

UpdateDecision gradsurgery_baseline(const GradientSet& gs, const StrategyConfig& cfg) {
  UpdateDecision d;
  const auto [h1, h2] = project_conflicting(gs.J11, gs.J21);
  const auto [w1, w2] = project_conflicting(gs.J12, gs.J22);
  d.delta_h = -cfg.eta_h * (h1 + h2).reshaped();
  d.delta_w = -cfg.eta_w * (w1 + w2);
  return d;
}

UpdateDecision decide(const GradientSet& gs, const StrategyConfig& cfg,
                      const ProblemInstance& instance, const Perturbations& pert) {
  if (cfg.kind == StrategyKind::HardJPlus) {
    return hard_route_jplus(jplus(gs, cfg.alignment, instance, pert), gs, cfg);
  }
  const J6Vector s = j6(gs, cfg.alignment, instance, pert);
  UpdateDecision d;
  switch (cfg.kind) {
    case StrategyKind::HardJ6: return hard_route_j6(s, gs, cfg);
    case StrategyKind::Soft: d = soft_update(soft_weights(s, cfg), gs, cfg); break;
    case StrategyKind::Static: d = static_baseline(gs, cfg); break;
    case StrategyKind::Scalarized: d = scalarized_baseline(gs, cfg); break;
    case StrategyKind::GradSurgery: d = gradsurgery_baseline(gs, cfg); break;
    case StrategyKind::HardJPlus: break;
  }
  d.scores.assign(s.begin(), s.end());
  return d;
}

}  // namespace j6
