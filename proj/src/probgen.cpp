#include "j6/probgen.hpp"

#include <limits>
#include <random>
#include <string>

#include "j6/attribution.hpp"
#include "j6/errors.hpp"

namespace j6 {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Gaussian: return "gaussian";
    case Family::Conflicting: return "conflicting";
    case Family::RoleSwap: return "role-swap";
  }
  return "gaussian";
}

Family parse_family(std::string_view text) {
  if (text == "gaussian") return Family::Gaussian;
  if (text == "conflicting") return Family::Conflicting;
  if (text == "role-swap") return Family::RoleSwap;
  throw ConfigError("unknown family '" + std::string(text) + "'");
}

void GeneratorSpec::validate() const {
  if (V < 2) throw ConfigError("V must be at least 2, got " + std::to_string(V));
  if (d < 1) throw ConfigError("d must be at least 1, got " + std::to_string(d));
  if (T < 1) throw ConfigError("T must be at least 1, got " + std::to_string(T));
  if (v_star && (*v_star < 0 || *v_star >= V)) {
    throw ConfigError("v_star must lie in [0, V)");
  }
  if (family == Family::RoleSwap && w_mode == WMode::Broadcast) {
    throw ConfigError("role-swap needs a non-broadcast w (broadcast w has no Heat gradient)");
  }
}

Certificates certify(const ProblemInstance& instance) {
  const Perturbations zero = Perturbations::zeros(instance);
  const GradientSet gs = compute_gradient_set(instance, zero);
  const double n12 = gs.J12.squaredNorm();
  Certificates c;
  c.heat_ratio = n12 > 0.0 ? gs.J11.squaredNorm() / n12
                           : std::numeric_limits<double>::infinity();
  const Matrix logits = compute_logits(instance, zero);
  c.logit_alignment = flat_dot(logit_gradients(Objective::Heat, logits, instance.y),
                               logit_gradients(Objective::Confidence, logits, instance.y));
  return c;
}

namespace {

ProblemInstance draw(const GeneratorSpec& spec, std::mt19937_64& rng, double w_scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> token(0, spec.V - 1);
  ProblemInstance inst;
  inst.H.resize(spec.T, spec.d);
  inst.W.resize(spec.V, spec.d);
  for (double& v : inst.H.reshaped<Eigen::RowMajor>()) v = normal(rng);
  for (double& v : inst.W.reshaped<Eigen::RowMajor>()) v = w_scale * normal(rng);
  inst.y.resize(spec.T);
  for (int& t : inst.y) t = token(rng);
  inst.w_mode = spec.w_mode;
  inst.v_star = spec.v_star.value_or(inst.y.back());
  return inst;
}

bool accepted(const GeneratorSpec& spec, const ProblemInstance& inst) {
  switch (spec.family) {
    case Family::Gaussian: return true;
    case Family::Conflicting: return certify(inst).logit_alignment < 0.0;
    case Family::RoleSwap: return certify(inst).heat_ratio < kRoleSwapRatio;
  }
  return true;
}

}  // namespace

ProblemInstance generate(const GeneratorSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const double w_scale = spec.family == Family::RoleSwap ? kRoleSwapEmbeddingScale : 1.0;
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    ProblemInstance inst = draw(spec, rng, w_scale);
    if (accepted(spec, inst)) return inst;
  }
  throw GenerationError("no " + std::string(to_string(spec.family)) + " instance found in " +
                        std::to_string(kMaxGenerationAttempts) + " draws");
}

}  // namespace j6
