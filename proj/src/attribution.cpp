#include "j6/attribution.hpp"

#include <cmath>
#include <string>

#include "j6/errors.hpp"

namespace j6 {

std::array<double, 4> GradientSet::norms() const {
  return {J11.norm(), J12.norm(), J21.norm(), J22.norm()};
}

GradientSet GradientSet::scaled(double c) const {
  return {J11 * c, J12 * c, J21 * c, J22 * c};
}

GradientSet compute_gradient_set(const ProblemInstance& instance, const Perturbations& pert) {
  const Matrix logits = compute_logits(instance, pert);
  const Matrix g_heat = logit_gradients(Objective::Heat, logits, instance.y);
  const Matrix g_conf = logit_gradients(Objective::Confidence, logits, instance.y);
  return {grad_h(instance, pert, g_heat), grad_w(instance, pert, g_heat),
          grad_h(instance, pert, g_conf), grad_w(instance, pert, g_conf)};
}

std::string_view to_string(AlignmentMode::Space space) {
  return space == AlignmentMode::Space::Direct ? "direct" : "pushforward";
}

std::string_view to_string(AlignmentMode::Scale scale) {
  return scale == AlignmentMode::Scale::Raw ? "raw" : "cosine";
}

AlignmentMode::Space parse_alignment_space(std::string_view text) {
  if (text == "direct") return AlignmentMode::Space::Direct;
  if (text == "pushforward") return AlignmentMode::Space::Pushforward;
  throw ConfigError("unknown alignment '" + std::string(text) + "'");
}

AlignmentMode::Scale parse_alignment_scale(std::string_view text) {
  if (text == "raw") return AlignmentMode::Scale::Raw;
  if (text == "cosine") return AlignmentMode::Scale::Cosine;
  throw ConfigError("unknown alignment scale '" + std::string(text) + "'");
}

AlignmentMode default_alignment(WMode mode) {
  AlignmentMode m;
  m.space = mode == WMode::FullMatrix ? AlignmentMode::Space::Pushforward
                                      : AlignmentMode::Space::Direct;
  return m;
}

void check_alignment(const ProblemInstance& instance, const AlignmentMode& mode) {
  if (mode.space == AlignmentMode::Space::Direct && instance.w_mode == WMode::FullMatrix) {
    throw ConfigError(
        "direct alignment needs h and w of equal shape; full-matrix w is " +
        std::to_string(instance.vocab()) + "x" + std::to_string(instance.dim()) +
        " while h has length " + std::to_string(instance.dim()) +
        " (use pushforward or a single-row instance)");
  }
}

double flat_dot(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("inner product of operands with " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()) + " entries");
  }
  return a.reshaped().dot(b.reshaped());
}

Matrix pushforward(Group group, const Eigen::Ref<const Matrix>& g,
                   const ProblemInstance& instance, const Perturbations& pert) {
  const int T = instance.positions();
  const int V = instance.vocab();
  if (group == Group::H) {
    if (g.size() != instance.dim()) throw ShapeError("h-shaped gradient has wrong length");
    const Vector dz = effective_embeddings(instance, pert) * g.reshaped();
    return dz.transpose().replicate(T, 1);
  }
  const Matrix h_eff = effective_hidden(instance, pert);
  const int rows = w_rows(instance.w_mode, V);
  if (g.rows() != rows || g.cols() != instance.dim()) {
    throw ShapeError("w-shaped gradient has wrong shape");
  }
  switch (instance.w_mode) {
    case WMode::FullMatrix:
      return h_eff * g.transpose();
    case WMode::SingleRow: {
      Matrix dz = Matrix::Zero(T, V);
      dz.col(instance.v_star) = h_eff * g.row(0).transpose();
      return dz;
    }
    case WMode::Broadcast:
      return (h_eff * g.row(0).transpose()).replicate(1, V);
  }
  return {};
}

double align(Group group_a, const Eigen::Ref<const Matrix>& a, Group group_b,
             const Eigen::Ref<const Matrix>& b, const AlignmentMode& mode,
             const ProblemInstance& instance, const Perturbations& pert) {
  double dot = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  if (mode.space == AlignmentMode::Space::Direct) {
    dot = flat_dot(a, b);
    if (mode.scale == AlignmentMode::Scale::Raw) return dot;
    norm_a = a.norm();
    norm_b = b.norm();
  } else {
    const Matrix za = pushforward(group_a, a, instance, pert);
    const Matrix zb = pushforward(group_b, b, instance, pert);
    dot = flat_dot(za, zb);
    if (mode.scale == AlignmentMode::Scale::Raw) return dot;
    norm_a = za.norm();
    norm_b = zb.norm();
  }
  if (norm_a == 0.0 || norm_b == 0.0) return 0.0;
  return dot / (norm_a * norm_b);
}

namespace {

// Same-group inner product in parameter space; honours the cosine scale.
double native_dot(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                  const AlignmentMode& mode) {
  const double dot = flat_dot(a, b);
  if (mode.scale == AlignmentMode::Scale::Raw) return dot;
  const double na = a.norm();
  const double nb = b.norm();
  return (na == 0.0 || nb == 0.0) ? 0.0 : dot / (na * nb);
}

}  // namespace

J6Vector j6(const GradientSet& gs, const AlignmentMode& mode,
            const ProblemInstance& instance, const Perturbations& pert) {
  return {
      gs.J11.squaredNorm(),
      align(Group::H, gs.J11, Group::W, gs.J22, mode, instance, pert),
      gs.J12.squaredNorm(),
      gs.J21.squaredNorm(),
      gs.J22.squaredNorm(),
      align(Group::H, gs.J21, Group::W, gs.J12, mode, instance, pert),
  };
}

JPlusVector jplus(const GradientSet& gs, const AlignmentMode& mode,
                  const ProblemInstance& instance, const Perturbations& pert) {
  const Vector h_sum = gs.J11 + gs.J21;
  const Matrix w_sum = gs.J12 + gs.J22;
  auto cross = [&](const Vector& h_part, const Matrix& w_part) {
    return align(Group::H, h_part, Group::W, w_part, mode, instance, pert);
  };
  return {
      gs.J11.squaredNorm(),              // 1
      gs.J12.squaredNorm(),              // 2
      gs.J21.squaredNorm(),              // 3
      gs.J22.squaredNorm(),              // 4
      cross(gs.J11, gs.J22),             // 5
      cross(gs.J21, gs.J12),             // 6
      native_dot(gs.J11, gs.J21, mode),  // 7
      native_dot(gs.J12, gs.J22, mode),  // 8
      cross(h_sum, w_sum),               // 9
      cross(gs.J11, w_sum),              // 10
      cross(gs.J21, w_sum),              // 11
      cross(h_sum, gs.J12),              // 12
      cross(h_sum, gs.J22),              // 13
      h_sum.squaredNorm(),               // 14
      w_sum.squaredNorm(),               // 15
  };
}

}  // namespace j6
