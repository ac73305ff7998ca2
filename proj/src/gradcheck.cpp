#include "j6/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace j6 {

double GradcheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const BlockCheck& b : blocks) worst = std::max(worst, b.max_rel_error);
  return worst;
}

bool GradcheckReport::passed(double tolerance) const { return max_rel_error() < tolerance; }

BlockCheck compare_block(std::string_view name, const Matrix& analytic, const Matrix& numeric) {
  BlockCheck check;
  check.name = name;
  const double scale = std::max(
      {analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), kGradcheckFloor});
  double worst = -1.0;
  for (Eigen::Index r = 0; r < analytic.rows(); ++r) {
    for (Eigen::Index c = 0; c < analytic.cols(); ++c) {
      const double err = std::abs(analytic(r, c) - numeric(r, c));
      if (err > worst) {
        worst = err;
        check.worst_row = r;
        check.worst_col = c;
      }
    }
  }
  check.max_rel_error = std::max(worst, 0.0) / scale;
  check.analytic = analytic(check.worst_row, check.worst_col);
  check.numeric = numeric(check.worst_row, check.worst_col);
  return check;
}

GradcheckReport gradcheck(const ProblemInstance& instance, const Perturbations& pert,
                          double eps, double inject) {
  GradientSet gs = compute_gradient_set(instance, pert);
  gs.J11[0] += inject;
  GradcheckReport report;
  report.blocks[0] = compare_block(
      "J11", gs.J11, fd_gradient(Objective::Heat, Group::H, instance, pert, eps));
  report.blocks[1] = compare_block(
      "J12", gs.J12, fd_gradient(Objective::Heat, Group::W, instance, pert, eps));
  report.blocks[2] = compare_block(
      "J21", gs.J21, fd_gradient(Objective::Confidence, Group::H, instance, pert, eps));
  report.blocks[3] = compare_block(
      "J22", gs.J22, fd_gradient(Objective::Confidence, Group::W, instance, pert, eps));
  return report;
}

}  // namespace j6
