#pragma once

// Comparison of the analytic Jacobian blocks against central differences.

#include <array>
#include <string_view>

#include "j6/attribution.hpp"

namespace j6 {

/// Blocks whose entries are all below this magnitude are compared in
/// absolute terms: the relative error denominator never drops under it.
inline constexpr double kGradcheckFloor = 1e-6;
inline constexpr double kGradcheckTolerance = 1e-5;

struct BlockCheck {
  std::string_view name;   // "J11", "J12", "J21", "J22"
  double max_rel_error = 0.0;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  double analytic = 0.0;   // value at the worst coordinate
  double numeric = 0.0;
};

struct GradcheckReport {
  std::array<BlockCheck, 4> blocks;

  double max_rel_error() const;
  bool passed(double tolerance = kGradcheckTolerance) const;
};

/// max |a - f| / max(|a|_inf, |f|_inf, kGradcheckFloor) over one block.
BlockCheck compare_block(std::string_view name, const Matrix& analytic, const Matrix& numeric);

/// `inject` is added to the first analytic coordinate of J11; tests use it as
/// a negative control.
GradcheckReport gradcheck(const ProblemInstance& instance, const Perturbations& pert,
                          double eps = 1e-5, double inject = 0.0);

}  // namespace j6
