#pragma once

// Jacobian blocks of the two objectives with respect to the two parameter
// groups, and the 6-term / 15-term attribution score vectors built on them.

#include <array>
#include <string_view>

#include "j6/model.hpp"

namespace j6 {

/// J11 = grad_h Heat, J12 = grad_w Heat, J21 = grad_h Conf, J22 = grad_w Conf.
struct GradientSet {
  Vector J11;
  Matrix J12;
  Vector J21;
  Matrix J22;

  /// Block norms in the order n11, n12, n21, n22.
  std::array<double, 4> norms() const;
  GradientSet scaled(double c) const;
};

GradientSet compute_gradient_set(const ProblemInstance& instance, const Perturbations& pert);

/// How inner products between gradients of different groups are formed.
struct AlignmentMode {
  enum class Space { Direct, Pushforward };
  enum class Scale { Raw, Cosine };

  Space space = Space::Direct;
  Scale scale = Scale::Raw;
};

std::string_view to_string(AlignmentMode::Space space);
std::string_view to_string(AlignmentMode::Scale scale);
AlignmentMode::Space parse_alignment_space(std::string_view text);
AlignmentMode::Scale parse_alignment_scale(std::string_view text);

/// Direct for SingleRow/Broadcast (h and w share a shape), Pushforward for
/// FullMatrix.
AlignmentMode default_alignment(WMode mode);

/// Throws ConfigError if Direct alignment is requested for an instance whose
/// h and w shapes differ.
void check_alignment(const ProblemInstance& instance, const AlignmentMode& mode);

/// Flattened Euclidean inner product; ShapeError on size mismatch.
double flat_dot(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b);

/// Logit-space change (T x V) induced by moving a parameter group along g,
/// under the local linearization at (h, w).
Matrix pushforward(Group group, const Eigen::Ref<const Matrix>& g,
                   const ProblemInstance& instance, const Perturbations& pert);

double align(Group group_a, const Eigen::Ref<const Matrix>& a, Group group_b,
             const Eigen::Ref<const Matrix>& b, const AlignmentMode& mode,
             const ProblemInstance& instance, const Perturbations& pert);

/// s[0]=|J11|^2, s[1]=<J11,J22>, s[2]=|J12|^2, s[3]=|J21|^2, s[4]=|J22|^2,
/// s[5]=<J21,J12>.
using J6Vector = std::array<double, 6>;

/// Zero-based storage of the 15 components; slot k holds table row k+1.
using JPlusVector = std::array<double, 15>;

J6Vector j6(const GradientSet& gs, const AlignmentMode& mode,
            const ProblemInstance& instance, const Perturbations& pert);
JPlusVector jplus(const GradientSet& gs, const AlignmentMode& mode,
                  const ProblemInstance& instance, const Perturbations& pert);

/// Position of J6 entry i inside J+ (zero-based): {0, 4, 1, 2, 3, 5}.
inline constexpr std::array<int, 6> kJ6InJPlus = {0, 4, 1, 2, 3, 5};

}  // namespace j6
