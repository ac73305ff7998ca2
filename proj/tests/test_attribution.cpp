#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "j6/attribution.hpp"
#include "j6/errors.hpp"
#include "oracle.hpp"

using namespace j6;

namespace {

// J11=[1,0], J22=[0,2], J12=[1,1], J21=[2,0] on a d=2 single-row instance.
GradientSet hand_picked() {
  GradientSet gs;
  gs.J11 = Vector{{1.0, 0.0}};
  gs.J12 = Matrix{{1.0, 1.0}};
  gs.J21 = Vector{{2.0, 0.0}};
  gs.J22 = Matrix{{0.0, 2.0}};
  return gs;
}

ProblemInstance tiny_single_row() {
  ProblemInstance inst;
  inst.H = Matrix{{1.0, 0.0}};
  inst.W = Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  inst.y = {0};
  inst.w_mode = WMode::SingleRow;
  return inst;
}

GradientSet random_set(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  GradientSet gs;
  gs.J11 = Vector(d);
  gs.J21 = Vector(d);
  gs.J12 = Matrix(1, d);
  gs.J22 = Matrix(1, d);
  for (double& v : gs.J11) v = n(rng);
  for (double& v : gs.J21) v = n(rng);
  for (double& v : gs.J12.reshaped()) v = n(rng);
  for (double& v : gs.J22.reshaped()) v = n(rng);
  return gs;
}

const AlignmentMode kDirectRaw{AlignmentMode::Space::Direct, AlignmentMode::Scale::Raw};

}  // namespace

TEST_CASE("gradient set at uniform logits has no confidence gradient") {
  ProblemInstance inst = tiny_single_row();
  inst.H.setZero();
  const GradientSet gs = compute_gradient_set(inst, Perturbations::zeros(inst));
  CHECK(gs.J21.norm() < 1e-15);
  CHECK(gs.J22.norm() < 1e-15);
  CHECK(gs.J11.norm() > 0.1);
}

TEST_CASE("gradient set blocks match the scalar-loop oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const WMode mode = seed % 2 ? WMode::SingleRow : WMode::FullMatrix;
    const ProblemInstance inst = testing::random_instance(seed + 500, mode);
    const Perturbations pert = Perturbations::zeros(inst);
    const GradientSet gs = compute_gradient_set(inst, pert);
    const auto op = oracle::from(inst);
    const auto h = oracle::flat_h(pert);
    const auto w = oracle::flat_w_rowmajor(pert.w);
    auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    CHECK(oracle::rel_error(vec(gs.J11), oracle::fd(Objective::Heat, Group::H, op, h, w, 1e-5)) <
          1e-5);
    CHECK(oracle::rel_error(oracle::flat_w_rowmajor(gs.J12),
                            oracle::fd(Objective::Heat, Group::W, op, h, w, 1e-5)) < 1e-5);
    CHECK(oracle::rel_error(vec(gs.J21),
                            oracle::fd(Objective::Confidence, Group::H, op, h, w, 1e-5)) < 1e-5);
    CHECK(oracle::rel_error(oracle::flat_w_rowmajor(gs.J22),
                            oracle::fd(Objective::Confidence, Group::W, op, h, w, 1e-5)) < 1e-5);
  }
}

TEST_CASE("a confidently correct position contributes nothing") {
  // logits (800, 0, 0) with target 0: p is one-hot in double precision.
  ProblemInstance inst;
  inst.H = Matrix{{1.0, 0.0}};
  inst.W = Matrix{{800.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  inst.y = {0};
  inst.w_mode = WMode::SingleRow;
  const GradientSet gs = compute_gradient_set(inst, Perturbations::zeros(inst));
  CHECK(gs.J11.isZero(0.0));
  CHECK(gs.J12.isZero(0.0));
  CHECK(gs.J21.isZero(0.0));
  CHECK(gs.J22.isZero(0.0));
}

TEST_CASE("align in direct mode") {
  const ProblemInstance inst = tiny_single_row();
  const Perturbations pert = Perturbations::zeros(inst);
  const Vector g{{0.5, -1.5}};
  CHECK(align(Group::H, g, Group::H, g, kDirectRaw, inst, pert) == g.squaredNorm());
  CHECK(align(Group::H, Vector{{1.0, 0.0}}, Group::W, Matrix{{0.0, 2.0}}, kDirectRaw, inst,
              pert) == 0.0);
  const AlignmentMode cosine{AlignmentMode::Space::Direct, AlignmentMode::Scale::Cosine};
  CHECK(align(Group::H, g, Group::H, 3.0 * g, cosine, inst, pert) == doctest::Approx(1.0));
  CHECK(align(Group::H, g, Group::H, Vector::Zero(2), cosine, inst, pert) == 0.0);
}

TEST_CASE("direct alignment rejects full-matrix shapes") {
  ProblemInstance inst = tiny_single_row();
  inst.w_mode = WMode::FullMatrix;
  const Perturbations pert = Perturbations::zeros(inst);
  const GradientSet gs = compute_gradient_set(inst, pert);
  CHECK_THROWS_AS(::j6::j6(gs, kDirectRaw, inst, pert), ShapeError);
  CHECK_THROWS_AS(check_alignment(inst, kDirectRaw), ConfigError);
  CHECK_NOTHROW(check_alignment(inst, default_alignment(WMode::FullMatrix)));
  CHECK(default_alignment(WMode::SingleRow).space == AlignmentMode::Space::Direct);
}

TEST_CASE("pushforward maps each group to its logit-space change") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (WMode mode : {WMode::FullMatrix, WMode::SingleRow, WMode::Broadcast}) {
      const ProblemInstance inst = testing::random_instance(seed + 40, mode);
      Perturbations pert = Perturbations::zeros(inst);
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n(0.0, 1.0);
      Vector gh(inst.dim());
      for (double& v : gh) v = n(rng);
      Matrix gw(pert.w.rows(), pert.w.cols());
      for (double& v : gw.reshaped()) v = n(rng);

      // Bilinear model: logits are linear in each group separately, so the
      // pushforward equals the exact logit difference for a unit move.
      const Matrix base = compute_logits(inst, pert);
      Perturbations moved_h = pert;
      moved_h.h += gh;
      Perturbations moved_w = pert;
      moved_w.w += gw;
      CHECK((pushforward(Group::H, gh, inst, pert) - (compute_logits(inst, moved_h) - base))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
      CHECK((pushforward(Group::W, gw, inst, pert) - (compute_logits(inst, moved_w) - base))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("pushforward self-alignment is non-negative") {
  const AlignmentMode push{AlignmentMode::Space::Pushforward, AlignmentMode::Scale::Raw};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ProblemInstance inst = testing::random_instance(seed, WMode::FullMatrix);
    const Perturbations pert = Perturbations::zeros(inst);
    const GradientSet gs = compute_gradient_set(inst, pert);
    CHECK(align(Group::H, gs.J11, Group::H, gs.J11, push, inst, pert) >= 0.0);
    CHECK(align(Group::W, gs.J12, Group::W, gs.J12, push, inst, pert) >= 0.0);
  }
}

TEST_CASE("j6 on the hand-picked vectors") {
  const ProblemInstance inst = tiny_single_row();
  const Perturbations pert = Perturbations::zeros(inst);
  const J6Vector s = ::j6::j6(hand_picked(), kDirectRaw, inst, pert);
  CHECK(s == J6Vector{1.0, 0.0, 2.0, 4.0, 4.0, 2.0});

  GradientSet zero = hand_picked().scaled(0.0);
  CHECK(::j6::j6(zero, kDirectRaw, inst, pert) == J6Vector{});
  CHECK(jplus(zero, kDirectRaw, inst, pert) == JPlusVector{});
}

TEST_CASE("jplus on the hand-picked vectors") {
  const ProblemInstance inst = tiny_single_row();
  const Perturbations pert = Perturbations::zeros(inst);
  const JPlusVector s = jplus(hand_picked(), kDirectRaw, inst, pert);
  CHECK(s[6] == 2.0);   // index 7: <J11, J21>
  CHECK(s[13] == 9.0);  // index 14: |J11 + J21|^2
  // Remaining entries by hand: J12+J22 = [1,3], J11+J21 = [3,0].
  CHECK(s[7] == 2.0);   // <J12, J22>
  CHECK(s[8] == 3.0);   // <[3,0],[1,3]>
  CHECK(s[9] == 1.0);   // <J11,[1,3]>
  CHECK(s[10] == 2.0);  // <J21,[1,3]>
  CHECK(s[11] == 3.0);  // <[3,0],J12>
  CHECK(s[12] == 0.0);  // <[3,0],J22>
  CHECK(s[14] == 10.0);
}

TEST_CASE("property: J6 entries sit inside J+ bit-for-bit") {
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ProblemInstance inst = testing::random_instance(seed, WMode::FullMatrix);
    Perturbations pert = Perturbations::zeros(inst);
    const GradientSet gs = compute_gradient_set(inst, pert);
    for (auto scale : {AlignmentMode::Scale::Raw, AlignmentMode::Scale::Cosine}) {
      const AlignmentMode mode{AlignmentMode::Space::Pushforward, scale};
      const J6Vector a = ::j6::j6(gs, mode, inst, pert);
      const JPlusVector b = jplus(gs, mode, inst, pert);
      for (int i = 0; i < 6; ++i) CHECK(a[i] == b[kJ6InJPlus[i]]);
    }
  }
}

TEST_CASE("property: Cauchy-Schwarz, scale equivariance, cosine bounds") {
  std::mt19937_64 rng(2024);
  const ProblemInstance inst = tiny_single_row();
  for (int draw = 0; draw < 1000; ++draw) {
    const int d = 1 + draw % 6;
    ProblemInstance sized = inst;
    sized.H = Matrix::Ones(1, d);
    sized.W = Matrix::Ones(3, d);
    const Perturbations pert = Perturbations::zeros(sized);
    const GradientSet gs = random_set(rng, d);
    const J6Vector s = ::j6::j6(gs, kDirectRaw, sized, pert);
    CHECK(s[1] <= std::sqrt(s[0] * s[4]) + 1e-12);
    CHECK(s[5] <= std::sqrt(s[3] * s[2]) + 1e-12);
    for (int i : {0, 2, 3, 4}) CHECK(s[i] >= 0.0);

    const double c = 0.25 + (draw % 7);
    const J6Vector scaled = ::j6::j6(gs.scaled(c), kDirectRaw, sized, pert);
    for (int i = 0; i < 6; ++i) {
      CHECK(scaled[i] == doctest::Approx(c * c * s[i]).epsilon(1e-12).scale(1e-12));
    }

    const AlignmentMode cosine{AlignmentMode::Space::Direct, AlignmentMode::Scale::Cosine};
    const JPlusVector cp = jplus(gs, cosine, sized, pert);
    for (int i = 4; i < 13; ++i) {
      CHECK(cp[i] >= -1.0 - 1e-12);
      CHECK(cp[i] <= 1.0 + 1e-12);
    }
    const JPlusVector rp = jplus(gs, kDirectRaw, sized, pert);
    for (int i : {0, 1, 2, 3, 13, 14}) CHECK(rp[i] >= 0.0);
  }
}

TEST_CASE("cosine pushforward products stay in [-1, 1]") {
  const AlignmentMode mode{AlignmentMode::Space::Pushforward, AlignmentMode::Scale::Cosine};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ProblemInstance inst = testing::random_instance(seed, WMode::FullMatrix);
    const Perturbations pert = Perturbations::zeros(inst);
    const JPlusVector s = jplus(compute_gradient_set(inst, pert), mode, inst, pert);
    for (int i = 4; i < 13; ++i) {
      CHECK(std::abs(s[i]) <= 1.0 + 1e-12);
    }
  }
}
