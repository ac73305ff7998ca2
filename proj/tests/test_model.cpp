#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "j6/errors.hpp"
#include "j6/model.hpp"
#include "oracle.hpp"

using namespace j6;

namespace {

ProblemInstance small_instance(WMode mode) {
  ProblemInstance inst;
  inst.H = Matrix{{1.0, 0.0}};
  inst.W = Matrix{{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
  inst.y = {0};
  inst.w_mode = mode;
  inst.v_star = 0;
  return inst;
}

// Values from an mpmath evaluation at 30 digits of softmax([1, 0, 1]).
constexpr double kP0 = 0.422318798251518196603290705988;
constexpr double kP1 = 0.155362403496963606793418588024;

}  // namespace

TEST_CASE("compute_logits with zero perturbation is H W^T") {
  for (WMode mode : {WMode::FullMatrix, WMode::SingleRow, WMode::Broadcast}) {
    const ProblemInstance inst = small_instance(mode);
    const Matrix z = compute_logits(inst, Perturbations::zeros(inst));
    CHECK(z.rows() == 1);
    CHECK(z(0, 0) == 1.0);
    CHECK(z(0, 1) == 0.0);
    CHECK(z(0, 2) == 1.0);
  }
}

TEST_CASE("compute_logits vanishes when H is zero") {
  ProblemInstance inst = small_instance(WMode::FullMatrix);
  inst.H.setZero();
  CHECK(compute_logits(inst, Perturbations::zeros(inst)).isZero(0.0));
}

TEST_CASE("compute_logits single-row example agrees with the scalar-loop oracle") {
  const ProblemInstance inst = small_instance(WMode::SingleRow);
  Perturbations pert = Perturbations::zeros(inst);
  pert.h << 0.1, 0.2;
  pert.w << 0.3, 0.0;
  const Matrix z = compute_logits(inst, pert);
  const auto ref = oracle::logits(oracle::from(inst), {0.1, 0.2}, {0.3, 0.0});
  CHECK(z(0, 0) == doctest::Approx(1.43).epsilon(1e-14));
  CHECK(z(0, 1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(z(0, 2) == doctest::Approx(1.3).epsilon(1e-14));
  for (int v = 0; v < 3; ++v) CHECK(z(0, v) == doctest::Approx(ref[0][v]).epsilon(1e-14));
}

TEST_CASE("shape and index errors") {
  ProblemInstance inst = small_instance(WMode::FullMatrix);
  Perturbations bad = Perturbations::zeros(inst);
  bad.h = Vector::Zero(3);
  CHECK_THROWS_AS(compute_logits(inst, bad), ShapeError);
  Perturbations bad_w = Perturbations::zeros(inst);
  bad_w.w = Matrix::Zero(1, 2);
  CHECK_THROWS_AS(compute_logits(inst, bad_w), ShapeError);

  inst.y = {3};
  CHECK_THROWS_AS(inst.validate(), IndexError);
  CHECK_THROWS_AS(heat_loss(Matrix::Zero(1, 3), {3}), IndexError);
  inst.y = {0};
  inst.v_star = 5;
  CHECK_THROWS_AS(inst.validate(), IndexError);
}

TEST_CASE("softmax") {
  const Vector u = softmax(Vector::Zero(4));
  for (double p : u) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  const Vector p = softmax(Vector{{1.0, 0.0, 1.0}});
  CHECK(p[0] == doctest::Approx(kP0).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(kP1).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(kP0).epsilon(1e-14));

  const Vector base{{0.3, 1.7}};
  const Vector shifted = (base.array() + 1234.5).matrix();
  CHECK((softmax(base) - softmax(shifted)).cwiseAbs().maxCoeff() < 1e-12);

  // Large logits must not overflow.
  const Vector big = softmax(Vector{{1000.0, 0.0, 0.0}});
  CHECK(big.allFinite());
  CHECK(big[0] == doctest::Approx(1.0));
}

TEST_CASE("heat_loss") {
  CHECK(heat_loss(Matrix::Zero(1, 4), {2}) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(heat_loss(Matrix{{1.0, 0.0, 1.0}}, {0}) ==
        doctest::Approx(0.861994804058251081634974066289).epsilon(1e-14));
  const double confident = heat_loss(Matrix{{60.0, 0.0, 0.0}}, {0});
  CHECK(confident >= 0.0);
  CHECK(confident < 1e-20);
}

TEST_CASE("confidence_loss") {
  CHECK(confidence_loss(Matrix::Zero(1, 4)) == doctest::Approx(-std::log(4.0)).epsilon(1e-15));
  CHECK(confidence_loss(Matrix{{1.0, 0.0, 1.0}}) ==
        doctest::Approx(-1.01735720755521468842839265431).epsilon(1e-14));
  const double sharp = confidence_loss(Matrix{{800.0, 0.0, 0.0}});
  CHECK(sharp <= 0.0);
  CHECK(sharp > -1e-12);
}

TEST_CASE("logit-space gradients") {
  const Vector uniform = Vector::Constant(4, 0.25);
  const Vector gh = grad_logits_heat(uniform, 1);
  CHECK(gh[0] == 0.25);
  CHECK(gh[1] == -0.75);
  CHECK(gh[2] == 0.25);
  CHECK(gh[3] == 0.25);

  Vector onehot = Vector::Zero(3);
  onehot[2] = 1.0;
  CHECK(grad_logits_heat(onehot, 2).isZero(0.0));
  CHECK(grad_logits_conf(onehot).isZero(0.0));
  CHECK(grad_logits_conf(uniform).cwiseAbs().maxCoeff() < 1e-16);

  // p = softmax([1,0,1]) against central differences of the losses.
  const Vector p{{kP0, kP1, kP0}};
  const Vector z0{{1.0, 0.0, 1.0}};
  const Vector gheat = grad_logits_heat(p, 0);
  CHECK(gheat[0] == doctest::Approx(-0.577681201748481803396709294012).epsilon(1e-13));
  CHECK(gheat[1] == doctest::Approx(kP1).epsilon(1e-13));

  auto heat_of = [](const Vector& z) { return heat_loss(Matrix(z.transpose()), {0}); };
  auto conf_of = [](const Vector& z) { return confidence_loss(Matrix(z.transpose())); };
  const Vector fd_heat = central_difference(heat_of, z0);
  const Vector fd_conf = central_difference(conf_of, z0);
  CHECK((fd_heat - gheat).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((fd_conf - grad_logits_conf(p)).cwiseAbs().maxCoeff() < 1e-6);
  // mpmath: p_k (log p_k + E)
  CHECK(grad_logits_conf(p)[1] ==
        doctest::Approx(-0.131224927076610277236500488706).epsilon(1e-12));
}

TEST_CASE("grad_h and grad_w against finite differences on the small example") {
  for (WMode mode : {WMode::SingleRow, WMode::FullMatrix}) {
    const ProblemInstance inst = small_instance(mode);
    Perturbations pert = Perturbations::zeros(inst);
    pert.h << 0.1, 0.2;
    pert.w.row(0) << 0.3, 0.0;
    const Matrix logits = compute_logits(inst, pert);
    for (Objective ob : {Objective::Heat, Objective::Confidence}) {
      const Matrix g = logit_gradients(ob, logits, inst.y);
      const Matrix gh = grad_h(inst, pert, g);
      const Matrix gw = grad_w(inst, pert, g);
      const Matrix fh = fd_gradient(ob, Group::H, inst, pert);
      const Matrix fw = fd_gradient(ob, Group::W, inst, pert);
      CHECK((gh - fh).cwiseAbs().maxCoeff() / gh.cwiseAbs().maxCoeff() < 1e-6);
      CHECK((gw - fw).cwiseAbs().maxCoeff() / gw.cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("grad_h and grad_w are zero for zero logit gradient") {
  const ProblemInstance inst = small_instance(WMode::FullMatrix);
  const Perturbations pert = Perturbations::zeros(inst);
  const Matrix g = Matrix::Zero(1, 3);
  CHECK(grad_h(inst, pert, g).isZero(0.0));
  CHECK(grad_w(inst, pert, g).isZero(0.0));
  CHECK_THROWS_AS(grad_h(inst, pert, Matrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("grad_h picks up only embedding directions weighted by g") {
  // g puts weight on token 0 only, whose embedding is e_0: the second
  // component of grad_h must vanish.
  const ProblemInstance inst = small_instance(WMode::FullMatrix);
  const Perturbations pert = Perturbations::zeros(inst);
  const Vector gh = grad_h(inst, pert, Matrix{{1.0, 0.0, 0.0}});
  CHECK(gh[0] == 1.0);
  CHECK(gh[1] == 0.0);
}

TEST_CASE("broadcast w receives exactly no gradient") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ProblemInstance inst = testing::random_instance(seed, WMode::Broadcast);
    const Perturbations pert = Perturbations::zeros(inst);
    const Matrix logits = compute_logits(inst, pert);
    for (Objective ob : {Objective::Heat, Objective::Confidence}) {
      CHECK(grad_w(inst, pert, logit_gradients(ob, logits, inst.y)).norm() < 1e-12);
    }
  }
}

TEST_CASE("central_difference is second-order accurate") {
  auto cubic = [](const Vector& x) { return 3.0 * x[0] * x[0] + x[0] * x[0] * x[0]; };
  const Vector x{{0.7}};
  const double exact = 6.0 * 0.7 + 3.0 * 0.49;
  const double e1 = std::abs(central_difference(cubic, x, 1e-2)[0] - exact);
  const double e2 = std::abs(central_difference(cubic, x, 5e-3)[0] - exact);
  CHECK(e1 == doctest::Approx(1e-4).epsilon(1e-6));  // eps^2 * f''' / 6 = eps^2
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(1e-3));

  auto quad = [](const Vector& v) { return 2.0 * v[0] * v[0]; };
  CHECK(central_difference(quad, Vector{{1.5}})[0] == doctest::Approx(6.0).epsilon(1e-9));
  CHECK_THROWS_AS(central_difference(quad, Vector{{1.5}}, 0.0), ConfigError);
}

TEST_CASE("finite-difference error shrinks about fourfold when eps halves") {
  const ProblemInstance inst = testing::random_instance(3, WMode::SingleRow);
  Perturbations pert = Perturbations::zeros(inst);
  const Matrix logits = compute_logits(inst, pert);
  const Vector analytic = grad_h(inst, pert, logit_gradients(Objective::Heat, logits, inst.y));
  const double e1 = (fd_gradient(Objective::Heat, Group::H, inst, pert, 1e-2) - analytic).norm();
  const double e2 = (fd_gradient(Objective::Heat, Group::H, inst, pert, 5e-3) - analytic).norm();
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("property: oracle agreement, zero-sum, bounds, shift invariance") {
  const double tol = 1e-5;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const WMode mode = seed % 2 ? WMode::FullMatrix : WMode::SingleRow;
    const ProblemInstance inst = testing::random_instance(seed, mode);
    Perturbations pert = Perturbations::zeros(inst);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (double& v : pert.h) v = u(rng);
    for (double& v : pert.w.reshaped()) v = u(rng);

    const Matrix logits = compute_logits(inst, pert);
    const oracle::Problem op = oracle::from(inst);
    for (Objective ob : {Objective::Heat, Objective::Confidence}) {
      const Matrix g = logit_gradients(ob, logits, inst.y);
      for (Eigen::Index t = 0; t < g.rows(); ++t) CHECK(std::abs(g.row(t).sum()) < 1e-10);
      const Vector gh = grad_h(inst, pert, g);
      const Matrix gw = grad_w(inst, pert, g);
      const auto fh = oracle::fd(ob, Group::H, op, oracle::flat_h(pert),
                                 oracle::flat_w_rowmajor(pert.w), 1e-5);
      const auto fw = oracle::fd(ob, Group::W, op, oracle::flat_h(pert),
                                 oracle::flat_w_rowmajor(pert.w), 1e-5);
      CHECK(oracle::rel_error(std::vector<double>(gh.data(), gh.data() + gh.size()), fh) < tol);
      CHECK(oracle::rel_error(oracle::flat_w_rowmajor(gw), fw) < tol);
    }

    const double log_v = std::log(static_cast<double>(inst.vocab()));
    const ObjectivePair obj = evaluate(inst, pert);
    CHECK(obj.ob1 >= 0.0);
    CHECK(obj.ob2 <= 0.0);
    CHECK(obj.ob2 >= -log_v - 1e-12);

    Matrix shifted = logits;
    for (Eigen::Index t = 0; t < shifted.rows(); ++t) shifted.row(t).array() += 3.5 * (t + 1);
    CHECK(std::abs(heat_loss(shifted, inst.y) - obj.ob1) < 1e-10);
    CHECK(std::abs(confidence_loss(shifted) - obj.ob2) < 1e-10);
    for (Objective ob : {Objective::Heat, Objective::Confidence}) {
      const Matrix diff =
          logit_gradients(ob, shifted, inst.y) - logit_gradients(ob, logits, inst.y);
      CHECK(diff.cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("property: a small h step along -grad_h(Heat) lowers Heat") {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ProblemInstance inst = testing::random_instance(seed, WMode::FullMatrix);
    Perturbations pert = Perturbations::zeros(inst);
    const Matrix logits = compute_logits(inst, pert);
    const Vector gh = grad_h(inst, pert, logit_gradients(Objective::Heat, logits, inst.y));
    if (gh.norm() < 1e-6) continue;
    const double before = heat_loss(logits, inst.y);
    pert.h -= 1e-4 * gh;
    CHECK(objective_value(Objective::Heat, inst, pert) < before);
    ++checked;
  }
  CHECK(checked > 90);
}
