#include <doctest.h>

#include <cmath>

#include "ivrl/rng.hpp"
#include "ivrl/sa_core.hpp"

using namespace ivrl;

TEST_CASE("step sizes at t=1 equal the base rates") {
  const LearningSchedule s(10.0, 0.7, 5.0, 0.9);
  const auto [alpha, beta] = step_sizes(s, 1);
  CHECK(alpha == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(beta == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("step size at t=10000 matches high-precision power") {
  const LearningSchedule s(10.0, 0.7, 5.0, 0.9);
  const auto [alpha, beta] = step_sizes(s, 10000);
  // 10 * 10000^-0.7 = 10^-1.8, evaluated independently via exp/log
  const double expected = std::exp(-1.8 * std::log(10.0));
  CHECK(alpha == doctest::Approx(expected).epsilon(1e-14));
  CHECK(alpha == doctest::Approx(0.015848931924611134).epsilon(1e-14));
  CHECK(beta == doctest::Approx(5.0 * std::exp(-0.9 * std::log(10000.0))).epsilon(1e-14));
}

TEST_CASE("step sizes reject t = 0 and invalid exponents") {
  const LearningSchedule s(1.0, 0.5, 1.0, 0.6);
  CHECK_THROWS_AS(step_sizes(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(LearningSchedule(0.0, 0.5, 1.0, 0.6), std::invalid_argument);
  CHECK_THROWS_AS(LearningSchedule(1.0, 0.8, 1.0, 0.6), std::invalid_argument);  // kappa > delta
  CHECK_THROWS_AS(LearningSchedule(1.0, 0.5, 1.0, 1.2), std::invalid_argument);  // delta > 1
}

TEST_CASE("schedule is monotone and timescale separation is non-increasing") {
  const LearningSchedule s(2.0, 0.6, 3.0, 0.8);
  double prev_alpha = 1e100, prev_beta = 1e100, prev_ratio = 1e100;
  for (long t = 1; t <= 1000; t += 7) {
    const auto [alpha, beta] = step_sizes(s, t);
    CHECK(alpha <= prev_alpha);
    CHECK(beta <= prev_beta);
    const double ratio = beta / alpha;
    CHECK(ratio <= prev_ratio + 1e-15);
    prev_alpha = alpha;
    prev_beta = beta;
    prev_ratio = ratio;
  }
}

TEST_CASE("projection examples") {
  const ProjectionBall b3(3.0);
  Eigen::VectorXd inside(2);
  inside << 0.5, 0.5;
  CHECK(b3.project(inside) == inside);  // unchanged, bit-exact

  const ProjectionBall b25(2.5);
  Eigen::VectorXd x(2);
  x << 3.0, 4.0;
  const Eigen::VectorXd px = b25.project(x);
  CHECK(px(0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(px(1) == doctest::Approx(2.0).epsilon(1e-15));

  const ProjectionBall b1(1.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(b1.project(zero) == zero);

  CHECK_THROWS_AS(ProjectionBall(0.0), std::invalid_argument);
  CHECK_FALSE(ProjectionBall::inactive().active());
}

TEST_CASE("projection is non-expansive and idempotent on random pairs") {
  Rng rng = seed_stream(42, 0);
  const ProjectionBall ball(1.7);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd x(4), y(4);
    for (int i = 0; i < 4; ++i) {
      x(i) = rng.normal(0.0, 3.0);
      y(i) = rng.normal(0.0, 3.0);
    }
    const Eigen::VectorXd px = ball.project(x);
    const Eigen::VectorXd py = ball.project(y);
    CHECK((px - py).norm() <= (x - y).norm() + 1e-12);
    CHECK(ball.project(px) == px);  // idempotent, bit-exact
    CHECK(px.norm() <= 1.7 + 1e-12);
  }
}

TEST_CASE("sa_step: zero drifts advance only the counter") {
  SaState state;
  state.lambda = Eigen::VectorXd::Constant(2, 1.5);
  state.xi = Eigen::VectorXd::Constant(3, -0.5);
  state.t = 4;
  const LearningSchedule s(1.0, 0.5, 1.0, 0.7);
  const SaState next = sa_step(state, s, ProjectionBall::inactive(),
                               Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3));
  CHECK(next.lambda == state.lambda);
  CHECK(next.xi == state.xi);
  CHECK(next.t == 5);
}

TEST_CASE("sa_step arithmetic and projection") {
  // lambda = (1), alpha_1 = 0.5, g = (-2), no ball: lambda' = 0
  SaState state;
  state.lambda = Eigen::VectorXd::Constant(1, 1.0);
  state.xi = Eigen::VectorXd::Zero(1);
  const LearningSchedule s(0.5, 0.7, 0.5, 0.9);
  SaState next = sa_step(state, s, ProjectionBall::inactive(),
                         Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Zero(1));
  CHECK(next.lambda(0) == doctest::Approx(0.0).epsilon(1e-15));

  // lambda = (2), alpha_1 = 1, g = (2), B = 3: 4 projected to 3
  state.lambda(0) = 2.0;
  const LearningSchedule unit(1.0, 0.7, 1.0, 0.9);
  next = sa_step(state, unit, ProjectionBall(3.0), Eigen::VectorXd::Constant(1, 2.0),
                 Eigen::VectorXd::Zero(1));
  CHECK(next.lambda(0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("sa_step rejects dimension mismatches") {
  SaState state;
  state.lambda = Eigen::VectorXd::Zero(2);
  state.xi = Eigen::VectorXd::Zero(2);
  const LearningSchedule s(1.0, 0.5, 1.0, 0.7);
  CHECK_THROWS_AS(sa_step(state, s, ProjectionBall::inactive(), Eigen::VectorXd::Zero(3),
                          Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(sa_step(state, s, ProjectionBall::inactive(), Eigen::VectorXd::Zero(2),
                          Eigen::VectorXd::Zero(1)),
                  std::invalid_argument);
}

TEST_CASE("projected iterates stay inside the ball along a run") {
  Rng rng = seed_stream(7, 1);
  SaState state;
  state.lambda = Eigen::VectorXd::Zero(3);
  state.xi = Eigen::VectorXd::Zero(2);
  const LearningSchedule s(2.0, 0.6, 1.0, 0.8);
  const ProjectionBall ball(1.2);
  for (int t = 0; t < 500; ++t) {
    Eigen::VectorXd g(3), h(2);
    for (int i = 0; i < 3; ++i) g(i) = rng.normal(0.0, 5.0);
    for (int i = 0; i < 2; ++i) h(i) = rng.normal(0.0, 5.0);
    state = sa_step(state, s, ball, g, h);
    CHECK(state.lambda.norm() <= 1.2 + 1e-12);
    CHECK(state.xi.norm() <= 1.2 + 1e-12);
  }
}
