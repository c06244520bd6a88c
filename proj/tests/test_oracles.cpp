#include <doctest.h>

#include <cmath>

#include "ivrl/oracles.hpp"
#include "ivrl/rng.hpp"

using namespace ivrl;

namespace {

LqEnvConfig paper_lq() { return LqEnvConfig{}; }

}  // namespace

TEST_CASE("rbias fixed points") {
  CHECK(rbias_fixed_point(1.0, 0.0, RbiasMode::kActionNoise) == doctest::Approx(1.0));
  CHECK(rbias_fixed_point(1.0, 0.5, RbiasMode::kActionNoise) == doctest::Approx(2.0));
  CHECK(rbias_fixed_point(1.0, 2.0, RbiasMode::kStateNoise) == doctest::Approx(2.0));
  CHECK_THROWS_AS(rbias_fixed_point(1.0, 1.0, RbiasMode::kActionNoise), std::invalid_argument);
  CHECK_THROWS_AS(rbias_fixed_point(1.0, -0.5, RbiasMode::kStateNoise), std::invalid_argument);
}

TEST_CASE("sgd bias closed form: b = 0 gives zero, table values reproduced") {
  CHECK(sgd_bias_closed_form(0.3, 0.5, 0.0) == doctest::Approx(0.0));
  // population values behind the reported long-run biases (0.148, 0.138)
  CHECK(sgd_bias_closed_form(0.3, 0.5, 0.3) == doctest::Approx(0.148).epsilon(0.02));
  CHECK(sgd_bias_closed_form(0.7, 0.5, 0.3) == doctest::Approx(0.138).epsilon(0.03));
  // and scaled by b
  CHECK(sgd_bias_closed_form(0.3, 0.5, 0.7) ==
        doctest::Approx(sgd_bias_closed_form(0.3, 0.5, 0.3) * 7.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("sgd bias report: closed form agrees with Monte Carlo, printed form surfaced") {
  Rng rng = seed_stream(31, 0);
  const auto report = sgd_bias_report(0.3, 0.5, 0.3, 2000000, rng);
  CHECK(std::fabs(report.closed_form - report.monte_carlo) < 3.0 * report.monte_carlo_se);
  // the as-printed ratio is retained for comparison; at p=0.3 it sits well
  // off the Monte-Carlo value (its p plays the opposite role), which is
  // exactly what the report is meant to surface
  CHECK(report.as_printed == doctest::Approx(0.159).epsilon(0.02));
  CHECK(std::fabs(report.as_printed - report.monte_carlo) > 3.0 * report.monte_carlo_se);
}

TEST_CASE("solve_theta_star: gamma = 0 closed forms are exact") {
  LqEnvConfig cfg = paper_lq();
  cfg.gamma = 1e-300;  // validate() requires gamma > 0; the chi terms vanish
  const ThetaStar theta = solve_theta_star(cfg);
  const double bias_mean = cfg.b * cfg.a2_sq_mean();
  CHECK(theta(0) == doctest::Approx(cfg.r[0] + bias_mean).epsilon(1e-12));
  CHECK(theta(1) == doctest::Approx(0.0));
  CHECK(theta(2) == doctest::Approx(cfg.r[1]).epsilon(1e-12));
  CHECK(theta(3) == doctest::Approx(cfg.r[2]).epsilon(1e-12));
  CHECK(theta(4) == doctest::Approx(0.0));
  CHECK(theta(5) == doctest::Approx(cfg.r[3]).epsilon(1e-12));
}

TEST_CASE("solve_theta_star: paper configuration") {
  const LqEnvConfig cfg = paper_lq();
  const ThetaStar theta = solve_theta_star(cfg);
  // every matching equation satisfied to 1e-10
  CHECK(theta_star_residuals(cfg, theta).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(theta(5) < 0.0);
  // internal consistency theta4 = gamma c1^2 chi2
  const double chi2 = theta(4) - theta(3) * theta(3) / (4.0 * theta(5));
  CHECK(theta(4) == doctest::Approx(cfg.gamma * cfg.c[1] * cfg.c[1] * chi2).epsilon(1e-10));
  // cross-check against an independent evaluation of the same system
  CHECK(theta(0) == doctest::Approx(2.912721).epsilon(1e-5));
  CHECK(theta(1) == doctest::Approx(0.168225).epsilon(1e-5));
  CHECK(theta(2) == doctest::Approx(0.084113).epsilon(1e-5));
  CHECK(theta(3) == doctest::Approx(1.040102).epsilon(1e-5));
  CHECK(theta(4) == doctest::Approx(0.040102).epsilon(1e-5));
  CHECK(theta(5) == doctest::Approx(-0.989975).epsilon(1e-5));
}

TEST_CASE("optimal_policy examples and theta0 invariance") {
  ThetaStar theta;
  theta << 0.0, 0.0, 0.0, 1.0, 0.0, -1.0;
  PolicyCoeffs p = optimal_policy(theta);
  CHECK(p.omega0 == doctest::Approx(0.0));
  CHECK(p.omega1 == doctest::Approx(0.5));
  theta << 0.0, 0.0, 2.0, 0.0, 0.0, -1.0;
  p = optimal_policy(theta);
  CHECK(p.omega0 == doctest::Approx(1.0));
  CHECK(p.omega1 == doctest::Approx(0.0));
  // perturbing theta0 leaves the policy bit-exact
  ThetaStar shifted = theta;
  shifted(0) += 17.5;
  const PolicyCoeffs q = optimal_policy(shifted);
  CHECK(q.omega0 == p.omega0);
  CHECK(q.omega1 == p.omega1);
  theta(5) = 0.5;
  CHECK_THROWS_AS(optimal_policy(theta), std::invalid_argument);
}

TEST_CASE("value_of_linear_policy: gamma = 0 collapse") {
  LqEnvConfig cfg = paper_lq();
  cfg.gamma = 1e-300;
  const PolicyCoeffs pol{0.3, 0.4};
  const ValueCoeffs v = value_of_linear_policy(cfg, pol);
  const double r1 = cfg.r[1], r2 = cfg.r[2], r3 = cfg.r[3];
  CHECK(v.v2 == doctest::Approx(r2 * pol.omega1 + r3 * pol.omega1 * pol.omega1).epsilon(1e-12));
  CHECK(v.v1 == doctest::Approx(r1 * pol.omega1 + r2 * pol.omega0 +
                                2.0 * r3 * pol.omega0 * pol.omega1).epsilon(1e-12));
  CHECK(v.v0 == doctest::Approx(cfg.r[0] + r1 * pol.omega0 + r3 * pol.omega0 * pol.omega0)
                    .epsilon(1e-12));
}

TEST_CASE("value_of_linear_policy: zero policy has zero value under the paper rewards") {
  const LqEnvConfig cfg = paper_lq();
  const ValueCoeffs v = value_of_linear_policy(cfg, PolicyCoeffs{0.0, 0.0});
  CHECK(v.v0 == doctest::Approx(0.0));
  CHECK(v.v1 == doctest::Approx(0.0));
  CHECK(v.v2 == doctest::Approx(0.0));
}

TEST_CASE("value_of_linear_policy satisfies the Bellman identity") {
  const LqEnvConfig cfg = paper_lq();
  const ThetaStar theta = solve_theta_star(cfg);
  const PolicyCoeffs pol = optimal_policy(theta);
  const ValueCoeffs v = value_of_linear_policy(cfg, pol);
  for (double s : {0.0, 1.0, 2.0, 4.0}) {
    const double a = pol.at(s);
    const double s_mean = cfg.c[0] + cfg.c[1] * s + cfg.c[2] * a;
    const double rhs = cfg.true_reward(s, a) +
                       cfg.gamma * (v.v0 + v.v1 * s_mean +
                                    v.v2 * (s_mean * s_mean + cfg.sigma_eta_sq()));
    CHECK(std::fabs(v.at(s) - rhs) < 1e-10);
  }
}

TEST_CASE("value_of_linear_policy rejects unstable policies") {
  const LqEnvConfig cfg = paper_lq();
  // omega1 large: gamma*(c1 + c2*omega1)^2 >= 1
  CHECK_THROWS_AS(value_of_linear_policy(cfg, PolicyCoeffs{0.0, 10.0}), std::invalid_argument);
}

TEST_CASE("optimal value dominates random stable policies") {
  const LqEnvConfig cfg = paper_lq();
  const ThetaStar theta = solve_theta_star(cfg);
  const PolicyCoeffs star = optimal_policy(theta);
  const ValueCoeffs v_star = value_of_linear_policy(cfg, star);
  Rng rng = seed_stream(32, 0);
  int checked = 0;
  while (checked < 100) {
    const PolicyCoeffs pol{rng.normal(0.0, 0.7), rng.normal(0.5, 0.7)};
    const double m = cfg.c[1] + cfg.c[2] * pol.omega1;
    if (!(cfg.gamma * m * m < 0.98)) continue;
    const ValueCoeffs v = value_of_linear_policy(cfg, pol);
    for (double s : {0.0, 1.0, 2.0, 4.0}) CHECK(v_star.at(s) >= v.at(s) - 1e-9);
    ++checked;
  }
}

TEST_CASE("optimal policy is a local maximum in the policy coefficients") {
  const LqEnvConfig cfg = paper_lq();
  const PolicyCoeffs star = optimal_policy(solve_theta_star(cfg));
  const ValueCoeffs v_star = value_of_linear_policy(cfg, star);
  for (double ds : {-0.01, 0.01}) {
    const ValueCoeffs v0 = value_of_linear_policy(cfg, PolicyCoeffs{star.omega0 + ds, star.omega1});
    const ValueCoeffs v1 = value_of_linear_policy(cfg, PolicyCoeffs{star.omega0, star.omega1 + ds});
    for (double s : {1.0, 2.0, 4.0}) {
      CHECK(v0.at(s) <= v_star.at(s) + 1e-12);
      CHECK(v1.at(s) <= v_star.at(s) + 1e-12);
    }
  }
}

TEST_CASE("Monte-Carlo rollouts agree with the value coefficients") {
  const LqEnvConfig cfg = paper_lq();
  const PolicyCoeffs star = optimal_policy(solve_theta_star(cfg));
  const ValueCoeffs v = value_of_linear_policy(cfg, star);
  Rng rng = seed_stream(33, 0);
  for (double s0 : {1.0, 2.0}) {
    const auto [mean, se] = rollout_value(cfg, star, s0, 200, 10000, rng);
    CHECK(std::fabs(mean - v.at(s0)) < 3.0 * se);
  }
}

TEST_CASE("ltoc: truth gives zero, perturbations cost value") {
  const LqEnvConfig cfg = paper_lq();
  const ThetaStar theta = solve_theta_star(cfg);
  for (double s : {1.0, 2.0, 4.0}) {
    const LtocResult at_star = ltoc(cfg, theta, s);
    CHECK(std::fabs(at_star.absolute) < 1e-10);
    CHECK(std::fabs(at_star.relative) < 1e-10);
  }
  Rng rng = seed_stream(34, 0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd perturbed = theta;
    for (int i = 0; i < 6; ++i) perturbed(i) += rng.normal(0.0, 0.2);
    if (!(perturbed(5) < 0.0)) continue;
    const PolicyCoeffs pol{-perturbed(2) / (2.0 * perturbed(5)),
                           -perturbed(3) / (2.0 * perturbed(5))};
    const double m = cfg.c[1] + cfg.c[2] * pol.omega1;
    if (!(cfg.gamma * m * m < 1.0)) continue;
    for (double s : {1.0, 2.0, 4.0}) CHECK(ltoc(cfg, perturbed, s).absolute >= -1e-9);
  }
}

TEST_CASE("ltoc rejects undefined policies") {
  const LqEnvConfig cfg = paper_lq();
  Eigen::VectorXd bad(6);
  bad << 0.0, 0.0, 0.0, 1.0, 0.0, 0.5;  // theta5 > 0
  CHECK_THROWS_AS(ltoc(cfg, bad, 1.0), std::invalid_argument);
}
