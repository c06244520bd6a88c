#pragma once

#include <Eigen/Dense>
#include <optional>

#include "ivrl/environments.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

using ThetaStar = Eigen::Matrix<double, 6, 1>;

struct PolicyCoeffs {
  double omega0 = 0.0;
  double omega1 = 0.0;
  double at(double s) const { return omega0 + omega1 * s; }
};

struct ValueCoeffs {
  double v0 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double at(double s) const { return v0 + v1 * s + v2 * s * s; }
};

// Limiting estimate of the iterative re-estimation example: theta*/(1-beta)
// for action-dependent noise, theta* + (sqrt(theta*^2+4 beta)-theta*)/2 for
// state-dependent noise.
double rbias_fixed_point(double theta_star, double beta, RbiasMode mode);

// Long-run SGD bias Cov(b A^2, S A)/Var(S A) under the randomized ad policy,
// evaluated from the population moments of the lognormal state and uniform
// exploration (p = exploration probability).
double sgd_bias_closed_form(double p, double tilde_theta, double b);

// The same ratio with the coefficients exactly as printed in the source
// derivation. Kept for comparison; its exploration convention is swapped and
// two uniform-branch moments are off, so it disagrees with the Monte-Carlo
// value away from small p. See sgd_bias_report.
double sgd_bias_as_printed(double p, double tilde_theta, double b);

struct SgdBiasReport {
  double closed_form = 0.0;
  double as_printed = 0.0;
  double monte_carlo = 0.0;
  double monte_carlo_se = 0.0;
};

// Evaluates both formula variants and a Monte-Carlo estimate of
// Cov(b A^2, S A)/Var(S A); the report surfaces any disagreement.
SgdBiasReport sgd_bias_report(double p, double tilde_theta, double b, long n, Rng& rng);

// Solves the six coefficient-matching equations of the linear-quadratic
// Q-function. bias_mean defaults to b*E[A2^2] and shifts only theta0.
ThetaStar solve_theta_star(const LqEnvConfig& cfg,
                           std::optional<double> bias_mean = std::nullopt);

// Residuals of the six matching equations at the supplied coefficients.
Eigen::Matrix<double, 6, 1> theta_star_residuals(const LqEnvConfig& cfg, const ThetaStar& theta,
                                                 std::optional<double> bias_mean = std::nullopt);

// omega0 = -theta2/(2 theta5), omega1 = -theta3/(2 theta5); requires theta5 < 0.
PolicyCoeffs optimal_policy(const ThetaStar& theta);

// Value function V(s) = v0 + v1 s + v2 s^2 of the linear policy
// pi(s) = omega0 + omega1 s; requires gamma*(c1+c2*omega1)^2 < 1.
ValueCoeffs value_of_linear_policy(const LqEnvConfig& cfg, const PolicyCoeffs& policy);

struct LtocResult {
  double absolute = 0.0;
  double relative = 0.0;
};

// Long-term opportunity cost of the policy induced by theta_hat at state s.
LtocResult ltoc(const LqEnvConfig& cfg, const Eigen::VectorXd& theta_hat, double s);

// Monte-Carlo discounted return of a linear policy (test oracle for the
// value coefficients): mean and standard error over n rollouts.
std::pair<double, double> rollout_value(const LqEnvConfig& cfg, const PolicyCoeffs& policy,
                                        double s0, int horizon, long n, Rng& rng);

}  // namespace ivrl
