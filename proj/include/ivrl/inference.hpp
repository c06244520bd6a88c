#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "ivrl/algorithms.hpp"
#include "ivrl/environments.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

enum class WeightScheme { kUniform, kBartlett };

struct TavcEstimate {
  Eigen::MatrixXd l0;    // lag-0 covariance
  Eigen::MatrixXd lbar;  // long-run covariance L(0) + sum w_l (L(l)+L(l)')
  int lag_window = 0;
  WeightScheme scheme = WeightScheme::kBartlett;
};

struct CovarianceReport {
  Eigen::MatrixXd a11;
  Eigen::MatrixXd lbar;
  Eigen::MatrixXd sigma;
  double alpha_t = 0.0;
  Eigen::VectorXd ci_half_widths;
};

using DriftFn = std::function<Eigen::VectorXd(const Observation&, const Eigen::VectorXd&,
                                              const Eigen::MatrixXd&)>;
using DriftJacobianFn = std::function<Eigen::MatrixXd(const Observation&, const Eigen::VectorXd&,
                                                      const Eigen::MatrixXd&)>;

// Centered drift evaluations G(W_k, theta_hat, gamma_hat) - mean, one row
// per record. The mean of the rows is zero by construction.
Eigen::MatrixXd residual_series(std::span<const Observation> records,
                                const Eigen::VectorXd& theta_hat,
                                const Eigen::MatrixXd& gamma_hat, const DriftFn& drift);

// Newey-West long-run covariance of the (already centered) residual rows.
TavcEstimate newey_west_tavc(const Eigen::MatrixXd& residuals, int lag_window,
                             WeightScheme scheme);

double newey_west_weight(WeightScheme scheme, int lag, int lag_window);

enum class JacobianMode { kAnalyticPlugIn, kFiniteDifference };

// Sample-average Jacobian d E[G]/d theta at (theta_hat, gamma_hat).
// Analytic mode averages the supplied per-record Jacobian (envelope form for
// the max term); finite-difference mode perturbs theta componentwise with
// step 1e-5*(1+|theta_i|). Throws if the result is ill-conditioned.
Eigen::MatrixXd estimate_jacobian_a11(std::span<const Observation> records,
                                      const Eigen::VectorXd& theta_hat,
                                      const Eigen::MatrixXd& gamma_hat,
                                      const DriftJacobianFn& drift_jacobian);
Eigen::MatrixXd estimate_jacobian_a11(std::span<const Observation> records,
                                      const Eigen::VectorXd& theta_hat,
                                      const Eigen::MatrixXd& gamma_hat, const DriftFn& drift);

// Unique solution of a11*Sigma + Sigma*a11' = -lbar via the vectorized linear
// system. a11 must be Hurwitz.
Eigen::MatrixXd lyapunov_sigma(const Eigen::MatrixXd& a11, const Eigen::MatrixXd& lbar);

// Half widths z_{(1+level)/2} * sqrt(alpha_t * sigma_ii).
Eigen::VectorXd ci_half_widths(const Eigen::MatrixXd& sigma, double alpha_t, double level);

// Per-component intervals theta_hat_i -+ half_width_i; column 0 lower,
// column 1 upper.
Eigen::MatrixX2d confidence_interval(const Eigen::VectorXd& theta_hat,
                                     const CovarianceReport& report, double level);

struct PolicyTestResult {
  double a_hat = 0.0;
  double omega_s = 0.0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

// Chi-square spot test of H0: a0 is the optimal action at state s (scalar
// action). sigma is the asymptotic covariance of theta.
PolicyTestResult spot_test(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& sigma,
                           double alpha_t, const FeatureMap& features, double s, double a0,
                           const ActionInterval& interval);

struct T2TestResult {
  double t2_stat = 0.0;
  double critical_value = 0.0;
  bool reject = false;
};

// Parametric-bootstrap test of H0: pi0 is the optimal policy, evaluated on
// the visited states. level is the significance level (e.g. 0.05).
T2TestResult policy_test_t2(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& sigma,
                            double alpha_t, const FeatureMap& features,
                            std::span<const double> visited_states,
                            const std::function<double(double)>& pi0, int n_boot, double level,
                            Rng& rng, const ActionInterval& interval);

}  // namespace ivrl
