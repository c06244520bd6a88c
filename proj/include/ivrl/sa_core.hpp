#pragma once

#include <Eigen/Dense>
#include <utility>

namespace ivrl {

// Polynomial two-timescale step sizes: alpha_t = alpha0 * t^-kappa,
// beta_t = beta0 * t^-delta, defined for t >= 1 with 0 < kappa <= delta <= 1.
struct LearningSchedule {
  double alpha0 = 1.0;
  double kappa = 0.7;
  double beta0 = 1.0;
  double delta = 0.9;

  LearningSchedule() = default;
  LearningSchedule(double alpha0_, double kappa_, double beta0_, double delta_);
};

std::pair<double, double> step_sizes(const LearningSchedule& schedule, long t);

// Euclidean projection onto a centered ball of radius B, or a no-op when
// inactive. Points already inside are returned unchanged (bit-exact).
class ProjectionBall {
 public:
  static ProjectionBall inactive() { return ProjectionBall(); }
  explicit ProjectionBall(double radius);

  bool active() const { return active_; }
  double radius() const { return radius_; }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  // Frobenius-norm projection for matrix iterates.
  Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;

 private:
  ProjectionBall() = default;
  double radius_ = 0.0;
  bool active_ = false;
};

// Coupled iterate pair (fast lambda, slow xi). The counter t is the index of
// the next update; the first update uses alpha_1, beta_1.
struct SaState {
  Eigen::VectorXd lambda;
  Eigen::VectorXd xi;
  long t = 1;
};

// One projected two-timescale step. g_value and h_value are the drifts
// G(W_t, lambda_t, xi_t) and H(W_t, xi_t) evaluated at the pre-step iterates.
SaState sa_step(const SaState& state, const LearningSchedule& schedule,
                const ProjectionBall& ball, const Eigen::VectorXd& g_value,
                const Eigen::VectorXd& h_value);

}  // namespace ivrl
