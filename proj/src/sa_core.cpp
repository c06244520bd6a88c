#include "ivrl/sa_core.hpp"

#include <cmath>
#include <stdexcept>

namespace ivrl {

LearningSchedule::LearningSchedule(double alpha0_, double kappa_, double beta0_, double delta_)
    : alpha0(alpha0_), kappa(kappa_), beta0(beta0_), delta(delta_) {
  if (!(alpha0 > 0.0) || !(beta0 > 0.0))
    throw std::invalid_argument("LearningSchedule: alpha0 and beta0 must be > 0");
  if (!(kappa > 0.0 && kappa <= delta && delta <= 1.0))
    throw std::invalid_argument("LearningSchedule: need 0 < kappa <= delta <= 1");
}

std::pair<double, double> step_sizes(const LearningSchedule& schedule, long t) {
  if (t < 1) throw std::invalid_argument("step_sizes: schedule is defined for t >= 1");
  const double td = static_cast<double>(t);
  return {schedule.alpha0 * std::pow(td, -schedule.kappa),
          schedule.beta0 * std::pow(td, -schedule.delta)};
}

ProjectionBall::ProjectionBall(double radius) : radius_(radius), active_(true) {
  if (!(radius > 0.0)) throw std::invalid_argument("ProjectionBall: radius must be > 0");
}

Eigen::VectorXd ProjectionBall::project(const Eigen::VectorXd& x) const {
  if (!active_) return x;
  const double n = x.norm();
  if (n <= radius_) return x;
  return x * (radius_ / n);
}

Eigen::MatrixXd ProjectionBall::project(const Eigen::MatrixXd& x) const {
  if (!active_) return x;
  const double n = x.norm();  // Frobenius
  if (n <= radius_) return x;
  return x * (radius_ / n);
}

SaState sa_step(const SaState& state, const LearningSchedule& schedule,
                const ProjectionBall& ball, const Eigen::VectorXd& g_value,
                const Eigen::VectorXd& h_value) {
  if (g_value.size() != state.lambda.size())
    throw std::invalid_argument("sa_step: g_value dimension mismatch");
  if (h_value.size() != state.xi.size())
    throw std::invalid_argument("sa_step: h_value dimension mismatch");
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  SaState next;
  next.lambda = ball.project(Eigen::VectorXd(state.lambda + alpha * g_value));
  next.xi = ball.project(Eigen::VectorXd(state.xi + beta * h_value));
  next.t = state.t + 1;
  return next;
}

}  // namespace ivrl
