#include "ivrl/algorithms.hpp"

#include <cmath>
#include <stdexcept>

namespace ivrl {

namespace {

void check_iv_dims(const IvState& state, long x_size, long z_size) {
  if (state.theta.size() != x_size)
    throw std::invalid_argument("iv update: x dimension does not match theta");
  if (state.gamma.rows() != x_size || state.gamma.cols() != z_size)
    throw std::invalid_argument("iv update: Gamma shape does not match (x, z)");
}

}  // namespace

FeatureMap lq_features() {
  FeatureMap f;
  f.p = 6;
  f.eval = [](double s, double a) {
    Eigen::VectorXd phi(6);
    phi << 1.0, s, a, s * a, s * s, a * a;
    return phi;
  };
  return f;
}

IvState iv_sgd_update(const IvState& state, const Eigen::VectorXd& x, double y,
                      const Eigen::VectorXd& z, const LearningSchedule& schedule,
                      const ProjectionBall& ball) {
  check_iv_dims(state, x.size(), z.size());
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  const Eigen::VectorXd gz = state.gamma * z;
  const double residual = y - x.dot(state.theta);
  IvState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * residual * gz));
  next.gamma = ball.project(Eigen::MatrixXd(state.gamma + beta * (x - gz) * z.transpose()));
  next.t = state.t + 1;
  return next;
}

IvState iv_sgd_intercept_update(const IvState& state, double sa, double y,
                                const Eigen::VectorXd& z, const LearningSchedule& schedule,
                                const ProjectionBall& ball) {
  if (state.theta.size() != 2)
    throw std::invalid_argument("iv_sgd_intercept_update: theta must have length 2");
  if (state.gamma.rows() != 1 || state.gamma.cols() != z.size())
    throw std::invalid_argument("iv_sgd_intercept_update: Gamma must be 1 x q");
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  const double gz = (state.gamma * z)(0);
  const double residual = y - state.theta(0) - state.theta(1) * sa;
  Eigen::VectorXd direction(2);
  direction << 1.0, gz;
  IvState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * residual * direction));
  next.gamma = ball.project(Eigen::MatrixXd(state.gamma + beta * (sa - gz) * z.transpose()));
  next.t = state.t + 1;
  return next;
}

IvState iv_sgd_interactive_update(const IvState& state, double x, double y,
                                  const Eigen::VectorXd& z, const LearningSchedule& schedule,
                                  const ProjectionBall& ball) {
  if (state.theta.size() != 1)
    throw std::invalid_argument("iv_sgd_interactive_update: theta must be scalar");
  if (state.gamma.rows() != 1 || state.gamma.cols() != z.size())
    throw std::invalid_argument("iv_sgd_interactive_update: Gamma must be 1 x q");
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  const double gz = (state.gamma * z)(0);
  const double th = state.theta(0);
  const double residual = y - x * th * th;
  IvState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta.array() + alpha * residual * gz));
  next.gamma = ball.project(Eigen::MatrixXd(state.gamma + beta * (x - gz) * z.transpose()));
  next.t = state.t + 1;
  return next;
}

BaselineState sgd_update(const BaselineState& state, const Eigen::VectorXd& x, double y,
                         const LearningSchedule& schedule, const ProjectionBall& ball) {
  if (x.size() != state.theta.size())
    throw std::invalid_argument("sgd_update: x dimension mismatch");
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  (void)beta;
  const double residual = y - x.dot(state.theta);
  BaselineState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * residual * x));
  next.t = state.t + 1;
  return next;
}

double greedy_action(const FeatureMap& features, const Eigen::VectorXd& theta, double s,
                     const ActionInterval& interval) {
  if (!theta.allFinite()) throw std::invalid_argument("greedy_action: non-finite theta");
  // Recover the quadratic q(a) = q0 + B*a + C*a^2 from three evaluations.
  const double q0 = features.eval(s, 0.0).dot(theta);
  const double qp = features.eval(s, 1.0).dot(theta);
  const double qm = features.eval(s, -1.0).dot(theta);
  const double curv = 0.5 * (qp + qm) - q0;   // C
  const double slope = 0.5 * (qp - qm);       // B
  if (curv < 0.0) {
    const double a = -slope / (2.0 * curv);
    return std::min(std::max(a, interval.lo), interval.hi);
  }
  const double qlo = features.eval(s, interval.lo).dot(theta);
  const double qhi = features.eval(s, interval.hi).dot(theta);
  return qlo >= qhi ? interval.lo : interval.hi;
}

double max_q_value(const FeatureMap& features, const Eigen::VectorXd& theta, double s,
                   const ActionInterval& interval) {
  const double a = greedy_action(features, theta, s, interval);
  return features.eval(s, a).dot(theta);
}

IvState iv_q_update(const IvState& state, const Observation& obs, const FeatureMap& features,
                    double gamma_discount, const ActionInterval& interval,
                    const LearningSchedule& schedule, const ProjectionBall& ball) {
  const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
  if (!phi.allFinite()) throw std::invalid_argument("iv_q_update: non-finite features");
  check_iv_dims(state, phi.size(), obs.instruments.size());
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  const Eigen::VectorXd gz = state.gamma * obs.instruments;
  const double td = obs.reward_observed +
                    gamma_discount * max_q_value(features, state.theta, obs.next_state, interval) -
                    phi.dot(state.theta);
  IvState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * td * gz));
  next.gamma = ball.project(
      Eigen::MatrixXd(state.gamma + beta * (phi - gz) * obs.instruments.transpose()));
  next.t = state.t + 1;
  return next;
}

BaselineState q_update(const BaselineState& state, const Observation& obs,
                       const FeatureMap& features, double gamma_discount,
                       const ActionInterval& interval, const LearningSchedule& schedule,
                       const ProjectionBall& ball) {
  const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
  if (!phi.allFinite()) throw std::invalid_argument("q_update: non-finite features");
  if (phi.size() != state.theta.size())
    throw std::invalid_argument("q_update: feature dimension mismatch");
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  (void)beta;
  const double td = obs.reward_observed +
                    gamma_discount * max_q_value(features, state.theta, obs.next_state, interval) -
                    phi.dot(state.theta);
  BaselineState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * td * phi));
  next.t = state.t + 1;
  return next;
}

IvState iv_td_update(const IvState& state, const Observation& obs, const FeatureMap& features,
                     double gamma_discount, const LearningSchedule& schedule,
                     const ProjectionBall& ball) {
  const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
  const Eigen::VectorXd phi_next = features.eval(obs.next_state, obs.next_action);
  if (!phi.allFinite() || !phi_next.allFinite())
    throw std::invalid_argument("iv_td_update: non-finite features");
  check_iv_dims(state, phi.size(), obs.instruments.size());
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  const Eigen::VectorXd gz = state.gamma * obs.instruments;
  const double td = obs.reward_observed + gamma_discount * phi_next.dot(state.theta) -
                    phi.dot(state.theta);
  IvState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * td * gz));
  next.gamma = ball.project(
      Eigen::MatrixXd(state.gamma + beta * (phi - gz) * obs.instruments.transpose()));
  next.t = state.t + 1;
  return next;
}

AcState iv_ac_update(const AcState& state, const Observation& obs, const FeatureMap& features,
                     double gamma_discount, const LearningSchedule& schedule, double tau_t,
                     const Eigen::VectorXd& grad_log_pi, const ProjectionBall& ball) {
  if (gamma_discount >= 1.0)
    throw std::invalid_argument("iv_ac_update: gamma must be < 1 (actor scaling)");
  if (grad_log_pi.size() != state.mu.size())
    throw std::invalid_argument("iv_ac_update: grad_log_pi dimension mismatch");
  const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
  const Eigen::VectorXd phi_next = features.eval(obs.next_state, obs.next_action);
  if (state.gamma.rows() != phi.size() || state.gamma.cols() != obs.instruments.size())
    throw std::invalid_argument("iv_ac_update: Gamma shape mismatch");
  const auto [alpha, beta] = step_sizes(schedule, state.t);
  const Eigen::VectorXd gz = state.gamma * obs.instruments;
  const double td = obs.reward_observed + gamma_discount * phi_next.dot(state.theta) -
                    phi.dot(state.theta);
  AcState next;
  next.theta = ball.project(Eigen::VectorXd(state.theta + alpha * td * gz));
  next.mu = ball.project(Eigen::VectorXd(
      state.mu + tau_t / (1.0 - gamma_discount) * phi.dot(state.theta) * grad_log_pi));
  next.gamma = ball.project(
      Eigen::MatrixXd(state.gamma + beta * (phi - gz) * obs.instruments.transpose()));
  next.t = state.t + 1;
  return next;
}

Eigen::VectorXd ad_ivsgd_drift(const Observation& obs, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& gamma) {
  const double sa = obs.state * obs.action;
  const double gz = (gamma * obs.instruments)(0);
  const double residual = obs.reward_observed - theta(0) - theta(1) * sa;
  Eigen::VectorXd g(2);
  g << residual, residual * gz;
  return g;
}

Eigen::MatrixXd ad_ivsgd_drift_jacobian(const Observation& obs, const Eigen::VectorXd& theta,
                                        const Eigen::MatrixXd& gamma) {
  (void)theta;
  const double sa = obs.state * obs.action;
  const double gz = (gamma * obs.instruments)(0);
  Eigen::MatrixXd j(2, 2);
  j << -1.0, -sa, -gz, -gz * sa;
  return j;
}

Eigen::VectorXd iv_q_drift(const Observation& obs, const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& gamma, const FeatureMap& features,
                           double gamma_discount, const ActionInterval& interval) {
  const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
  const double td = obs.reward_observed +
                    gamma_discount * max_q_value(features, theta, obs.next_state, interval) -
                    phi.dot(theta);
  return td * (gamma * obs.instruments);
}

Eigen::MatrixXd iv_q_drift_jacobian(const Observation& obs, const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& gamma, const FeatureMap& features,
                                    double gamma_discount, const ActionInterval& interval) {
  const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
  const double a_star = greedy_action(features, theta, obs.next_state, interval);
  const Eigen::VectorXd phi_star = features.eval(obs.next_state, a_star);
  const Eigen::VectorXd gz = gamma * obs.instruments;
  return gz * (gamma_discount * phi_star - phi).transpose();
}

}  // namespace ivrl
