#pragma once

#include <Eigen/Dense>
#include <functional>

#include "ivrl/environments.hpp"
#include "ivrl/sa_core.hpp"

namespace ivrl {

// Coupled iterate of the IV algorithms: theta (fast) and the first-stage
// matrix Gamma (slow). t indexes the next update; first update uses step 1.
struct IvState {
  Eigen::VectorXd theta;
  Eigen::MatrixXd gamma;  // p x q
  long t = 1;
};

// Baseline iterate for the single-parameter algorithms (SGD, Q-Learning).
struct BaselineState {
  Eigen::VectorXd theta;
  long t = 1;
};

// Critic/actor/first-stage triple for IV-AC.
struct AcState {
  Eigen::VectorXd theta;
  Eigen::VectorXd mu;
  Eigen::MatrixXd gamma;
  long t = 1;
};

struct FeatureMap {
  int p = 0;
  std::function<Eigen::VectorXd(double s, double a)> eval;
};

// phi(s,a) = (1, s, a, s*a, s^2, a^2)
FeatureMap lq_features();

struct ActionInterval {
  double lo = 0.0;
  double hi = 2.0;
};

// IV-SGD for a fixed policy: theta' = theta + alpha*(y - x'theta)*Gamma*z,
// Gamma' = Gamma + beta*(x - Gamma*z)*z'.
IvState iv_sgd_update(const IvState& state, const Eigen::VectorXd& x, double y,
                      const Eigen::VectorXd& z, const LearningSchedule& schedule,
                      const ProjectionBall& ball);

// Digital-advertising variant with an exogenous intercept: theta in R^2,
// Gamma is 1 x q for the single endogenous covariate s*a, and the theta
// update direction is (1, Gamma*z).
IvState iv_sgd_intercept_update(const IvState& state, double sa, double y,
                                const Eigen::VectorXd& z, const LearningSchedule& schedule,
                                const ProjectionBall& ball);

// Interactive-policy IV-SGD (scalar theta, policy A_t = theta_t * S_t):
// theta' = theta + alpha*(y - x*theta^2)*Gamma*z.
IvState iv_sgd_interactive_update(const IvState& state, double x, double y,
                                  const Eigen::VectorXd& z, const LearningSchedule& schedule,
                                  const ProjectionBall& ball);

// Biased least-mean-squares baseline along X_t.
BaselineState sgd_update(const BaselineState& state, const Eigen::VectorXd& x, double y,
                         const LearningSchedule& schedule, const ProjectionBall& ball);

// argmax_a phi(s,a)'theta over [lo, hi] for feature maps quadratic in a.
// Interior closed form when the quadratic is concave, endpoint comparison
// otherwise, ties toward lo.
double greedy_action(const FeatureMap& features, const Eigen::VectorXd& theta, double s,
                     const ActionInterval& interval);

// max_a phi(s,a)'theta over the interval.
double max_q_value(const FeatureMap& features, const Eigen::VectorXd& theta, double s,
                   const ActionInterval& interval);

IvState iv_q_update(const IvState& state, const Observation& obs, const FeatureMap& features,
                    double gamma_discount, const ActionInterval& interval,
                    const LearningSchedule& schedule, const ProjectionBall& ball);

BaselineState q_update(const BaselineState& state, const Observation& obs,
                       const FeatureMap& features, double gamma_discount,
                       const ActionInterval& interval, const LearningSchedule& schedule,
                       const ProjectionBall& ball);

// Policy evaluation: the TD target uses the supplied next action obs.next_action.
IvState iv_td_update(const IvState& state, const Observation& obs, const FeatureMap& features,
                     double gamma_discount, const LearningSchedule& schedule,
                     const ProjectionBall& ball);

// Critic step as IV-TD; actor step mu' = mu + tau/(1-gamma) * phi'theta *
// grad_log_pi, with grad_log_pi supplied by the caller's policy family.
AcState iv_ac_update(const AcState& state, const Observation& obs, const FeatureMap& features,
                     double gamma_discount, const LearningSchedule& schedule, double tau_t,
                     const Eigen::VectorXd& grad_log_pi, const ProjectionBall& ball);

// Drift adapters used by the inference plug-ins.
// Intercept-form IV-SGD drift G(w, theta, Gamma) = (y - theta0 - theta1*s*a) * (1, Gamma z)'.
Eigen::VectorXd ad_ivsgd_drift(const Observation& obs, const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& gamma);
// d G / d theta for the same drift: -(1, Gamma z)' (1, s*a).
Eigen::MatrixXd ad_ivsgd_drift_jacobian(const Observation& obs, const Eigen::VectorXd& theta,
                                        const Eigen::MatrixXd& gamma);

Eigen::VectorXd iv_q_drift(const Observation& obs, const Eigen::VectorXd& theta,
                           const Eigen::MatrixXd& gamma, const FeatureMap& features,
                           double gamma_discount, const ActionInterval& interval);
// Envelope-theorem Jacobian: Gamma z * (gamma*phi(s', a*(s')) - phi(s,a))'.
Eigen::MatrixXd iv_q_drift_jacobian(const Observation& obs, const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& gamma, const FeatureMap& features,
                                    double gamma_discount, const ActionInterval& interval);

}  // namespace ivrl
