#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "ivrl/rng.hpp"

namespace ivrl {

// One environment record W_t as consumed by the learning updates.
struct Observation {
  double state = 0.0;            // S_t
  double action = 0.0;           // A_t
  double reward_observed = 0.0;  // R_t (endogenous noise included)
  Eigen::VectorXd instruments;   // Z_t
  double next_state = 0.0;       // S_{t+1}
  // aux components, populated where meaningful
  double explore = 0.0;      // q_t, 1 on exploration periods
  double action_1 = 0.0;     // A_{t,1}
  double action_2 = 0.0;     // A_{t,2}
  double next_action = 0.0;  // A_{t+1}, filled by TD/AC drivers
};

// Digital-advertising model: i.i.d. lognormal states, randomized linear
// policy with uniform exploration, reward noise b*A^2 + o. The instrument
// q_t*(S_t - E[S_t]) is live on exploration periods, where the action is
// independent of the state.
struct AdEnvConfig {
  std::array<double, 2> theta_star{0.0, 1.0};  // (theta0*, theta1*)
  double tilde_theta = 0.5;                    // fixed-policy slope
  double p_explore = 0.3;                      // probability of uniform exploration
  double b = 0.3;                              // endogeneity coefficient
  double sigma_eps = 1.0;                      // std of o_t
  double s_mean = std::exp(0.125);             // E[S_t], log S ~ N(0, 1/4)

  void validate() const;
};

class AdEnv {
 public:
  AdEnv(const AdEnvConfig& cfg, Rng rng);
  Observation step();
  const AdEnvConfig& config() const { return cfg_; }

 private:
  AdEnvConfig cfg_;
  Rng rng_;
  double s_;  // current state, drawn ahead
};

// Linear-quadratic MDP: AR(1) state in the combined action, quadratic true
// reward, endogenous component b*A2^2, instruments built from (S, A1).
struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
  double mean() const { return 0.5 * (lo + hi); }
  double variance() const { return (hi - lo) * (hi - lo) / 12.0; }
};

struct BetaDist {
  double a = 1.0;
  double b = 1.5;
  double mean() const { return a / (a + b); }
  double second_moment() const { return a * (a + 1.0) / ((a + b) * (a + b + 1.0)); }
};

struct LqEnvConfig {
  double gamma = 0.8;                       // discount
  std::array<double, 3> c{0.5, 0.4, 0.2};   // transition (c0, c1, c2)
  std::array<double, 4> r{0.0, 0.0, 1.0, -1.0};  // reward (r0..r3)
  double b = 0.8;                           // endogeneity coefficient
  UniformDist eta_dist{-std::sqrt(3.0), std::sqrt(3.0)};
  BetaDist a1_dist{1.0, 1.5};
  BetaDist a2_dist{1.0, 1.5};
  UniformDist o_dist{-0.25, 0.25};

  void validate() const;
  double sigma_eta_sq() const { return eta_dist.variance(); }
  double mean_action() const { return a1_dist.mean() + a2_dist.mean(); }
  double a2_sq_mean() const { return a2_dist.second_moment(); }
  // Default S_0: c0 / (1 - c1 - c2*E[A]).
  double default_initial_state() const;
  double true_reward(double s, double a) const {
    return r[0] + r[1] * a + r[2] * s * a + r[3] * a * a;
  }
};

// One transition from state s under the supplied action pair.
Observation lq_env_step(const LqEnvConfig& cfg, double s, double a1, double a2, Rng& rng);

class LqEnv {
 public:
  LqEnv(const LqEnvConfig& cfg, Rng rng);
  LqEnv(const LqEnvConfig& cfg, Rng rng, double initial_state);
  // Samples (A1, A2) from the behavior policy and advances the state.
  Observation step();
  double state() const { return s_; }
  const LqEnvConfig& config() const { return cfg_; }
  Rng& rng() { return rng_; }

 private:
  LqEnvConfig cfg_;
  Rng rng_;
  double s_;
};

// Fixed-policy regression from the reinforcement-bias example: simulates n
// periods of A_t = policy_slope * S_t with noise beta*A^2 (action mode) or
// beta*S^2 (state mode) plus N(0, sigma_o^2), and returns the OLS estimate
// of theta from regressing (R_t + A_t^2/2) on S_t*A_t.
enum class RbiasMode { kActionNoise, kStateNoise };

double rbias_iteration_env(double theta_star, double beta, RbiasMode mode,
                           double policy_slope, Rng& rng, long n,
                           double sigma_o = 0.1);

}  // namespace ivrl
