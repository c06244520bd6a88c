#include "ivrl/environments.hpp"

#include <stdexcept>

namespace ivrl {

void AdEnvConfig::validate() const {
  if (!(p_explore >= 0.0 && p_explore <= 1.0))
    throw std::invalid_argument("AdEnvConfig: p_explore must be in [0,1]");
  if (!(sigma_eps >= 0.0))
    throw std::invalid_argument("AdEnvConfig: sigma_eps must be >= 0");
  if (!(s_mean > 0.0)) throw std::invalid_argument("AdEnvConfig: s_mean must be > 0");
}

AdEnv::AdEnv(const AdEnvConfig& cfg, Rng rng) : cfg_(cfg), rng_(rng) {
  cfg_.validate();
  s_ = rng_.lognormal(0.0, 0.5);
}

Observation AdEnv::step() {
  Observation obs;
  obs.state = s_;
  obs.explore = rng_.bernoulli(cfg_.p_explore);
  obs.action = obs.explore > 0.5 ? rng_.uniform01() : cfg_.tilde_theta * obs.state;
  const double noise = cfg_.b * obs.action * obs.action +
                       (cfg_.sigma_eps > 0.0 ? rng_.normal(0.0, cfg_.sigma_eps) : 0.0);
  obs.reward_observed =
      cfg_.theta_star[0] + cfg_.theta_star[1] * obs.state * obs.action + noise;
  obs.instruments = Eigen::VectorXd(2);
  obs.instruments << 1.0, obs.explore * (obs.state - cfg_.s_mean);
  s_ = rng_.lognormal(0.0, 0.5);
  obs.next_state = s_;
  return obs;
}

void LqEnvConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("LqEnvConfig: gamma must be in (0,1)");
  if (!(eta_dist.hi > eta_dist.lo) || !(o_dist.hi >= o_dist.lo))
    throw std::invalid_argument("LqEnvConfig: degenerate noise bounds");
  if (std::fabs(eta_dist.mean()) > 1e-12)
    throw std::invalid_argument("LqEnvConfig: eta must have mean 0");
  if (std::fabs(o_dist.mean()) > 1e-12)
    throw std::invalid_argument("LqEnvConfig: o must have mean 0");
}

double LqEnvConfig::default_initial_state() const {
  const double denom = 1.0 - c[1] - c[2] * mean_action();
  if (!(denom > 0.0))
    throw std::invalid_argument("LqEnvConfig: unstable default initial state");
  return c[0] / denom;
}

Observation lq_env_step(const LqEnvConfig& cfg, double s, double a1, double a2, Rng& rng) {
  Observation obs;
  obs.state = s;
  obs.action_1 = a1;
  obs.action_2 = a2;
  obs.action = a1 + a2;
  const double eta = rng.uniform(cfg.eta_dist.lo, cfg.eta_dist.hi);
  obs.next_state = cfg.c[0] + cfg.c[1] * s + cfg.c[2] * obs.action + eta;
  const double o = rng.uniform(cfg.o_dist.lo, cfg.o_dist.hi);
  obs.reward_observed = cfg.true_reward(s, obs.action) + cfg.b * a2 * a2 + o;
  obs.instruments = Eigen::VectorXd(6);
  obs.instruments << 1.0, s, a1, s * a1, s * s, a1 * a1;
  return obs;
}

LqEnv::LqEnv(const LqEnvConfig& cfg, Rng rng)
    : LqEnv(cfg, rng, cfg.default_initial_state()) {}

LqEnv::LqEnv(const LqEnvConfig& cfg, Rng rng, double initial_state)
    : cfg_(cfg), rng_(rng), s_(initial_state) {
  cfg_.validate();
}

Observation LqEnv::step() {
  const double a1 = rng_.beta(cfg_.a1_dist.a, cfg_.a1_dist.b);
  const double a2 = rng_.beta(cfg_.a2_dist.a, cfg_.a2_dist.b);
  Observation obs = lq_env_step(cfg_, s_, a1, a2, rng_);
  s_ = obs.next_state;
  return obs;
}

double rbias_iteration_env(double theta_star, double beta, RbiasMode mode,
                           double policy_slope, Rng& rng, long n, double sigma_o) {
  if (n < 2) throw std::invalid_argument("rbias_iteration_env: need n >= 2");
  if (mode == RbiasMode::kStateNoise && policy_slope == 0.0)
    throw std::invalid_argument("rbias_iteration_env: state mode needs a nonzero slope");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (long i = 0; i < n; ++i) {
    const double s = rng.lognormal(0.0, 0.5);
    const double a = policy_slope * s;
    const double eps = (mode == RbiasMode::kActionNoise ? beta * a * a : beta * s * s) +
                       rng.normal(0.0, sigma_o);
    const double r = theta_star * s * a - 0.5 * a * a + eps;
    const double x = s * a;
    const double y = r + 0.5 * a * a;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nd = static_cast<double>(n);
  const double var = sxx / nd - (sx / nd) * (sx / nd);
  if (!(var > 1e-14)) throw std::runtime_error("rbias_iteration_env: degenerate regressor");
  const double cov = sxy / nd - (sx / nd) * (sy / nd);
  return cov / var;
}

}  // namespace ivrl
