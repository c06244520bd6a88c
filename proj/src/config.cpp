#include "ivrl/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace ivrl {

Preset preset_from_string(const std::string& name) {
  if (name == "rbias") return Preset::kRbias;
  if (name == "ivsgd-table") return Preset::kIvsgdTable;
  if (name == "coverage-table") return Preset::kCoverageTable;
  if (name == "lq-run") return Preset::kLqRun;
  if (name == "lq-oracle") return Preset::kLqOracle;
  if (name == "infer") return Preset::kInfer;
  throw std::invalid_argument("unknown preset: " + name);
}

std::string preset_to_string(Preset preset) {
  switch (preset) {
    case Preset::kRbias: return "rbias";
    case Preset::kIvsgdTable: return "ivsgd-table";
    case Preset::kCoverageTable: return "coverage-table";
    case Preset::kLqRun: return "lq-run";
    case Preset::kLqOracle: return "lq-oracle";
    case Preset::kInfer: return "infer";
  }
  return "?";
}

namespace {

using nlohmann::json;

void parse_schedule(const json& j, LearningSchedule& schedule) {
  double a0 = schedule.alpha0, ka = schedule.kappa, b0 = schedule.beta0, de = schedule.delta;
  for (const auto& [key, value] : j.items()) {
    if (key == "alpha0") a0 = value.get<double>();
    else if (key == "kappa") ka = value.get<double>();
    else if (key == "beta0") b0 = value.get<double>();
    else if (key == "delta") de = value.get<double>();
    else throw std::invalid_argument("config: unknown schedule key '" + key + "'");
  }
  schedule = LearningSchedule(a0, ka, b0, de);
}

void parse_ad_env(const json& j, AdEnvConfig& env) {
  for (const auto& [key, value] : j.items()) {
    if (key == "theta_star") {
      env.theta_star[0] = value.at(0).get<double>();
      env.theta_star[1] = value.at(1).get<double>();
    } else if (key == "tilde_theta") env.tilde_theta = value.get<double>();
    else if (key == "p_explore") env.p_explore = value.get<double>();
    else if (key == "b") env.b = value.get<double>();
    else if (key == "sigma_eps") env.sigma_eps = value.get<double>();
    else if (key == "s_mean") env.s_mean = value.get<double>();
    else throw std::invalid_argument("config: unknown ad_env key '" + key + "'");
  }
  env.validate();
}

void parse_lq_env(const json& j, LqEnvConfig& env) {
  for (const auto& [key, value] : j.items()) {
    if (key == "gamma") env.gamma = value.get<double>();
    else if (key == "c") {
      for (int i = 0; i < 3; ++i) env.c[static_cast<size_t>(i)] = value.at(i).get<double>();
    } else if (key == "r") {
      for (int i = 0; i < 4; ++i) env.r[static_cast<size_t>(i)] = value.at(i).get<double>();
    } else if (key == "b") env.b = value.get<double>();
    else if (key == "eta_dist") {
      env.eta_dist.lo = value.at(0).get<double>();
      env.eta_dist.hi = value.at(1).get<double>();
    } else if (key == "o_dist") {
      env.o_dist.lo = value.at(0).get<double>();
      env.o_dist.hi = value.at(1).get<double>();
    } else if (key == "a1_dist") {
      env.a1_dist.a = value.at(0).get<double>();
      env.a1_dist.b = value.at(1).get<double>();
    } else if (key == "a2_dist") {
      env.a2_dist.a = value.at(0).get<double>();
      env.a2_dist.b = value.at(1).get<double>();
    } else throw std::invalid_argument("config: unknown lq_env key '" + key + "'");
  }
  env.validate();
}

}  // namespace

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  in >> j;
  ExperimentConfig cfg = base;
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") cfg.preset = preset_from_string(value.get<std::string>());
    else if (key == "replications") cfg.replications = value.get<long>();
    else if (key == "horizon") cfg.horizon = value.get<long>();
    else if (key == "master_seed") cfg.master_seed = value.get<std::uint64_t>();
    else if (key == "threads") cfg.threads = value.get<int>();
    else if (key == "out") cfg.out = value.get<std::string>();
    else if (key == "paper_scale") cfg.paper_scale = value.get<bool>();
    else if (key == "ad_env") parse_ad_env(value, cfg.ad_env);
    else if (key == "ad_schedule") parse_schedule(value, cfg.ad_schedule);
    else if (key == "ad_projection_radius") cfg.ad_projection_radius = value.get<double>();
    else if (key == "lq_env") parse_lq_env(value, cfg.lq_env);
    else if (key == "lq_schedule") parse_schedule(value, cfg.lq_schedule);
    else if (key == "lq_projection_radius") cfg.lq_projection_radius = value.get<double>();
    else if (key == "lq_action_interval") {
      cfg.lq_action_interval.lo = value.at(0).get<double>();
      cfg.lq_action_interval.hi = value.at(1).get<double>();
    } else if (key == "lq_alpha_cap") cfg.lq_alpha_cap = value.get<double>();
    else if (key == "lq_beta_cap") cfg.lq_beta_cap = value.get<double>();
    else if (key == "lq_theta_warmup") cfg.lq_theta_warmup = value.get<long>();
    else if (key == "lq_rescale_alpha0") cfg.lq_rescale_alpha0 = value.get<bool>();
    else if (key == "lq_paper_horizon") cfg.lq_paper_horizon = value.get<long>();
    else if (key == "lq_gamma0_scale") cfg.lq_gamma0_scale = value.get<double>();
    else if (key == "lq_initial_state") cfg.lq_initial_state = value.get<double>();
    else if (key == "tavc_lag_c") cfg.tavc_lag_c = value.get<double>();
    else if (key == "burn_in_fraction") cfg.burn_in_fraction = value.get<double>();
    else if (key == "ci_level") cfg.ci_level = value.get<double>();
    else if (key == "n_boot") cfg.n_boot = value.get<int>();
    else if (key == "env_kind") cfg.env_kind = value.get<std::string>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  return cfg;
}

LearningSchedule effective_lq_schedule(const ExperimentConfig& cfg, long horizon) {
  LearningSchedule schedule = cfg.lq_schedule;
  if (cfg.lq_rescale_alpha0 && horizon > 0 && horizon < cfg.lq_paper_horizon) {
    const double ratio = static_cast<double>(cfg.lq_paper_horizon) / static_cast<double>(horizon);
    schedule = LearningSchedule(schedule.alpha0 * std::pow(ratio, 1.0 - schedule.kappa),
                                schedule.kappa, schedule.beta0, schedule.delta);
  }
  return schedule;
}

ProjectionBall make_ball(double radius) {
  return radius > 0.0 ? ProjectionBall(radius) : ProjectionBall::inactive();
}

}  // namespace ivrl
