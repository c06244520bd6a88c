#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ivrl/algorithms.hpp"
#include "ivrl/environments.hpp"
#include "ivrl/sa_core.hpp"

namespace ivrl {

enum class Preset { kRbias, kIvsgdTable, kCoverageTable, kLqRun, kLqOracle, kInfer };

Preset preset_from_string(const std::string& name);
std::string preset_to_string(Preset preset);

// Full experiment description. Every run is a pure function of this struct.
struct ExperimentConfig {
  Preset preset = Preset::kIvsgdTable;
  long replications = 200;
  long horizon = 0;  // 0 = preset default
  std::uint64_t master_seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::string out = "out";
  bool paper_scale = false;  // restore the paper's replication counts / horizons

  // ad-model defaults per the digital-advertising experiment
  AdEnvConfig ad_env;
  LearningSchedule ad_schedule{10.0, 0.7, 5.0, 0.9};
  double ad_projection_radius = 3.0;  // <= 0 disables

  // LQ defaults
  LqEnvConfig lq_env;
  LearningSchedule lq_schedule{15.0, 0.7, 10.0, 1.0};
  double lq_projection_radius = 10.0;  // <= 0 disables
  ActionInterval lq_action_interval{0.0, 2.0};
  // Desk-scale stabilizers for the LQ runs (see README): cap on the step
  // sizes, a Gamma-only warm-up, and a rescaling of alpha0 that preserves
  // the full-scale schedule's total step mass when the horizon is shortened.
  double lq_alpha_cap = 0.0;  // <= 0 disables
  double lq_beta_cap = 0.0;   // <= 0 disables
  long lq_theta_warmup = 0;
  bool lq_rescale_alpha0 = true;
  long lq_paper_horizon = 1000000;
  double lq_gamma0_scale = 0.1;
  std::optional<double> lq_initial_state;

  // inference knobs
  double tavc_lag_c = 1.0;  // h = ceil(c * T^(1/3))
  double burn_in_fraction = 0.1;
  double ci_level = 0.95;
  int n_boot = 200;

  std::string env_kind = "ad";  // for the infer preset: "ad" or "lq"
};

// Reads a JSON config file (keys as in the struct; missing keys keep
// defaults). Throws on unknown keys.
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base);

// Effective LQ schedule for a horizon: optionally rescales alpha0 by
// (paper_horizon / horizon)^(1-kappa) so the total step mass matches the
// full-scale run.
LearningSchedule effective_lq_schedule(const ExperimentConfig& cfg, long horizon);

ProjectionBall make_ball(double radius);

}  // namespace ivrl
