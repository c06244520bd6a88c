#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

#include "ivrl/config.hpp"
#include "ivrl/inference.hpp"

namespace ivrl {

// Deterministic replication-parallel driver: job i writes only slot i.
void parallel_for(long n_jobs, int threads, const std::function<void(long)>& body);

struct TableRow {
  long horizon = 0;
  double p = 0.0;
  double b = 0.0;
  std::string algorithm;
  double bias = 0.0;
  double rmse = 0.0;
  double sd_est = 0.0;
  double sd_theo = 0.0;     // coverage preset only
  double coverage = 0.0;    // coverage preset only
  long n_fail = 0;          // replications where covariance estimation failed
};

// One ad-model replication: IV-SGD (intercept form) and the SGD baseline on
// the same observation stream. Optionally records the trajectory for
// inference and mean-squared-error checkpoints.
struct AdRepOptions {
  bool keep_records = false;
  std::vector<long> mse_checkpoints;   // iteration indices, ascending
  std::vector<long> tail_t0;           // tail-containment start indices
  double tail_exponent = 0.0;          // kappa_c for the shrinking-ball check
};

struct AdRepResult {
  Eigen::Vector2d theta_iv;
  Eigen::Vector2d theta_sgd;
  Eigen::MatrixXd gamma_iv;  // 1 x 2
  std::vector<Observation> records;
  std::vector<double> mse_iv;        // squared error of theta1 at checkpoints
  std::vector<double> tail_max;      // max_{t>=T0} ||theta - theta_iv_limit|| * t^kappa_c
};

AdRepResult run_ad_replication(const ExperimentConfig& cfg, const AdEnvConfig& env, long horizon,
                               std::uint64_t replication, const AdRepOptions& options = {});

// The IV moment conditions identify (theta0* + b E[A^2], theta1*).
Eigen::Vector2d ad_iv_limit(const AdEnvConfig& env);

std::vector<TableRow> run_ivsgd_table(const ExperimentConfig& cfg);
std::vector<TableRow> run_coverage_table(const ExperimentConfig& cfg);

// Plug-in covariance report for a recorded ad-model replication.
CovarianceReport ad_covariance_report(const ExperimentConfig& cfg,
                                      std::span<const Observation> records,
                                      const Eigen::Vector2d& theta, const Eigen::MatrixXd& gamma,
                                      long horizon);

struct LqRepOptions {
  bool keep_records = false;
  long path_checkpoints = 0;  // thinned theta-path rows per algorithm
};

struct LqRunResult {
  Eigen::VectorXd theta_iv;
  Eigen::VectorXd theta_q;
  Eigen::MatrixXd gamma_iv;
  // rel/abs LTOC summaries at s in {1,2,4}
  std::array<double, 3> rel_ltoc_iv_tail_avg{0, 0, 0};
  std::array<double, 3> rel_ltoc_q_tail_avg{0, 0, 0};
  std::vector<Observation> records;
  // thinned paths: (t, theta0..theta5) per checkpoint
  std::vector<std::pair<long, Eigen::VectorXd>> path_iv;
  std::vector<std::pair<long, Eigen::VectorXd>> path_q;
  // LTOC rows (t, s, absolute) for the first 5000 iterations
  std::vector<std::array<double, 3>> ltoc_early_iv;
  std::vector<std::array<double, 3>> ltoc_early_q;
  // relative LTOC rows (t, s, relative) over the final 10000 iterations
  std::vector<std::array<double, 3>> ltoc_late_iv;
  std::vector<std::array<double, 3>> ltoc_late_q;
};

// IV-Q-Learning and Q-Learning side by side on one observation stream.
LqRunResult run_lq_replication(const ExperimentConfig& cfg, long horizon,
                               std::uint64_t replication, const LqRepOptions& options = {});

// IV-Q covariance report from a recorded LQ replication.
CovarianceReport lq_covariance_report(const ExperimentConfig& cfg,
                                      std::span<const Observation> records,
                                      const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma,
                                      long horizon);

struct RbiasRound {
  std::string mode;
  int round = 0;
  double slope_in = 0.0;
  double estimate = 0.0;
  double fixed_point = 0.0;
};

std::vector<RbiasRound> run_rbias(const ExperimentConfig& cfg);

// Preset entry point used by the CLI: runs the preset and writes its CSV/
// JSON artifacts under cfg.out. Returns a short human-readable summary.
std::string run_preset(const ExperimentConfig& cfg);

}  // namespace ivrl
