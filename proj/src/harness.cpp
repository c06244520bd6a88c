#include "ivrl/harness.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "ivrl/csv.hpp"
#include "ivrl/oracles.hpp"
#include "ivrl/rng.hpp"

namespace ivrl {

namespace {

constexpr double kDivergenceLimit = 1e6;

std::pair<double, double> capped_steps(const LearningSchedule& schedule, long t, double alpha_cap,
                                       double beta_cap) {
  auto [alpha, beta] = step_sizes(schedule, t);
  if (alpha_cap > 0.0 && alpha > alpha_cap) alpha = alpha_cap;
  if (beta_cap > 0.0 && beta > beta_cap) beta = beta_cap;
  return {alpha, beta};
}

int effective_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

void parallel_for(long n_jobs, int threads, const std::function<void(long)>& body) {
  const int n_threads = std::min<long>(effective_threads(threads), n_jobs);
  if (n_threads <= 1) {
    for (long i = 0; i < n_jobs; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(static_cast<size_t>(n_threads));
  for (int w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= n_jobs) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

Eigen::Vector2d ad_iv_limit(const AdEnvConfig& env) {
  // E[A^2] under the randomized policy with lognormal(0, 1/4) states.
  const double e12 = std::exp(0.5);
  const double ea2 = (1.0 - env.p_explore) * env.tilde_theta * env.tilde_theta * e12 +
                     env.p_explore / 3.0;
  return {env.theta_star[0] + env.b * ea2, env.theta_star[1]};
}

AdRepResult run_ad_replication(const ExperimentConfig& cfg, const AdEnvConfig& env, long horizon,
                               std::uint64_t replication, const AdRepOptions& options) {
  AdEnv ad(env, seed_stream(cfg.master_seed, replication));
  const ProjectionBall ball = make_ball(cfg.ad_projection_radius);
  const LearningSchedule& schedule = cfg.ad_schedule;

  IvState iv;
  iv.theta = Eigen::VectorXd(2);
  iv.theta << 0.5, 0.5;
  iv.gamma = Eigen::MatrixXd(1, 2);
  iv.gamma << 1.0, 1.0;
  BaselineState sgd;
  sgd.theta = iv.theta;

  AdRepResult result;
  if (options.keep_records) result.records.reserve(static_cast<size_t>(horizon));
  result.mse_iv.reserve(options.mse_checkpoints.size());
  const Eigen::Vector2d limit = ad_iv_limit(env);
  std::vector<double> tail_max(options.tail_t0.size(), 0.0);
  size_t next_checkpoint = 0;

  for (long t = 1; t <= horizon; ++t) {
    const Observation obs = ad.step();
    const double sa = obs.state * obs.action;
    Eigen::VectorXd x(2);
    x << 1.0, sa;
    iv = iv_sgd_intercept_update(iv, sa, obs.reward_observed, obs.instruments, schedule, ball);
    sgd = sgd_update(sgd, x, obs.reward_observed, schedule, ball);
    if (options.keep_records) result.records.push_back(obs);
    if (next_checkpoint < options.mse_checkpoints.size() &&
        t == options.mse_checkpoints[next_checkpoint]) {
      const double e1 = iv.theta(1) - limit(1);
      result.mse_iv.push_back(e1 * e1);
      ++next_checkpoint;
    }
    if (!options.tail_t0.empty()) {
      const double err = (iv.theta - limit).norm() *
                         std::pow(static_cast<double>(t), options.tail_exponent);
      for (size_t i = 0; i < options.tail_t0.size(); ++i)
        if (t >= options.tail_t0[i]) tail_max[i] = std::max(tail_max[i], err);
    }
  }
  result.theta_iv = iv.theta;
  result.theta_sgd = sgd.theta;
  result.gamma_iv = iv.gamma;
  result.tail_max = std::move(tail_max);
  return result;
}

CovarianceReport ad_covariance_report(const ExperimentConfig& cfg,
                                      std::span<const Observation> records,
                                      const Eigen::Vector2d& theta, const Eigen::MatrixXd& gamma,
                                      long horizon) {
  const long burn = static_cast<long>(std::floor(cfg.burn_in_fraction *
                                                 static_cast<double>(records.size())));
  const auto tail = records.subspan(static_cast<size_t>(burn));
  const Eigen::MatrixXd residuals = residual_series(tail, theta, gamma, ad_ivsgd_drift);
  const int lag = static_cast<int>(std::ceil(
      cfg.tavc_lag_c * std::cbrt(static_cast<double>(residuals.rows()))));
  const TavcEstimate tavc = newey_west_tavc(residuals, lag, WeightScheme::kBartlett);
  CovarianceReport report;
  report.a11 = estimate_jacobian_a11(tail, theta, gamma, DriftJacobianFn(ad_ivsgd_drift_jacobian));
  report.lbar = tavc.lbar;
  report.sigma = lyapunov_sigma(report.a11, report.lbar);
  report.alpha_t = step_sizes(cfg.ad_schedule, horizon).first;
  report.ci_half_widths = ci_half_widths(report.sigma, report.alpha_t, cfg.ci_level);
  return report;
}

namespace {

struct AdCell {
  long horizon;
  double p;
  double b;
};

std::vector<AdCell> ad_design_grid(const ExperimentConfig& cfg, bool both_horizons) {
  std::vector<AdCell> cells;
  std::vector<long> horizons;
  if (cfg.horizon > 0) {
    horizons = {cfg.horizon};
  } else if (both_horizons) {
    horizons = {10000, 50000};
  } else {
    horizons = {50000};
  }
  for (long horizon : horizons)
    for (double p : {0.3, 0.7})
      for (double b : {0.3, 0.7}) cells.push_back({horizon, p, b});
  return cells;
}

std::vector<std::vector<std::string>> table_rows_to_csv(const std::vector<TableRow>& rows,
                                                        bool coverage) {
  std::vector<std::vector<std::string>> out;
  for (const auto& row : rows) {
    std::vector<std::string> fields{std::to_string(row.horizon), format_double(row.p),
                                    format_double(row.b)};
    if (coverage) {
      fields.push_back(format_double(row.sd_est));
      fields.push_back(format_double(row.sd_theo));
      fields.push_back(format_double(row.coverage));
      fields.push_back(std::to_string(row.n_fail));
    } else {
      fields.push_back(row.algorithm);
      fields.push_back(format_double(row.bias));
      fields.push_back(format_double(row.rmse));
      fields.push_back(format_double(row.sd_est));
    }
    out.push_back(std::move(fields));
  }
  return out;
}

}  // namespace

std::vector<TableRow> run_ivsgd_table(const ExperimentConfig& cfg) {
  const auto cells = ad_design_grid(cfg, true);
  const long reps = cfg.paper_scale ? std::max<long>(cfg.replications, 1000) : cfg.replications;
  if (reps < 1) throw std::invalid_argument("run_ivsgd_table: need replications >= 1");
  std::vector<TableRow> rows;
  for (size_t cell_idx = 0; cell_idx < cells.size(); ++cell_idx) {
    const AdCell& cell = cells[cell_idx];
    AdEnvConfig env = cfg.ad_env;
    env.p_explore = cell.p;
    env.b = cell.b;
    std::vector<Eigen::Vector2d> theta_iv(static_cast<size_t>(reps));
    std::vector<Eigen::Vector2d> theta_sgd(static_cast<size_t>(reps));
    parallel_for(reps, cfg.threads, [&](long r) {
      const auto rep = run_ad_replication(cfg, env, cell.horizon,
                                          static_cast<std::uint64_t>(cell_idx) * 1000000 +
                                              static_cast<std::uint64_t>(r));
      theta_iv[static_cast<size_t>(r)] = rep.theta_iv;
      theta_sgd[static_cast<size_t>(r)] = rep.theta_sgd;
    });
    const double truth = env.theta_star[1];
    for (int algo = 0; algo < 2; ++algo) {
      double sum = 0.0, sum_sq = 0.0;
      for (long r = 0; r < reps; ++r) {
        const double e = (algo == 0 ? theta_iv : theta_sgd)[static_cast<size_t>(r)](1) - truth;
        sum += e;
        sum_sq += e * e;
      }
      TableRow row;
      row.horizon = cell.horizon;
      row.p = cell.p;
      row.b = cell.b;
      row.algorithm = algo == 0 ? "iv-sgd" : "sgd";
      row.bias = sum / static_cast<double>(reps);
      row.rmse = std::sqrt(sum_sq / static_cast<double>(reps));
      row.sd_est = std::sqrt(std::max(0.0, row.rmse * row.rmse - row.bias * row.bias));
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<TableRow> run_coverage_table(const ExperimentConfig& cfg) {
  const auto cells = ad_design_grid(cfg, true);
  const long reps = cfg.paper_scale ? std::max<long>(cfg.replications, 1000) : cfg.replications;
  if (reps < 1) throw std::invalid_argument("run_coverage_table: need replications >= 1");
  std::vector<TableRow> rows;
  for (size_t cell_idx = 0; cell_idx < cells.size(); ++cell_idx) {
    const AdCell& cell = cells[cell_idx];
    AdEnvConfig env = cfg.ad_env;
    env.p_explore = cell.p;
    env.b = cell.b;
    std::vector<double> theta1(static_cast<size_t>(reps));
    std::vector<double> sd_theo(static_cast<size_t>(reps), 0.0);
    std::vector<int> covered(static_cast<size_t>(reps), 0);
    std::vector<int> failed(static_cast<size_t>(reps), 0);
    AdRepOptions options;
    options.keep_records = true;
    parallel_for(reps, cfg.threads, [&](long r) {
      const auto rep = run_ad_replication(cfg, env, cell.horizon,
                                          static_cast<std::uint64_t>(cell_idx) * 1000000 +
                                              static_cast<std::uint64_t>(r),
                                          options);
      theta1[static_cast<size_t>(r)] = rep.theta_iv(1);
      try {
        const CovarianceReport report =
            ad_covariance_report(cfg, rep.records, rep.theta_iv, rep.gamma_iv, cell.horizon);
        sd_theo[static_cast<size_t>(r)] =
            std::sqrt(report.alpha_t * report.sigma(1, 1));
        const double hw = report.ci_half_widths(1);
        covered[static_cast<size_t>(r)] =
            std::fabs(rep.theta_iv(1) - env.theta_star[1]) <= hw ? 1 : 0;
      } catch (const std::exception&) {
        failed[static_cast<size_t>(r)] = 1;
      }
    });
    TableRow row;
    row.horizon = cell.horizon;
    row.p = cell.p;
    row.b = cell.b;
    row.algorithm = "iv-sgd";
    double sum = 0.0, sum_sq = 0.0, sd_sum = 0.0;
    long ok = 0, cov = 0;
    for (long r = 0; r < reps; ++r) {
      sum += theta1[static_cast<size_t>(r)];
      sum_sq += theta1[static_cast<size_t>(r)] * theta1[static_cast<size_t>(r)];
      if (!failed[static_cast<size_t>(r)]) {
        ++ok;
        sd_sum += sd_theo[static_cast<size_t>(r)];
        cov += covered[static_cast<size_t>(r)];
      }
    }
    const double mean = sum / static_cast<double>(reps);
    row.sd_est = std::sqrt(std::max(0.0, sum_sq / static_cast<double>(reps) - mean * mean));
    row.sd_theo = ok > 0 ? sd_sum / static_cast<double>(ok) : 0.0;
    row.coverage = ok > 0 ? static_cast<double>(cov) / static_cast<double>(ok) : 0.0;
    row.n_fail = reps - ok;
    rows.push_back(row);
  }
  return rows;
}

LqRunResult run_lq_replication(const ExperimentConfig& cfg, long horizon,
                               std::uint64_t replication, const LqRepOptions& options) {
  Rng rng = seed_stream(cfg.master_seed, replication);
  // Gamma0 drawn from the replication stream before the trajectory.
  Eigen::MatrixXd gamma0(6, 6);
  for (long i = 0; i < 6; ++i)
    for (long j = 0; j < 6; ++j) gamma0(i, j) = cfg.lq_gamma0_scale * rng.normal();
  const double s0 = cfg.lq_initial_state.value_or(cfg.lq_env.default_initial_state());
  LqEnv env(cfg.lq_env, rng, s0);

  const LearningSchedule schedule = effective_lq_schedule(cfg, horizon);
  const ProjectionBall ball = make_ball(cfg.lq_projection_radius);
  const FeatureMap features = lq_features();
  const ActionInterval interval = cfg.lq_action_interval;
  const double discount = cfg.lq_env.gamma;

  IvState iv;
  iv.theta = Eigen::VectorXd(6);
  iv.theta << 2.5, 0.5, 0.2, 0.5, 0.5, -1.5;
  iv.gamma = gamma0;
  BaselineState q;
  q.theta = iv.theta;

  const ThetaStar star = solve_theta_star(cfg.lq_env);
  const ValueCoeffs v_star = value_of_linear_policy(cfg.lq_env, optimal_policy(star));
  const std::array<double, 3> eval_states{1.0, 2.0, 4.0};

  LqRunResult result;
  if (options.keep_records) result.records.reserve(static_cast<size_t>(horizon));
  const long path_every =
      options.path_checkpoints > 0 ? std::max<long>(1, horizon / options.path_checkpoints) : 0;
  const long late_start = std::max<long>(1, horizon - 10000 + 1);
  std::array<double, 3> late_sum_iv{0, 0, 0}, late_sum_q{0, 0, 0};
  std::array<long, 3> late_n_iv{0, 0, 0}, late_n_q{0, 0, 0};

  auto rel_ltoc_of = [&](const Eigen::VectorXd& theta, double s) -> double {
    if (!(theta(5) < 0.0)) return std::nan("");
    const PolicyCoeffs pol{-theta(2) / (2.0 * theta(5)), -theta(3) / (2.0 * theta(5))};
    const double m = cfg.lq_env.c[1] + cfg.lq_env.c[2] * pol.omega1;
    if (!(discount * m * m < 1.0)) return std::nan("");
    const ValueCoeffs v = value_of_linear_policy(cfg.lq_env, pol);
    return 1.0 - v.at(s) / v_star.at(s);
  };

  for (long t = 1; t <= horizon; ++t) {
    const Observation obs = env.step();
    const auto [alpha, beta] = capped_steps(schedule, t, cfg.lq_alpha_cap, cfg.lq_beta_cap);
    const Eigen::VectorXd phi = features.eval(obs.state, obs.action);
    const Eigen::VectorXd gz = iv.gamma * obs.instruments;
    if (t > cfg.lq_theta_warmup) {
      const double td_iv = obs.reward_observed +
                           discount * max_q_value(features, iv.theta, obs.next_state, interval) -
                           phi.dot(iv.theta);
      iv.theta = ball.project(Eigen::VectorXd(iv.theta + alpha * td_iv * gz));
      const double td_q = obs.reward_observed +
                          discount * max_q_value(features, q.theta, obs.next_state, interval) -
                          phi.dot(q.theta);
      q.theta = ball.project(Eigen::VectorXd(q.theta + alpha * td_q * phi));
    }
    iv.gamma = ball.project(
        Eigen::MatrixXd(iv.gamma + beta * (phi - gz) * obs.instruments.transpose()));
    iv.t = q.t = t + 1;

    if (iv.theta.norm() > kDivergenceLimit || q.theta.norm() > kDivergenceLimit)
      throw std::runtime_error("run_lq_replication: iterate divergence (norm > 1e6) at t=" +
                               std::to_string(t));
    if (options.keep_records) result.records.push_back(obs);
    if (path_every > 0 && (t % path_every == 0 || t == horizon)) {
      result.path_iv.emplace_back(t, iv.theta);
      result.path_q.emplace_back(t, q.theta);
    }
    if (t <= 5000) {
      for (double s : eval_states) {
        const double rel_iv = rel_ltoc_of(iv.theta, s);
        const double rel_q = rel_ltoc_of(q.theta, s);
        const double abs_iv = std::isnan(rel_iv) ? rel_iv : rel_iv * v_star.at(s);
        const double abs_q = std::isnan(rel_q) ? rel_q : rel_q * v_star.at(s);
        result.ltoc_early_iv.push_back({static_cast<double>(t), s, abs_iv});
        result.ltoc_early_q.push_back({static_cast<double>(t), s, abs_q});
      }
    }
    if (t >= late_start) {
      for (size_t i = 0; i < eval_states.size(); ++i) {
        const double rel_iv = rel_ltoc_of(iv.theta, eval_states[i]);
        const double rel_q = rel_ltoc_of(q.theta, eval_states[i]);
        result.ltoc_late_iv.push_back({static_cast<double>(t), eval_states[i], rel_iv});
        result.ltoc_late_q.push_back({static_cast<double>(t), eval_states[i], rel_q});
        if (!std::isnan(rel_iv)) {
          late_sum_iv[i] += rel_iv;
          ++late_n_iv[i];
        }
        if (!std::isnan(rel_q)) {
          late_sum_q[i] += rel_q;
          ++late_n_q[i];
        }
      }
    }
  }
  for (size_t i = 0; i < 3; ++i) {
    result.rel_ltoc_iv_tail_avg[i] =
        late_n_iv[i] > 0 ? late_sum_iv[i] / static_cast<double>(late_n_iv[i]) : std::nan("");
    result.rel_ltoc_q_tail_avg[i] =
        late_n_q[i] > 0 ? late_sum_q[i] / static_cast<double>(late_n_q[i]) : std::nan("");
  }
  result.theta_iv = iv.theta;
  result.theta_q = q.theta;
  result.gamma_iv = iv.gamma;
  return result;
}

CovarianceReport lq_covariance_report(const ExperimentConfig& cfg,
                                      std::span<const Observation> records,
                                      const Eigen::VectorXd& theta, const Eigen::MatrixXd& gamma,
                                      long horizon) {
  const long burn = static_cast<long>(std::floor(cfg.burn_in_fraction *
                                                 static_cast<double>(records.size())));
  const auto tail = records.subspan(static_cast<size_t>(burn));
  const FeatureMap features = lq_features();
  const double discount = cfg.lq_env.gamma;
  const ActionInterval interval = cfg.lq_action_interval;
  const DriftFn drift = [&](const Observation& obs, const Eigen::VectorXd& th,
                            const Eigen::MatrixXd& g) {
    return iv_q_drift(obs, th, g, features, discount, interval);
  };
  const DriftJacobianFn jac = [&](const Observation& obs, const Eigen::VectorXd& th,
                                  const Eigen::MatrixXd& g) {
    return iv_q_drift_jacobian(obs, th, g, features, discount, interval);
  };
  const Eigen::MatrixXd residuals = residual_series(tail, theta, gamma, drift);
  const int lag = static_cast<int>(std::ceil(
      cfg.tavc_lag_c * std::cbrt(static_cast<double>(residuals.rows()))));
  const TavcEstimate tavc = newey_west_tavc(residuals, lag, WeightScheme::kBartlett);
  CovarianceReport report;
  report.a11 = estimate_jacobian_a11(tail, theta, gamma, jac);
  report.lbar = tavc.lbar;
  report.sigma = lyapunov_sigma(report.a11, report.lbar);
  const auto [alpha, beta] = capped_steps(effective_lq_schedule(cfg, horizon), horizon,
                                          cfg.lq_alpha_cap, cfg.lq_beta_cap);
  (void)beta;
  report.alpha_t = alpha;
  report.ci_half_widths = ci_half_widths(report.sigma, report.alpha_t, cfg.ci_level);
  return report;
}

std::vector<RbiasRound> run_rbias(const ExperimentConfig& cfg) {
  const long n = cfg.horizon > 0 ? cfg.horizon : 100000;
  std::vector<RbiasRound> rounds;
  const struct {
    RbiasMode mode;
    const char* name;
    double theta_star;
    double beta;
    double slope0;
  } designs[] = {{RbiasMode::kActionNoise, "action", 1.0, 0.5, 1.0},
                 {RbiasMode::kStateNoise, "state", 1.0, 2.0, 1.0}};
  for (size_t d = 0; d < 2; ++d) {
    Rng rng = seed_stream(cfg.master_seed, 900 + d);
    double slope = designs[d].slope0;
    const double fp = rbias_fixed_point(designs[d].theta_star, designs[d].beta, designs[d].mode);
    for (int round = 1; round <= 10; ++round) {
      const double est = rbias_iteration_env(designs[d].theta_star, designs[d].beta,
                                             designs[d].mode, slope, rng, n);
      rounds.push_back({designs[d].name, round, slope, est, fp});
      slope = est;
    }
  }
  return rounds;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::string lq_oracle_json(const ExperimentConfig& cfg) {
  const ThetaStar star = solve_theta_star(cfg.lq_env);
  const PolicyCoeffs policy = optimal_policy(star);
  const ValueCoeffs value = value_of_linear_policy(cfg.lq_env, policy);
  json j;
  j["theta_star"] = vector_to_json(star);
  j["policy"] = {{"omega0", policy.omega0}, {"omega1", policy.omega1}};
  j["value"] = {{"v0", value.v0}, {"v1", value.v1}, {"v2", value.v2}};
  json vstar;
  for (double s : {1.0, 2.0, 4.0}) vstar[format_double(s)] = value.at(s);
  j["v_star"] = vstar;
  j["matching_residual_max"] =
      theta_star_residuals(cfg.lq_env, star).cwiseAbs().maxCoeff();
  return j.dump(2) + "\n";
}

std::string infer_json(const ExperimentConfig& cfg) {
  json j;
  if (cfg.env_kind == "ad") {
    const long horizon = cfg.horizon > 0 ? cfg.horizon : 50000;
    AdRepOptions options;
    options.keep_records = true;
    const auto rep = run_ad_replication(cfg, cfg.ad_env, horizon, 0, options);
    const CovarianceReport report =
        ad_covariance_report(cfg, rep.records, rep.theta_iv, rep.gamma_iv, horizon);
    const Eigen::MatrixX2d ci = confidence_interval(rep.theta_iv, report, cfg.ci_level);
    j["env"] = "ad";
    j["horizon"] = horizon;
    j["theta_hat"] = vector_to_json(rep.theta_iv);
    j["gamma_hat"] = matrix_to_json(rep.gamma_iv);
    j["a11"] = matrix_to_json(report.a11);
    j["lbar"] = matrix_to_json(report.lbar);
    j["sigma"] = matrix_to_json(report.sigma);
    j["alpha_T"] = report.alpha_t;
    j["ci"] = {{"level", cfg.ci_level},
               {"half_widths", vector_to_json(report.ci_half_widths)},
               {"lower", vector_to_json(ci.col(0))},
               {"upper", vector_to_json(ci.col(1))}};
  } else if (cfg.env_kind == "lq") {
    const long horizon = cfg.horizon > 0 ? cfg.horizon : 200000;
    LqRepOptions options;
    options.keep_records = true;
    const auto rep = run_lq_replication(cfg, horizon, 0, options);
    const CovarianceReport report =
        lq_covariance_report(cfg, rep.records, rep.theta_iv, rep.gamma_iv, horizon);
    const Eigen::MatrixX2d ci = confidence_interval(rep.theta_iv, report, cfg.ci_level);
    j["env"] = "lq";
    j["horizon"] = horizon;
    j["theta_hat"] = vector_to_json(rep.theta_iv);
    j["a11"] = matrix_to_json(report.a11);
    j["lbar"] = matrix_to_json(report.lbar);
    j["sigma"] = matrix_to_json(report.sigma);
    j["alpha_T"] = report.alpha_t;
    j["ci"] = {{"level", cfg.ci_level},
               {"half_widths", vector_to_json(report.ci_half_widths)},
               {"lower", vector_to_json(ci.col(0))},
               {"upper", vector_to_json(ci.col(1))}};
    const ThetaStar star = solve_theta_star(cfg.lq_env);
    const PolicyCoeffs pol = optimal_policy(star);
    const FeatureMap features = lq_features();
    json tests;
    json spots = json::array();
    for (double s : {1.0, 2.0, 4.0}) {
      const PolicyTestResult res = spot_test(rep.theta_iv, report.sigma, report.alpha_t,
                                             features, s, pol.at(s), cfg.lq_action_interval);
      spots.push_back({{"s", s},
                       {"a0", pol.at(s)},
                       {"a_hat", res.a_hat},
                       {"omega_s", res.omega_s},
                       {"t_stat", res.t_stat},
                       {"p_value", res.p_value}});
    }
    tests["spot"] = spots;
    std::vector<double> states;
    const long stride = std::max<long>(1, static_cast<long>(rep.records.size()) / 1000);
    for (size_t k = 0; k < rep.records.size(); k += static_cast<size_t>(stride))
      states.push_back(rep.records[k].state);
    Rng boot_rng = seed_stream(cfg.master_seed, 777);
    const T2TestResult t2 =
        policy_test_t2(rep.theta_iv, report.sigma, report.alpha_t, features, states,
                       [&](double s) { return pol.at(s); }, cfg.n_boot, 1.0 - cfg.ci_level,
                       boot_rng, cfg.lq_action_interval);
    tests["t2"] = {{"t2_stat", t2.t2_stat},
                   {"critical_value", t2.critical_value},
                   {"reject", t2.reject}};
    j["tests"] = tests;
  } else {
    throw std::invalid_argument("infer: env_kind must be 'ad' or 'lq'");
  }
  return j.dump(2) + "\n";
}

}  // namespace

std::string run_preset(const ExperimentConfig& cfg) {
  std::ostringstream summary;
  switch (cfg.preset) {
    case Preset::kIvsgdTable: {
      const auto rows = run_ivsgd_table(cfg);
      emit_csv(cfg.out + ".csv", {"T", "p", "b", "algorithm", "bias", "rmse", "sd_est"},
               table_rows_to_csv(rows, false));
      summary << "ivsgd-table: " << rows.size() << " rows -> " << cfg.out << ".csv";
      break;
    }
    case Preset::kCoverageTable: {
      const auto rows = run_coverage_table(cfg);
      emit_csv(cfg.out + ".csv", {"T", "p", "b", "sd_est", "sd_theo", "coverage", "n_fail"},
               table_rows_to_csv(rows, true));
      summary << "coverage-table: " << rows.size() << " rows -> " << cfg.out << ".csv";
      break;
    }
    case Preset::kLqRun: {
      const long horizon = cfg.horizon > 0 ? cfg.horizon
                                           : (cfg.paper_scale ? cfg.lq_paper_horizon : 200000);
      LqRepOptions options;
      options.path_checkpoints = 1000;
      const auto rep = run_lq_replication(cfg, horizon, 0, options);
      std::vector<std::vector<std::string>> path_rows;
      auto push_path = [&](const char* algo,
                           const std::vector<std::pair<long, Eigen::VectorXd>>& path) {
        for (const auto& [t, theta] : path) {
          std::vector<std::string> row{algo, std::to_string(t)};
          for (long i = 0; i < theta.size(); ++i) row.push_back(format_double(theta(i)));
          path_rows.push_back(std::move(row));
        }
      };
      push_path("iv-q", rep.path_iv);
      push_path("q", rep.path_q);
      emit_csv(cfg.out + "_paths.csv",
               {"algorithm", "t", "theta0", "theta1", "theta2", "theta3", "theta4", "theta5"},
               path_rows);
      auto ltoc_rows = [&](const std::vector<std::array<double, 3>>& iv_rows,
                           const std::vector<std::array<double, 3>>& q_rows) {
        std::vector<std::vector<std::string>> out;
        for (const auto& r : iv_rows)
          out.push_back({"iv-q", format_double(r[0]), format_double(r[1]), format_double(r[2])});
        for (const auto& r : q_rows)
          out.push_back({"q", format_double(r[0]), format_double(r[1]), format_double(r[2])});
        return out;
      };
      emit_csv(cfg.out + "_ltoc_early.csv", {"algorithm", "t", "s", "ltoc"},
               ltoc_rows(rep.ltoc_early_iv, rep.ltoc_early_q));
      emit_csv(cfg.out + "_ltoc_late.csv", {"algorithm", "t", "s", "rel_ltoc"},
               ltoc_rows(rep.ltoc_late_iv, rep.ltoc_late_q));
      const ThetaStar star = solve_theta_star(cfg.lq_env);
      summary << "lq-run T=" << horizon
              << ": iv-q max|theta-theta*|=" << (rep.theta_iv - star).cwiseAbs().maxCoeff()
              << ", outputs " << cfg.out << "_{paths,ltoc_early,ltoc_late}.csv";
      break;
    }
    case Preset::kRbias: {
      const auto rounds = run_rbias(cfg);
      std::vector<std::vector<std::string>> rows;
      for (const auto& r : rounds)
        rows.push_back({r.mode, std::to_string(r.round), format_double(r.slope_in),
                        format_double(r.estimate), format_double(r.fixed_point)});
      emit_csv(cfg.out + ".csv", {"mode", "round", "slope_in", "estimate", "fixed_point"}, rows);
      summary << "rbias: " << rounds.size() << " rounds -> " << cfg.out << ".csv";
      break;
    }
    case Preset::kLqOracle: {
      write_text(cfg.out + ".json", lq_oracle_json(cfg));
      summary << "lq-oracle -> " << cfg.out << ".json";
      break;
    }
    case Preset::kInfer: {
      write_text(cfg.out + ".json", infer_json(cfg));
      summary << "infer(" << cfg.env_kind << ") -> " << cfg.out << ".json";
      break;
    }
  }
  return summary.str();
}

}  // namespace ivrl
