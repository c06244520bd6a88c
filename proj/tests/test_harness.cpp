#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ivrl/csv.hpp"
#include "ivrl/harness.hpp"
#include "ivrl/oracles.hpp"

using namespace ivrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/ivrl_test_") + name;
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-17, -123456.789, 0.0, 1e300}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(format_double(0.1) == "0.1");  // shortest representation
}

TEST_CASE("emit_csv: empty row set writes a header-only file") {
  const std::string path = temp_path("empty.csv");
  emit_csv(path, {"a", "b"}, {});
  CHECK(slurp(path) == "a,b\n");
  std::remove(path.c_str());
}

TEST_CASE("emit_csv rejects ragged rows") {
  const std::string path = temp_path("ragged.csv");
  CHECK_THROWS_AS(emit_csv(path, {"a", "b"}, {{"1"}}), std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, 4, [&](long i) { hits[static_cast<size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("ad replication is deterministic and respects the ball") {
  ExperimentConfig cfg;
  const auto a = run_ad_replication(cfg, cfg.ad_env, 2000, 7);
  const auto b = run_ad_replication(cfg, cfg.ad_env, 2000, 7);
  CHECK(a.theta_iv == b.theta_iv);
  CHECK(a.theta_sgd == b.theta_sgd);
  CHECK(a.theta_iv.norm() <= 3.0 + 1e-12);
  const auto c = run_ad_replication(cfg, cfg.ad_env, 2000, 8);
  CHECK(a.theta_iv != c.theta_iv);
}

TEST_CASE("ivsgd-table: single-replication rows are reproducible bit-exactly") {
  ExperimentConfig cfg;
  cfg.replications = 2;
  cfg.horizon = 500;
  const auto rows1 = run_ivsgd_table(cfg);
  const auto rows2 = run_ivsgd_table(cfg);
  REQUIRE(rows1.size() == rows2.size());
  for (size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].bias == rows2[i].bias);
    CHECK(rows1[i].rmse == rows2[i].rmse);
  }
}

TEST_CASE("table rows satisfy the variance decomposition") {
  ExperimentConfig cfg;
  cfg.replications = 50;
  cfg.horizon = 2000;
  const auto rows = run_ivsgd_table(cfg);
  for (const auto& row : rows) {
    const double lhs = row.rmse * row.rmse;
    const double rhs = row.bias * row.bias + row.sd_est * row.sd_est;
    CHECK(std::fabs(lhs - rhs) <= 1e-12 * std::max(1.0, std::fabs(lhs)));
  }
}

TEST_CASE("preset CSV output is byte-identical across runs and thread counts") {
  ExperimentConfig cfg;
  cfg.replications = 8;
  cfg.horizon = 400;
  cfg.preset = Preset::kIvsgdTable;
  cfg.out = temp_path("det_a");
  cfg.threads = 1;
  run_preset(cfg);
  const std::string once = slurp(cfg.out + ".csv");
  cfg.out = temp_path("det_b");
  cfg.threads = 8;
  run_preset(cfg);
  const std::string twice = slurp(cfg.out + ".csv");
  CHECK(once == twice);
  std::remove((temp_path("det_a") + ".csv").c_str());
  std::remove((temp_path("det_b") + ".csv").c_str());
}

TEST_CASE("rbias preset rows converge toward the fixed points") {
  ExperimentConfig cfg;
  cfg.horizon = 20000;
  const auto rounds = run_rbias(cfg);
  REQUIRE(rounds.size() == 20);
  for (const auto& r : rounds) {
    if (r.round == 10) CHECK(r.estimate == doctest::Approx(r.fixed_point).epsilon(0.05));
  }
}

TEST_CASE("lq replication runs, stays bounded, and is reproducible") {
  ExperimentConfig cfg;
  const auto a = run_lq_replication(cfg, 3000, 3);
  const auto b = run_lq_replication(cfg, 3000, 3);
  CHECK(a.theta_iv == b.theta_iv);
  CHECK(a.theta_q == b.theta_q);
  CHECK(a.theta_iv.norm() <= cfg.lq_projection_radius + 1e-9);
}

TEST_CASE("lq-run preset emits the three CSV artifacts") {
  ExperimentConfig cfg;
  cfg.preset = Preset::kLqRun;
  cfg.horizon = 2000;
  cfg.out = temp_path("lqrun");
  run_preset(cfg);
  for (const char* suffix : {"_paths.csv", "_ltoc_early.csv", "_ltoc_late.csv"}) {
    const std::string path = cfg.out + suffix;
    std::ifstream in(path);
    CHECK(in.good());
    std::remove(path.c_str());
  }
}

TEST_CASE("config file round trip with overrides") {
  const std::string path = temp_path("config.json");
  {
    std::ofstream out(path);
    out << R"({"preset":"rbias","replications":17,"master_seed":99,)"
        << R"("ad_env":{"p_explore":0.7,"b":0.7},)"
        << R"("lq_schedule":{"alpha0":12.0},"lq_action_interval":[-1.0,2.5]})";
  }
  ExperimentConfig base;
  const ExperimentConfig cfg = load_config(path, base);
  CHECK(cfg.preset == Preset::kRbias);
  CHECK(cfg.replications == 17);
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.ad_env.p_explore == 0.7);
  CHECK(cfg.ad_env.b == 0.7);
  CHECK(cfg.lq_schedule.alpha0 == 12.0);
  CHECK(cfg.lq_action_interval.lo == -1.0);
  CHECK(cfg.lq_action_interval.hi == 2.5);
  std::remove(path.c_str());

  {
    std::ofstream out(path);
    out << R"({"unknown_key":1})";
  }
  CHECK_THROWS_AS(load_config(path, base), std::invalid_argument);
  std::remove(path.c_str());
}

TEST_CASE("effective lq schedule preserves the full-scale step mass") {
  ExperimentConfig cfg;
  const LearningSchedule desk = effective_lq_schedule(cfg, 200000);
  // alpha0 * (1e6/2e5)^(1-0.7) = 15 * 5^0.3
  CHECK(desk.alpha0 == doctest::Approx(15.0 * std::pow(5.0, 0.3)).epsilon(1e-12));
  const LearningSchedule full = effective_lq_schedule(cfg, 1000000);
  CHECK(full.alpha0 == doctest::Approx(15.0));
  cfg.lq_rescale_alpha0 = false;
  CHECK(effective_lq_schedule(cfg, 200000).alpha0 == doctest::Approx(15.0));
}

TEST_CASE("ad_iv_limit shifts only the intercept") {
  AdEnvConfig env;
  env.p_explore = 0.3;
  env.b = 0.3;
  const Eigen::Vector2d limit = ad_iv_limit(env);
  CHECK(limit(1) == doctest::Approx(1.0));
  // E[A^2] = (1-p) tt^2 e^{1/2} + p/3
  const double ea2 = 0.7 * 0.25 * std::exp(0.5) + 0.1;
  CHECK(limit(0) == doctest::Approx(0.3 * ea2).epsilon(1e-12));
}
