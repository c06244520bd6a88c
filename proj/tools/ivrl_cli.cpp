#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ivrl/config.hpp"
#include "ivrl/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"IV-corrected reinforcement-learning experiment harness"};

  std::string preset_name;
  std::string config_path;
  long reps = -1;
  long horizon = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  int threads = -1;
  bool paper_scale = false;
  std::string env_kind;

  app.add_option("--preset", preset_name,
                 "rbias | ivsgd-table | coverage-table | lq-run | lq-oracle | infer");
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--reps", reps, "replications");
  app.add_option("--horizon", horizon, "iterations per replication");
  app.add_option("--seed", seed, "master seed")->each([&](const std::string&) { seed_set = true; });
  app.add_option("--out", out, "output path prefix");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");
  app.add_flag("--paper-scale", paper_scale, "restore the paper's replication counts/horizons");
  app.add_option("--env", env_kind, "environment for the infer preset: ad | lq");

  CLI11_PARSE(app, argc, argv);

  try {
    ivrl::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ivrl::load_config(config_path, cfg);
    // flags override config
    if (!preset_name.empty()) cfg.preset = ivrl::preset_from_string(preset_name);
    if (reps >= 0) cfg.replications = reps;
    if (horizon >= 0) cfg.horizon = horizon;
    if (seed_set) cfg.master_seed = seed;
    if (!out.empty()) cfg.out = out;
    if (threads >= 0) cfg.threads = threads;
    if (paper_scale) cfg.paper_scale = true;
    if (!env_kind.empty()) cfg.env_kind = env_kind;

    std::cout << ivrl::run_preset(cfg) << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << R"({"error":")" << e.what() << R"("})" << "\n";
    return 1;
  }
}
