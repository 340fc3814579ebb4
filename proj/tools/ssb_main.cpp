// Command-line driver: solve / eval / sweep / check.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "ssb/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Self-similar blow-up profile solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, checkpoint_path, param;
  std::vector<double> values;
  long long seed_override = -1;
  int grid_n = 0;
  int threads = 0;
  bool warm_start = false;

  auto* solve = app.add_subcommand("solve", "train a profile from a config file");
  solve->add_option("--config", config_path, "run configuration (json)")->required();
  solve->add_option("--out", out_dir, "output directory")->required();
  solve->add_option("--seed", seed_override, "override the config seed");
  solve->add_option("--threads", threads, "worker threads (0 = default)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a grid");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--out", out_dir, "output directory")->required();
  eval->add_option("--grid", grid_n, "grid resolution (default: from the checkpoint config)");

  auto* sweep = app.add_subcommand("sweep", "solve across a list of fixed scalar values");
  sweep->add_option("--config", config_path, "base run configuration (json)")->required();
  sweep->add_option("--param", param, "scalar to sweep: a or lambda")->required();
  sweep->add_option("--values", values, "values to fix the scalar at")->required();
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_flag("--warm-start", warm_start, "warm start each run from the previous value");
  sweep->add_option("--seed", seed_override, "override the config seed");

  auto* check = app.add_subcommand("check", "run oracle and gradient self-tests");
  (void)check;

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("check")) {
      return ssb::cmd_check(std::cout);
    }
    if (app.got_subcommand("solve")) {
      ssb::RunConfig cfg = ssb::load_config(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
      if (threads > 0) cfg.threads = threads;
      const auto res = ssb::cmd_solve(cfg, out_dir);
      std::cout << "run directory: " << res.run_dir.string() << "\n";
      std::cout << "inferred lambda = " << res.lambda_hat;
      if (res.a_hat) std::cout << ", a = " << *res.a_hat;
      std::cout << "\nfinal total loss = " << res.final_total << "\n";
      return 0;
    }
    if (app.got_subcommand("eval")) {
      const auto res = ssb::cmd_eval(checkpoint_path, ssb::GridSpec{grid_n, 0}, out_dir);
      std::cout << "snapshot written to " << res.out_dir.string() << "\n";
      for (std::size_t k = 0; k < res.report.equations.size(); ++k) {
        const auto& e = res.report.equations[k];
        std::cout << e.name << ": rms=" << e.rms << " sup=" << e.sup
                  << " ratio=" << res.report.ratio[k] << "\n";
      }
      return 0;
    }
    if (app.got_subcommand("sweep")) {
      ssb::RunConfig cfg = ssb::load_config(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
      const auto res = ssb::cmd_sweep(cfg, param, values, warm_start, out_dir);
      std::cout << "sweep summary: " << (res.out_dir / "sweep_summary.csv").string() << "\n";
      for (const auto& r : res.rows) {
        std::cout << param << "=" << r.value << " -> "
                  << (r.ok ? std::to_string(r.inferred) : ("failed: " + r.error)) << "\n";
      }
      return 0;
    }
  } catch (const ssb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ssb::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
