#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tagloc/config.hpp"
#include "tagloc/mc.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
};

tagloc::SimConfig load_sim(const CommonArgs& args, nlohmann::json* root_out) {
  nlohmann::json root;
  if (!args.config_path.empty()) {
    root = tagloc::load_json_file(args.config_path);
  }
  if (root_out != nullptr) *root_out = root;
  return tagloc::sim_config_from_json(root);
}

void print_summary_line(const tagloc::ScenarioSummary& s) {
  auto line = [&](const char* method, const tagloc::MethodStats& stats) {
    std::printf("  %-8s median %.4f m  mean %.4f m  iqr %.4f m  div %.1f%%\n", method,
                stats.median_rmse, stats.mean_rmse, stats.iqr,
                100.0 * stats.divergence_fraction);
  };
  std::printf("%s (%d iterations)\n", s.scenario.c_str(), s.iterations);
  line("EKF", s.ekf);
  line("TIE-EKF", s.tie);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tag-based visual-inertial localization simulator: on-manifold "
               "EKF vs. TIE-EKF under tag installation error"};
  app.require_subcommand(1);

  CommonArgs common;

  // run
  auto* run = app.add_subcommand("run", "Run Monte Carlo scenarios and write CSV reports");
  std::string scenario_name = "all";
  std::string out_dir = "results";
  int iterations_override = 0;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  bool timeseries = false;
  bool per_corner_independent = false;
  int threads = 0;
  run->add_option("--scenario", scenario_name, "Scenario name or 'all'")
      ->default_str("all");
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--config", common.config_path, "JSON config file");
  run->add_option("--iterations", iterations_override, "Override iteration count");
  run->add_option("--seed", seed_override, "Override base seed")
      ->each([&](const std::string&) { seed_given = true; });
  run->add_flag("--timeseries", timeseries, "Write per-run time-series CSVs");
  run->add_flag("--per-corner-independent", per_corner_independent,
                "Drop cross-corner noise correlation within a tag");
  run->add_option("--threads", threads, "Worker threads (0 = hardware)");

  // list-scenarios
  auto* list = app.add_subcommand("list-scenarios", "List scenario definitions");
  list->add_option("--config", common.config_path, "JSON config file");

  // validate-config
  auto* validate = app.add_subcommand("validate-config", "Parse and check a config file");
  bool print_effective = false;
  validate->add_option("--config", common.config_path, "JSON config file");
  validate->add_flag("--print-effective", print_effective,
                     "Print the merged effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) {
      nlohmann::json root;
      tagloc::SimConfig cfg = load_sim(common, &root);
      if (per_corner_independent) cfg.per_corner_independent = true;
      std::vector<tagloc::ScenarioConfig> scenarios =
          tagloc::scenarios_from_config(cfg, root);

      std::vector<tagloc::ScenarioConfig> selected;
      if (scenario_name == "all") {
        selected = scenarios;
      } else {
        for (const auto& sc : scenarios) {
          if (sc.name == scenario_name) selected.push_back(sc);
        }
        if (selected.empty()) {
          std::cerr << "unknown scenario '" << scenario_name
                    << "' (see list-scenarios)\n";
          return 1;
        }
      }

      tagloc::McOptions opt;
      opt.threads = threads;
      opt.keep_records = timeseries;
      std::vector<tagloc::ScenarioRunOutput> outputs;
      for (tagloc::ScenarioConfig sc : selected) {
        if (iterations_override > 0) sc.iterations = iterations_override;
        if (seed_given) sc.base_seed = seed_override;
        outputs.push_back(tagloc::run_scenario(sc, cfg, opt));
        print_summary_line(outputs.back().summary);
      }
      tagloc::emit_reports(outputs, {out_dir, timeseries});
      std::printf("reports written to %s\n", out_dir.c_str());
      return 0;
    }

    if (app.got_subcommand(list)) {
      nlohmann::json root;
      tagloc::SimConfig cfg = load_sim(common, &root);
      for (const auto& sc : tagloc::scenarios_from_config(cfg, root)) {
        std::printf("%-16s trajectory=%-4s level=%-8s iterations=%-4d seed=%llu tags=[",
                    sc.name.c_str(), sc.trajectory.c_str(), tagloc::to_string(sc.level),
                    sc.iterations, static_cast<unsigned long long>(sc.base_seed));
        for (std::size_t i = 0; i < sc.perturbed_ids.size(); ++i) {
          std::printf("%s%d", i > 0 ? "," : "", sc.perturbed_ids[i]);
        }
        std::printf("]\n");
      }
      return 0;
    }

    if (app.got_subcommand(validate)) {
      nlohmann::json root;
      tagloc::SimConfig cfg = load_sim(common, &root);
      const auto scenarios = tagloc::scenarios_from_config(cfg, root);
      if (print_effective) {
        nlohmann::json effective = tagloc::to_json(cfg);
        nlohmann::json js = nlohmann::json::array();
        for (const auto& sc : scenarios) {
          js.push_back({{"name", sc.name},
                        {"trajectory", sc.trajectory},
                        {"level", tagloc::to_string(sc.level)},
                        {"perturbed_ids", sc.perturbed_ids},
                        {"iterations", sc.iterations},
                        {"seed", sc.base_seed}});
        }
        effective["scenarios"] = js;
        std::cout << effective.dump(2) << "\n";
      } else {
        std::printf("config OK (%zu tags, %zu scenarios)\n", cfg.tags.size(),
                    scenarios.size());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
