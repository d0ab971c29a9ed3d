#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagloc/config.hpp"
#include "tagloc/sim.hpp"

namespace tagloc {

enum class PerturbLevel { kNone, kLow, kHigh, kExtreme, kCustom };
const char* to_string(PerturbLevel level);
PerturbLevel perturb_level_from_string(const std::string& name);

// Presets: low = in-plane (0.01 m, 0.01 m, 1 deg); high = in-plane
// (0.05 m, 0.05 m, 5 deg); extreme = all six axes (0.05 m, 5 deg).
PerturbationSpec level_spec(PerturbLevel level);

struct ScenarioConfig {
  std::string name;
  std::string trajectory = "SLS";  // key into SimConfig::trajectories
  std::vector<int> perturbed_ids;
  PerturbLevel level = PerturbLevel::kLow;
  PerturbationSpec perturbation;  // resolved spec (preset or custom)
  int iterations = 200;
  std::uint64_t base_seed = 12345;
};

inline constexpr std::uint64_t kDefaultBaseSeed = 12345;

// The standard study: {single, all} x {low, high} on SLS and 3DC at 200
// iterations, plus extreme-3DC at 400.
std::vector<ScenarioConfig> builtin_scenarios(const SimConfig& cfg);

// Builtins with the config file's "scenarios" array merged over them by name;
// unknown names are appended as new scenarios.
std::vector<ScenarioConfig> scenarios_from_config(const SimConfig& cfg,
                                                  const nlohmann::json& root);

struct MethodStats {
  double median_rmse = 0.0;
  double mean_rmse = 0.0;  // over non-diverged samples only
  double min_rmse = 0.0;
  double max_rmse = 0.0;
  double iqr = 0.0;
  double divergence_fraction = 0.0;
};

// Order statistics over all samples (linear interpolation between closest
// ranks); the mean excludes diverged samples, median/min/max/iqr do not.
MethodStats summarize(const std::vector<double>& rmse_samples,
                      double divergence_threshold_m);

struct IterationSample {
  int iteration = 0;
  std::uint64_t seed = 0;
  double rmse_ekf = 0.0;
  double rmse_tie = 0.0;
  bool diverged_ekf = false;
  bool diverged_tie = false;
  std::uint64_t input_digest = 0;  // identical for both methods by design
};

struct ScenarioSummary {
  std::string scenario;
  int iterations = 0;
  double divergence_threshold_m = 5.0;
  MethodStats ekf;
  MethodStats tie;
  std::vector<IterationSample> samples;
};

struct McOptions {
  int threads = 0;           // 0 = hardware concurrency
  bool keep_records = false; // retain per-run records (time-series output)
};

struct ScenarioRunOutput {
  ScenarioSummary summary;
  std::vector<RunResult> ekf_runs;  // per iteration, only when keep_records
  std::vector<RunResult> tie_runs;
};

// The per-scenario scene: the nominal map with sigma_tau assigned to the
// perturbed tags (level preset, or the per-tag config spec for custom).
SceneConfig scenario_scene(const ScenarioConfig& sc, const SimConfig& cfg);

RunParams run_params(const SimConfig& cfg);

// One iteration's worth of paired inputs: perturbed map, noisy inputs, noisy
// observations, sampled initial state. Stream usage per iteration is fixed:
// tag perturbation, input noise, pixel noise, initial offset (see NoiseStream).
SimData make_iteration_data(const ScenarioConfig& sc, const SimConfig& cfg,
                            const SceneConfig& scene, const Trajectory& truth,
                            std::uint64_t iteration);

// Runs EKF and TIE-EKF on identical data for every iteration, in parallel,
// with a reduction in iteration order so results are independent of
// scheduling. Any iteration failure aborts with the iteration index and seed.
ScenarioRunOutput run_scenario(const ScenarioConfig& sc, const SimConfig& cfg,
                               const McOptions& opt = McOptions{});

void write_summary_csv(std::ostream& os, const std::vector<ScenarioSummary>& summaries);
void write_samples_csv(std::ostream& os, const std::vector<ScenarioSummary>& summaries);

struct ReportPaths {
  std::string out_dir;
  bool timeseries = false;
};

// Writes summary.csv and samples.csv (and per-run time series when asked)
// under out_dir, creating it if needed.
void emit_reports(const std::vector<ScenarioRunOutput>& outputs, const ReportPaths& paths);

}  // namespace tagloc
