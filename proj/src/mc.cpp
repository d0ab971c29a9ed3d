#include "tagloc/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

namespace tagloc {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

double percentile(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

const char* to_string(PerturbLevel level) {
  switch (level) {
    case PerturbLevel::kNone: return "none";
    case PerturbLevel::kLow: return "low";
    case PerturbLevel::kHigh: return "high";
    case PerturbLevel::kExtreme: return "extreme";
    case PerturbLevel::kCustom: return "custom";
  }
  return "?";
}

PerturbLevel perturb_level_from_string(const std::string& name) {
  if (name == "none") return PerturbLevel::kNone;
  if (name == "low") return PerturbLevel::kLow;
  if (name == "high") return PerturbLevel::kHigh;
  if (name == "extreme") return PerturbLevel::kExtreme;
  if (name == "custom") return PerturbLevel::kCustom;
  throw std::invalid_argument("unknown perturbation level '" + name + "'");
}

PerturbationSpec level_spec(PerturbLevel level) {
  switch (level) {
    case PerturbLevel::kNone:
      return PerturbationSpec::none();
    case PerturbLevel::kLow:
      return PerturbationSpec::in_plane(0.01, 0.01, 1.0 * kDegToRad);
    case PerturbLevel::kHigh:
      return PerturbationSpec::in_plane(0.05, 0.05, 5.0 * kDegToRad);
    case PerturbLevel::kExtreme:
      return PerturbationSpec::isotropic(0.05, 5.0 * kDegToRad);
    case PerturbLevel::kCustom:
      break;
  }
  throw std::invalid_argument("level_spec: custom level carries its own spec");
}

std::vector<ScenarioConfig> builtin_scenarios(const SimConfig& cfg) {
  std::vector<int> all_ids;
  for (const TagConfigEntry& tag : cfg.tags) all_ids.push_back(tag.id);
  const std::vector<int> middle{cfg.middle_tag_id};

  std::vector<ScenarioConfig> out;
  for (const std::string& traj : {std::string("SLS"), std::string("3DC")}) {
    for (const auto& [scope_name, ids] :
         {std::pair<std::string, std::vector<int>>{"single", middle},
          std::pair<std::string, std::vector<int>>{"all", all_ids}}) {
      for (PerturbLevel level : {PerturbLevel::kLow, PerturbLevel::kHigh}) {
        ScenarioConfig sc;
        sc.name = scope_name + "-" + to_string(level) + "-" + traj;
        sc.trajectory = traj;
        sc.perturbed_ids = ids;
        sc.level = level;
        sc.perturbation = level_spec(level);
        sc.iterations = 200;
        sc.base_seed = kDefaultBaseSeed;
        out.push_back(sc);
      }
    }
  }

  ScenarioConfig extreme;
  extreme.name = "extreme-3DC";
  extreme.trajectory = "3DC";
  extreme.perturbed_ids = all_ids;
  extreme.level = PerturbLevel::kExtreme;
  extreme.perturbation = level_spec(PerturbLevel::kExtreme);
  extreme.iterations = 400;
  extreme.base_seed = kDefaultBaseSeed;
  out.push_back(extreme);
  return out;
}

std::vector<ScenarioConfig> scenarios_from_config(const SimConfig& cfg,
                                                  const nlohmann::json& root) {
  std::vector<ScenarioConfig> out = builtin_scenarios(cfg);
  if (root.is_null() || !root.contains("scenarios")) return out;

  for (const auto& js : root.at("scenarios")) {
    const std::string name = js.at("name").get<std::string>();
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ScenarioConfig& s) { return s.name == name; });
    ScenarioConfig sc;
    if (it != out.end()) sc = *it;
    sc.name = name;
    if (js.contains("trajectory")) sc.trajectory = js.at("trajectory").get<std::string>();
    if (js.contains("perturbed_ids")) {
      sc.perturbed_ids.clear();
      for (const auto& id : js.at("perturbed_ids")) sc.perturbed_ids.push_back(id.get<int>());
    }
    if (js.contains("level")) {
      sc.level = perturb_level_from_string(js.at("level").get<std::string>());
      if (sc.level != PerturbLevel::kCustom) sc.perturbation = level_spec(sc.level);
    }
    if (js.contains("iterations")) sc.iterations = js.at("iterations").get<int>();
    if (js.contains("seed")) sc.base_seed = js.at("seed").get<std::uint64_t>();
    if (sc.iterations < 1) {
      throw std::invalid_argument("scenario '" + name + "': iterations must be >= 1");
    }
    if (it != out.end()) {
      *it = sc;
    } else {
      out.push_back(sc);
    }
  }
  return out;
}

MethodStats summarize(const std::vector<double>& rmse_samples,
                      double divergence_threshold_m) {
  if (rmse_samples.empty()) {
    throw std::invalid_argument("summarize: no samples");
  }
  std::vector<double> sorted = rmse_samples;
  std::sort(sorted.begin(), sorted.end());

  MethodStats stats;
  stats.median_rmse = percentile(sorted, 0.5);
  stats.iqr = percentile(sorted, 0.75) - percentile(sorted, 0.25);
  stats.min_rmse = sorted.front();
  stats.max_rmse = sorted.back();

  double sum = 0.0;
  std::size_t kept = 0;
  std::size_t diverged = 0;
  for (double v : rmse_samples) {
    if (v > divergence_threshold_m) {
      ++diverged;
    } else {
      sum += v;
      ++kept;
    }
  }
  stats.divergence_fraction =
      static_cast<double>(diverged) / static_cast<double>(rmse_samples.size());
  stats.mean_rmse = kept > 0 ? sum / static_cast<double>(kept)
                             : std::numeric_limits<double>::quiet_NaN();
  return stats;
}

SceneConfig scenario_scene(const ScenarioConfig& sc, const SimConfig& cfg) {
  std::vector<Tag> tags;
  tags.reserve(cfg.tags.size());
  const std::set<int> perturbed(sc.perturbed_ids.begin(), sc.perturbed_ids.end());
  for (const TagConfigEntry& entry : cfg.tags) {
    Tag tag;
    tag.id = entry.id;
    tag.size_m = entry.size_m;
    tag.nominal_pose = Pose(entry.orientation, entry.position_m);
    if (perturbed.count(entry.id) > 0) {
      const PerturbationSpec& spec =
          sc.level == PerturbLevel::kCustom ? entry.sigma : sc.perturbation;
      tag.sigma_tau = build_sigma(spec);
    }
    tags.push_back(tag);
  }
  SceneConfig scene{TagMap(std::move(tags)), cfg.calib, cfg.intrinsics,
                    cfg.visibility_margin_px, cfg.z_min_m};
  for (int id : sc.perturbed_ids) {
    if (!scene.map.contains(id)) {
      throw std::invalid_argument("scenario '" + sc.name + "': unknown tag id " +
                                  std::to_string(id));
    }
  }
  return scene;
}

RunParams run_params(const SimConfig& cfg) {
  RunParams params;
  params.intrinsics = cfg.intrinsics;
  params.calib = cfg.calib;
  params.divergence_threshold_m = cfg.divergence_threshold_m;
  params.estimator.z_min = cfg.z_min_m;
  params.estimator.per_corner_independent = cfg.per_corner_independent;
  return params;
}

SimData make_iteration_data(const ScenarioConfig& sc, const SimConfig& cfg,
                            const SceneConfig& scene, const Trajectory& truth,
                            std::uint64_t iteration) {
  const std::set<int> ids(sc.perturbed_ids.begin(), sc.perturbed_ids.end());

  CounterRng perturb_rng =
      make_noise_stream(sc.base_seed, iteration, NoiseStream::kTagPerturbation);
  const TagMap true_map = perturb_map(scene.map, ids, perturb_rng);

  CounterRng input_rng = make_noise_stream(sc.base_seed, iteration, NoiseStream::kInputNoise);
  SimData data;
  data.trajectory = truth;
  data.inputs = corrupt_inputs(truth.exact_inputs, process_noise_cov(cfg, truth.dt_s),
                               input_rng);

  CounterRng pixel_rng = make_noise_stream(sc.base_seed, iteration, NoiseStream::kPixelNoise);
  data.observations = synthesize_observations(
      truth.states, true_map, scene.calib, scene.intrinsics, cfg.pixel_sigma_px,
      cfg.pixel_sigma_px, scene.visibility_margin_px, pixel_rng, scene.z_min);

  CounterRng init_rng = make_noise_stream(sc.base_seed, iteration, NoiseStream::kInitialOffset);
  const Cov6 p0 = initial_state_cov(cfg);
  data.initial_state.pose = sample_perturbed(truth.states[0], p0, init_rng);
  data.initial_state.cov = p0;
  return data;
}

ScenarioRunOutput run_scenario(const ScenarioConfig& sc, const SimConfig& cfg,
                               const McOptions& opt) {
  if (sc.iterations < 1) {
    throw std::invalid_argument("run_scenario: iterations must be >= 1");
  }
  const SceneConfig scene = scenario_scene(sc, cfg);
  auto traj_it = cfg.trajectories.find(sc.trajectory);
  if (traj_it == cfg.trajectories.end()) {
    throw std::invalid_argument("run_scenario: unknown trajectory '" + sc.trajectory + "'");
  }
  const Trajectory truth = generate_trajectory(traj_it->second, scene);
  const RunParams params = run_params(cfg);

  const int n = sc.iterations;
  ScenarioRunOutput out;
  out.summary.scenario = sc.name;
  out.summary.iterations = n;
  out.summary.divergence_threshold_m = cfg.divergence_threshold_m;
  out.summary.samples.resize(n);
  if (opt.keep_records) {
    out.ekf_runs.resize(n);
    out.tie_runs.resize(n);
  }

  int threads = opt.threads > 0 ? opt.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        SimData data = make_iteration_data(sc, cfg, scene, truth, i);
        const std::uint64_t digest0 = data.digest();
        const RunResult ekf = run_filter(data, scene.map, FilterMode::kEkf, params);
        const std::uint64_t digest1 = data.digest();
        const RunResult tie = run_filter(data, scene.map, FilterMode::kTieEkf, params);
        const std::uint64_t digest2 = data.digest();
        if (digest0 != digest1 || digest1 != digest2) {
          throw std::logic_error("paired inputs were mutated between methods");
        }
        IterationSample& sample = out.summary.samples[i];
        sample.iteration = i;
        sample.seed = sc.base_seed;
        sample.rmse_ekf = ekf.rmse_position;
        sample.rmse_tie = tie.rmse_position;
        sample.diverged_ekf = ekf.diverged;
        sample.diverged_tie = tie.diverged;
        sample.input_digest = digest0;
        if (opt.keep_records) {
          out.ekf_runs[i] = ekf;
          out.tie_runs[i] = tie;
        }
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error.empty()) {
          first_error = "scenario '" + sc.name + "' iteration " + std::to_string(i) +
                        " (seed " + std::to_string(sc.base_seed) + "): " + e.what();
        }
        next.store(n);
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (!first_error.empty()) {
    throw std::runtime_error(first_error);
  }

  std::vector<double> ekf_rmse(n), tie_rmse(n);
  for (int i = 0; i < n; ++i) {
    ekf_rmse[i] = out.summary.samples[i].rmse_ekf;
    tie_rmse[i] = out.summary.samples[i].rmse_tie;
  }
  out.summary.ekf = summarize(ekf_rmse, cfg.divergence_threshold_m);
  out.summary.tie = summarize(tie_rmse, cfg.divergence_threshold_m);
  return out;
}

void write_summary_csv(std::ostream& os, const std::vector<ScenarioSummary>& summaries) {
  os << "scenario,method,iterations,median_rmse,mean_rmse,min_rmse,max_rmse,iqr,"
        "divergence_fraction\n";
  for (const ScenarioSummary& s : summaries) {
    for (const auto& [method, stats] :
         {std::pair<const char*, const MethodStats*>{"EKF", &s.ekf},
          std::pair<const char*, const MethodStats*>{"TIE-EKF", &s.tie}}) {
      os << s.scenario << ',' << method << ',' << s.iterations << ','
         << format_double(stats->median_rmse) << ',' << format_double(stats->mean_rmse)
         << ',' << format_double(stats->min_rmse) << ',' << format_double(stats->max_rmse)
         << ',' << format_double(stats->iqr) << ','
         << format_double(stats->divergence_fraction) << '\n';
    }
  }
}

void write_samples_csv(std::ostream& os, const std::vector<ScenarioSummary>& summaries) {
  os << "scenario,iteration,seed,method,rmse,diverged\n";
  for (const ScenarioSummary& s : summaries) {
    for (const IterationSample& sample : s.samples) {
      os << s.scenario << ',' << sample.iteration << ',' << sample.seed << ",EKF,"
         << format_double(sample.rmse_ekf) << ',' << (sample.diverged_ekf ? 1 : 0) << '\n';
      os << s.scenario << ',' << sample.iteration << ',' << sample.seed << ",TIE-EKF,"
         << format_double(sample.rmse_tie) << ',' << (sample.diverged_tie ? 1 : 0) << '\n';
    }
  }
}

void emit_reports(const std::vector<ScenarioRunOutput>& outputs, const ReportPaths& paths) {
  namespace fs = std::filesystem;
  fs::create_directories(paths.out_dir);

  std::vector<ScenarioSummary> summaries;
  summaries.reserve(outputs.size());
  for (const ScenarioRunOutput& out : outputs) summaries.push_back(out.summary);

  {
    std::ofstream os(fs::path(paths.out_dir) / "summary.csv");
    if (!os) throw std::runtime_error("emit_reports: cannot write summary.csv");
    write_summary_csv(os, summaries);
  }
  {
    std::ofstream os(fs::path(paths.out_dir) / "samples.csv");
    if (!os) throw std::runtime_error("emit_reports: cannot write samples.csv");
    write_samples_csv(os, summaries);
  }

  if (!paths.timeseries) return;
  const fs::path ts_dir = fs::path(paths.out_dir) / "timeseries";
  fs::create_directories(ts_dir);
  for (const ScenarioRunOutput& out : outputs) {
    if (out.ekf_runs.empty()) {
      throw std::runtime_error("emit_reports: time series requested but records were not kept");
    }
    for (std::size_t i = 0; i < out.ekf_runs.size(); ++i) {
      for (const auto& [method, run] :
           {std::pair<const char*, const RunResult*>{"EKF", &out.ekf_runs[i]},
            std::pair<const char*, const RunResult*>{"TIE-EKF", &out.tie_runs[i]}}) {
        const fs::path file = ts_dir / (out.summary.scenario + "_iter" +
                                        std::to_string(i) + "_" + method + ".csv");
        std::ofstream os(file);
        if (!os) throw std::runtime_error("emit_reports: cannot write " + file.string());
        write_timeseries_csv(os, *run);
      }
    }
  }
}

}  // namespace tagloc
