#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tagloc/config.hpp"
#include "tagloc/mc.hpp"

using namespace tagloc;

namespace {

constexpr double kDegToRad = 0.017453292519943295;

std::string samples_csv(const ScenarioSummary& summary) {
  std::ostringstream os;
  write_samples_csv(os, {summary});
  return os.str();
}

}  // namespace

TEST_CASE("builtin scenarios cover the study grid") {
  const SimConfig cfg = default_sim_config();
  const auto scenarios = builtin_scenarios(cfg);
  REQUIRE(scenarios.size() == 9);

  auto find = [&](const std::string& name) {
    auto it = std::find_if(scenarios.begin(), scenarios.end(),
                           [&](const ScenarioConfig& s) { return s.name == name; });
    REQUIRE(it != scenarios.end());
    return *it;
  };

  const auto low = find("all-low-3DC");
  const Cov6 low_sigma = build_sigma(low.perturbation);
  CHECK(low_sigma(0, 0) == doctest::Approx(1e-4));
  CHECK(low_sigma(1, 1) == 0.0);
  CHECK(low_sigma(2, 2) == doctest::Approx(1e-4));
  CHECK(low_sigma(3, 3) == 0.0);
  CHECK(low_sigma(4, 4) == doctest::Approx(kDegToRad * kDegToRad));
  CHECK(low_sigma(5, 5) == 0.0);
  CHECK(low.iterations == 200);

  const auto high = find("all-high-SLS");
  const Cov6 high_sigma = build_sigma(high.perturbation);
  CHECK(high_sigma(0, 0) == doctest::Approx(25e-4));
  CHECK(high_sigma(4, 4) == doctest::Approx(25.0 * kDegToRad * kDegToRad));

  const auto extreme = find("extreme-3DC");
  const Cov6 extreme_sigma = build_sigma(extreme.perturbation);
  for (int i = 0; i < 6; ++i) CHECK(extreme_sigma(i, i) > 0.0);
  CHECK(extreme.iterations == 400);
  CHECK(extreme.perturbed_ids.size() == 3);

  for (const char* name : {"single-low-SLS", "single-high-SLS", "single-low-3DC",
                           "single-high-3DC"}) {
    const auto single = find(name);
    REQUIRE(single.perturbed_ids.size() == 1);
    CHECK(single.perturbed_ids[0] == cfg.middle_tag_id);
  }
}

TEST_CASE("config file scenario overrides merge by name") {
  const SimConfig cfg = default_sim_config();
  const nlohmann::json root = nlohmann::json::parse(R"({
    "scenarios": [
      {"name": "all-high-3DC", "iterations": 17, "seed": 5},
      {"name": "my-own", "trajectory": "SLS", "level": "extreme",
       "perturbed_ids": [1], "iterations": 3}
    ]
  })");
  const auto scenarios = scenarios_from_config(cfg, root);
  REQUIRE(scenarios.size() == 10);

  const auto& patched = *std::find_if(scenarios.begin(), scenarios.end(),
                                      [](const auto& s) { return s.name == "all-high-3DC"; });
  CHECK(patched.iterations == 17);
  CHECK(patched.base_seed == 5);
  CHECK(patched.trajectory == "3DC");

  const auto& added = scenarios.back();
  CHECK(added.name == "my-own");
  CHECK(added.level == PerturbLevel::kExtreme);
  CHECK(added.perturbed_ids == std::vector<int>{1});
}

TEST_CASE("summarize order statistics and divergence accounting") {
  const MethodStats a = summarize({1.0, 2.0, 3.0}, 5.0);
  CHECK(a.median_rmse == doctest::Approx(2.0));
  CHECK(a.divergence_fraction == 0.0);
  CHECK(a.mean_rmse == doctest::Approx(2.0));
  CHECK(a.min_rmse == 1.0);
  CHECK(a.max_rmse == 3.0);

  const MethodStats b = summarize({1.0, 2.0, 10.0}, 5.0);
  CHECK(b.divergence_fraction == doctest::Approx(1.0 / 3.0));
  CHECK(b.median_rmse == doctest::Approx(2.0));
  CHECK(b.mean_rmse == doctest::Approx(1.5));  // diverged sample excluded
  CHECK(b.max_rmse == 10.0);

  CHECK_THROWS_AS(summarize({}, 5.0), std::invalid_argument);
}

TEST_CASE("summarize agrees with an independent percentile computation") {
  CounterRng rng(71, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform01() * 40);
    std::vector<double> samples(n);
    for (double& v : samples) v = rng.uniform01() * 10.0;

    const MethodStats stats = summarize(samples, 5.0);

    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    auto pct = [&](double p) {
      const double h = p * (n - 1);
      const int lo = static_cast<int>(std::floor(h));
      const int hi = std::min(lo + 1, n - 1);
      return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
    };
    CHECK(stats.median_rmse == doctest::Approx(pct(0.5)).epsilon(1e-12));
    CHECK(stats.iqr == doctest::Approx(pct(0.75) - pct(0.25)).epsilon(1e-12));
    CHECK(stats.min_rmse == sorted.front());
    CHECK(stats.max_rmse == sorted.back());
  }
}

TEST_CASE("paired iterations give equal methods when nothing is perturbed") {
  const SimConfig cfg = default_sim_config();
  ScenarioConfig sc;
  sc.name = "zero";
  sc.trajectory = "SLS";
  sc.level = PerturbLevel::kNone;
  sc.perturbation = PerturbationSpec::none();
  sc.iterations = 1;
  sc.base_seed = 3;

  const ScenarioRunOutput out = run_scenario(sc, cfg);
  REQUIRE(out.summary.samples.size() == 1);
  CHECK(out.summary.samples[0].rmse_ekf == out.summary.samples[0].rmse_tie);
}

TEST_CASE("run_scenario is deterministic and thread-count independent") {
  const SimConfig cfg = default_sim_config();
  ScenarioConfig sc;
  sc.name = "det";
  sc.trajectory = "SLS";
  sc.perturbed_ids = {0, 1, 2};
  sc.level = PerturbLevel::kHigh;
  sc.perturbation = level_spec(PerturbLevel::kHigh);
  sc.iterations = 6;
  sc.base_seed = 11;

  McOptions serial;
  serial.threads = 1;
  McOptions parallel;
  parallel.threads = 4;

  const auto a = run_scenario(sc, cfg, serial);
  const auto b = run_scenario(sc, cfg, parallel);
  CHECK(samples_csv(a.summary) == samples_csv(b.summary));

  for (const IterationSample& sample : a.summary.samples) {
    CHECK(sample.input_digest != 0);
  }
}

TEST_CASE("summary statistics are recomputable from the samples table") {
  const SimConfig cfg = default_sim_config();
  ScenarioConfig sc;
  sc.name = "recompute";
  sc.trajectory = "SLS";
  sc.perturbed_ids = {1};
  sc.level = PerturbLevel::kHigh;
  sc.perturbation = level_spec(PerturbLevel::kHigh);
  sc.iterations = 5;
  sc.base_seed = 21;

  const auto out = run_scenario(sc, cfg);

  // parse the CSV back and rebuild the stats from it alone
  std::istringstream is(samples_csv(out.summary));
  std::string line;
  std::getline(is, line);
  CHECK(line == "scenario,iteration,seed,method,rmse,diverged");
  std::vector<double> ekf, tie;
  while (std::getline(is, line)) {
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 6);
    CHECK(fields[0] == "recompute");
    if (fields[3] == "EKF") {
      ekf.push_back(std::stod(fields[4]));
    } else {
      CHECK(fields[3] == "TIE-EKF");
      tie.push_back(std::stod(fields[4]));
    }
  }
  REQUIRE(ekf.size() == 5);
  REQUIRE(tie.size() == 5);

  const MethodStats ekf_stats = summarize(ekf, cfg.divergence_threshold_m);
  const MethodStats tie_stats = summarize(tie, cfg.divergence_threshold_m);
  CHECK(ekf_stats.median_rmse == doctest::Approx(out.summary.ekf.median_rmse).epsilon(1e-9));
  CHECK(tie_stats.median_rmse == doctest::Approx(out.summary.tie.median_rmse).epsilon(1e-9));
  CHECK(ekf_stats.mean_rmse == doctest::Approx(out.summary.ekf.mean_rmse).epsilon(1e-9));
}

TEST_CASE("emit_reports writes header-only files for an empty scenario list") {
  const std::string dir = "test_out_empty";
  emit_reports({}, {dir, false});
  std::ifstream summary(dir + "/summary.csv");
  std::string line;
  REQUIRE(std::getline(summary, line));
  CHECK(line ==
        "scenario,method,iterations,median_rmse,mean_rmse,min_rmse,max_rmse,iqr,"
        "divergence_fraction");
  CHECK_FALSE(std::getline(summary, line));

  std::ifstream samples(dir + "/samples.csv");
  REQUIRE(std::getline(samples, line));
  CHECK(line == "scenario,iteration,seed,method,rmse,diverged");
  CHECK_FALSE(std::getline(samples, line));
}

TEST_CASE("golden snapshot of a small fixed-seed run") {
  const SimConfig cfg = default_sim_config();
  ScenarioConfig sc;
  sc.name = "all-low-SLS";
  sc.trajectory = "SLS";
  sc.perturbed_ids = {0, 1, 2};
  sc.level = PerturbLevel::kLow;
  sc.perturbation = level_spec(PerturbLevel::kLow);
  sc.iterations = 3;
  sc.base_seed = 7;

  const auto out = run_scenario(sc, cfg);

  std::ostringstream summary_os, samples_os;
  write_summary_csv(summary_os, {out.summary});
  write_samples_csv(samples_os, {out.summary});

  auto read_file = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "missing golden file: " << path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string base = TAGLOC_TEST_DATA_DIR;
  CHECK(summary_os.str() == read_file(base + "/golden_summary.csv"));
  CHECK(samples_os.str() == read_file(base + "/golden_samples.csv"));
}
