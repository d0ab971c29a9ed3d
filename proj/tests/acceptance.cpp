// Acceptance suite: one test case per criterion, each printing a single
// [PASS]/[FAIL] line. Run the whole binary or one case via --test-case=.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <vector>

#include "tagloc/config.hpp"
#include "tagloc/estimator.hpp"
#include "tagloc/lie.hpp"
#include "tagloc/mc.hpp"
#include "tagloc/sim.hpp"

using namespace tagloc;

namespace {

constexpr double kPi = 3.141592653589793;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(int n, const char* what, bool ok) {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << what
            << std::endl;
  CHECK_MESSAGE(ok, "criterion " << n << " (" << what << ")");
}

Vec3 random_vec3(CounterRng& rng, double scale) {
  return Vec3(rng.uniform01() * 2.0 - 1.0, rng.uniform01() * 2.0 - 1.0,
              rng.uniform01() * 2.0 - 1.0) *
         scale;
}

Vec6 random_twist_capped(CounterRng& rng, double rho_scale, double max_angle) {
  Vec6 xi;
  xi.head<3>() = random_vec3(rng, rho_scale);
  Vec3 axis = random_vec3(rng, 1.0);
  while (axis.norm() < 1e-6) axis = random_vec3(rng, 1.0);
  axis.normalize();
  xi.tail<3>() = axis * (rng.uniform01() * max_angle);
  return xi;
}

Mat4 exp_series(const Vec6& xi, int terms) {
  const Mat4 x = hat6(xi);
  Mat4 sum = Mat4::Identity();
  Mat4 power = Mat4::Identity();
  double factorial = 1.0;
  for (int n = 1; n <= terms; ++n) {
    power = (power * x).eval();
    factorial *= n;
    sum += power / factorial;
  }
  return sum;
}

ScenarioConfig plain_scenario(const std::string& name, const std::string& trajectory,
                              PerturbLevel level, std::vector<int> ids, int iterations,
                              std::uint64_t seed) {
  ScenarioConfig sc;
  sc.name = name;
  sc.trajectory = trajectory;
  sc.perturbed_ids = std::move(ids);
  sc.level = level;
  sc.perturbation = level == PerturbLevel::kNone ? PerturbationSpec::none()
                                                 : level_spec(level);
  sc.iterations = iterations;
  sc.base_seed = seed;
  return sc;
}

}  // namespace

TEST_CASE("criterion 1: lie property suite") {
  Stopwatch watch;
  CounterRng rng(1001, 0);
  bool ok = true;

  // exp/log roundtrip over 1e4 twists with rotation angle < pi
  double max_roundtrip = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const Vec6 xi = random_twist_capped(rng, 5.0, kPi - 1e-6);
    max_roundtrip = std::max(max_roundtrip, (log_se3(exp_se3(xi)) - xi).norm());
  }
  CHECK(max_roundtrip < 1e-9);
  ok = ok && max_roundtrip < 1e-9;

  // adjoint identity T exp(xi) T^-1 = exp(Ad(T) xi)
  double max_adjoint = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Pose t = exp_se3(random_twist_capped(rng, 2.0, 2.5));
    const Vec6 xi = random_twist_capped(rng, 1.0, 1.0);
    const Mat4 lhs = (t * exp_se3(xi) * t.inverse()).matrix();
    const Mat4 rhs = exp_se3(adjoint(t) * xi).matrix();
    max_adjoint = std::max(max_adjoint, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  CHECK(max_adjoint < 1e-8);
  ok = ok && max_adjoint < 1e-8;

  // dot-operator identity
  double max_dot = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec6 xi = random_twist_capped(rng, 2.0, 2.0);
    Vec4 p;
    p << random_vec3(rng, 3.0), rng.uniform01() * 2.0 - 1.0;
    max_dot = std::max(max_dot, (hat6(xi) * p - dot_op(p) * xi).norm());
  }
  CHECK(max_dot < 1e-12);
  ok = ok && max_dot < 1e-12;

  // closed form vs truncated series
  double max_series = 0.0;
  for (int i = 0; i < 500; ++i) {
    Vec6 xi = random_twist_capped(rng, 1.0, 1.5);
    if (xi.norm() > 2.0) xi *= 2.0 / xi.norm();
    max_series = std::max(
        max_series, (exp_se3(xi).matrix() - exp_series(xi, 30)).cwiseAbs().maxCoeff());
  }
  CHECK(max_series < 1e-10);
  ok = ok && max_series < 1e-10;

  const double elapsed = watch.seconds();
  CHECK(elapsed < 10.0);
  ok = ok && elapsed < 10.0;

  std::printf("  roundtrip %.2e  adjoint %.2e  dot %.2e  series %.2e  (%.2f s)\n",
              max_roundtrip, max_adjoint, max_dot, max_series, elapsed);
  report(1, "lie property suite", ok);
}

namespace {

struct JacobianScene {
  Pose state;
  ExtrinsicCalib calib;
  Pose tag_pose;
  Vec4 corner;
};

JacobianScene random_scene(CounterRng& rng) {
  JacobianScene scene;
  Mat3 c_ic;
  c_ic.col(0) = Vec3(-1, 0, 0);
  c_ic.col(1) = Vec3(0, 0, -1);
  c_ic.col(2) = Vec3(0, -1, 0);
  const Pose base(Rotation::from_matrix(c_ic), Vec3(0, 2, 1) + random_vec3(rng, 0.3));
  const Pose cam_world = exp_se3(random_twist_capped(rng, 0.0, 0.15)) * base;
  scene.calib.t_cv = exp_se3(random_twist_capped(rng, 0.05, 0.1));
  scene.state = (cam_world * scene.calib.t_cv).inverse();
  const Vec3 tag_pos(1.6 * rng.uniform01() - 0.8, 0.0, 0.5 + rng.uniform01());
  scene.tag_pose = exp_se3(random_twist_capped(rng, 0.02, 0.05)) *
                   Pose(exp_so3(Vec3(-kPi / 2, 0, 0)), tag_pos);
  const auto corners = corner_points_tag_frame(0.165);
  scene.corner = corners[static_cast<int>(rng.uniform01() * 3.999)];
  return scene;
}

}  // namespace

TEST_CASE("criterion 2: jacobian oracle") {
  Stopwatch watch;
  const Intrinsics intr = Intrinsics::default_sim();
  CounterRng rng(1002, 0);
  const double h = 1e-6;

  double worst_state = 0.0, worst_tag = 0.0, worst_proj = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const JacobianScene scene = random_scene(rng);

    {
      const auto jac = state_jacobian_z(scene.state, scene.calib, scene.tag_pose, scene.corner);
      Eigen::Matrix<double, 3, 6> fd;
      for (int c = 0; c < 6; ++c) {
        Vec6 d = Vec6::Zero();
        d(c) = h;
        fd.col(c) = (predict_corner_camframe(exp_se3(d) * scene.state, scene.calib,
                                             scene.tag_pose, scene.corner) -
                     predict_corner_camframe(exp_se3(-d) * scene.state, scene.calib,
                                             scene.tag_pose, scene.corner)) /
                    (2 * h);
      }
      worst_state = std::max(worst_state,
                             (jac - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
    }
    {
      const auto jac = tag_jacobian_e(scene.state, scene.calib, scene.tag_pose, scene.corner);
      Eigen::Matrix<double, 3, 6> fd;
      for (int c = 0; c < 6; ++c) {
        Vec6 d = Vec6::Zero();
        d(c) = h;
        fd.col(c) = (predict_corner_camframe(scene.state, scene.calib,
                                             exp_se3(d) * scene.tag_pose, scene.corner) -
                     predict_corner_camframe(scene.state, scene.calib,
                                             exp_se3(-d) * scene.tag_pose, scene.corner)) /
                    (2 * h);
      }
      worst_tag = std::max(worst_tag,
                           (jac - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
    }
    {
      const Vec3 p = predict_corner_camframe(scene.state, scene.calib, scene.tag_pose,
                                             scene.corner);
      const auto jac = projection_jacobian(p, intr);
      Eigen::Matrix<double, 2, 3> fd;
      for (int c = 0; c < 3; ++c) {
        Vec3 dp = Vec3::Zero();
        dp(c) = h;
        const PixelPoint plus = project(p + dp, intr);
        const PixelPoint minus = project(p - dp, intr);
        fd(0, c) = (plus.u - minus.u) / (2 * h);
        fd(1, c) = (plus.v - minus.v) / (2 * h);
      }
      worst_proj = std::max(worst_proj,
                            (jac - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
    }
  }

  const double elapsed = watch.seconds();
  const bool ok = worst_state < 1e-5 && worst_tag < 1e-5 && worst_proj < 1e-5 &&
                  elapsed < 10.0;
  CHECK(worst_state < 1e-5);
  CHECK(worst_tag < 1e-5);
  CHECK(worst_proj < 1e-5);
  CHECK(elapsed < 10.0);
  std::printf("  state %.2e  tag %.2e  projection %.2e  (%.2f s)\n", worst_state,
              worst_tag, worst_proj, elapsed);
  report(2, "jacobian oracle", ok);
}

TEST_CASE("criterion 3: degenerate equivalence") {
  const SimConfig cfg = default_sim_config();
  const ScenarioConfig sc =
      plain_scenario("degenerate", "3DC", PerturbLevel::kNone, {}, 1, 2024);
  const SceneConfig scene = scenario_scene(sc, cfg);
  const Trajectory truth = generate_trajectory(cfg.trajectories.at("3DC"), scene);
  const SimData data = make_iteration_data(sc, cfg, scene, truth, 0);
  const RunParams params = run_params(cfg);

  const RunResult ekf = run_filter(data, scene.map, FilterMode::kEkf, params);
  const RunResult tie = run_filter(data, scene.map, FilterMode::kTieEkf, params);

  double max_diff = 0.0;
  REQUIRE(ekf.records.size() == tie.records.size());
  for (std::size_t k = 0; k < ekf.records.size(); ++k) {
    max_diff = std::max(max_diff, (ekf.records[k].est_pose.matrix() -
                                   tie.records[k].est_pose.matrix())
                                      .cwiseAbs()
                                      .maxCoeff());
    max_diff = std::max(max_diff,
                        (ekf.records[k].cov_diag - tie.records[k].cov_diag)
                            .cwiseAbs()
                            .maxCoeff());
  }
  max_diff = std::max(max_diff, std::abs(ekf.rmse_position - tie.rmse_position));

  const bool ok = max_diff < 1e-12;
  CHECK(max_diff < 1e-12);
  std::printf("  max EKF/TIE-EKF deviation over a full 3DC run: %.3e\n", max_diff);
  report(3, "degenerate equivalence", ok);
}

TEST_CASE("criterion 4: noise-free convergence") {
  const SimConfig cfg = default_sim_config();
  const SceneConfig scene{build_tag_map(cfg), cfg.calib, cfg.intrinsics,
                          cfg.visibility_margin_px, cfg.z_min_m};
  const Trajectory truth = generate_trajectory(cfg.trajectories.at("SLS"), scene);

  SimData data;
  data.trajectory = truth;
  for (const Vec6& xi : truth.exact_inputs) {
    data.inputs.push_back(MotionInput{xi, Cov6::Zero()});
  }
  CounterRng rng(1004, 0);
  data.observations = synthesize_observations(truth.states, scene.map, scene.calib,
                                              scene.intrinsics, 0.0, 1.0,
                                              scene.visibility_margin_px, rng);

  Vec6 offset = Vec6::Zero();
  offset.head<3>() = Vec3(0.06, -0.08, 0.0);  // 10 cm initial position offset
  data.initial_state.pose = exp_se3(offset) * truth.states[0];
  data.initial_state.cov = initial_state_cov(cfg);

  const RunResult run = run_filter(data, scene.map, FilterMode::kEkf, run_params(cfg));

  const double initial_error = (world_position(run.records[0].est_pose) -
                                world_position(run.records[0].true_pose))
                                   .norm();
  double worst_after_50 = 0.0;
  double sum_sq_after_50 = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 50; k < run.records.size(); ++k) {
    const double err = (world_position(run.records[k].est_pose) -
                        world_position(run.records[k].true_pose))
                           .norm();
    worst_after_50 = std::max(worst_after_50, err);
    sum_sq_after_50 += err * err;
    ++count;
  }
  const double rmse_after_50 = std::sqrt(sum_sq_after_50 / count);

  const bool ok = initial_error > 0.09 && worst_after_50 < 1e-3 && rmse_after_50 < 1e-3;
  CHECK(initial_error > 0.09);
  CHECK(worst_after_50 < 1e-3);
  CHECK(rmse_after_50 < 1e-3);
  std::printf("  initial error %.3f m -> max error after step 50: %.2e m, RMSE %.2e m\n",
              initial_error, worst_after_50, rmse_after_50);
  report(4, "noise-free convergence", ok);
}

TEST_CASE("criterion 5: baseline accuracy band") {
  const SimConfig cfg = default_sim_config();
  bool ok = true;
  double worst = 0.0;
  for (const char* traj : {"SLS", "3DC"}) {
    const ScenarioConfig sc =
        plain_scenario(std::string("baseline-") + traj, traj, PerturbLevel::kNone, {}, 5, 555);
    const auto out = run_scenario(sc, cfg);
    for (const IterationSample& sample : out.summary.samples) {
      worst = std::max({worst, sample.rmse_ekf, sample.rmse_tie});
      ok = ok && sample.rmse_ekf < 0.10 && sample.rmse_tie < 0.10;
      CHECK(sample.rmse_ekf < 0.10);
      CHECK(sample.rmse_tie < 0.10);
    }
  }
  std::printf("  worst RMSE with true tag poses and 1 px noise: %.4f m\n", worst);
  report(5, "baseline accuracy band", ok);
}

TEST_CASE("criterion 6: directional improvement") {
  const SimConfig cfg = default_sim_config();
  const std::vector<std::uint64_t> seeds{101, 202, 303, 404, 505};
  const std::vector<int> all_ids{0, 1, 2};

  bool ok = true;
  for (const char* traj : {"SLS", "3DC"}) {
    for (PerturbLevel level : {PerturbLevel::kLow, PerturbLevel::kHigh}) {
      const std::string name =
          std::string("all-") + to_string(level) + "-" + traj;
      int wins = 0;
      double improvement_sum = 0.0;
      for (std::uint64_t seed : seeds) {
        const ScenarioConfig sc = plain_scenario(name, traj, level, all_ids, 200, seed);
        const auto out = run_scenario(sc, cfg);
        const double ekf_median = out.summary.ekf.median_rmse;
        const double tie_median = out.summary.tie.median_rmse;
        if (tie_median <= ekf_median) ++wins;
        improvement_sum += 100.0 * (ekf_median - tie_median) / ekf_median;
      }
      const double improvement = improvement_sum / static_cast<double>(seeds.size());
      const bool scenario_ok = wins >= 4;
      ok = ok && scenario_ok;
      CHECK_MESSAGE(wins >= 4, name << ": TIE-EKF median better in only " << wins
                                    << "/5 seeds");
      std::printf("  %-14s TIE-EKF median <= EKF median in %d/5 seeds; median "
                  "improvement %+.1f%%%s\n",
                  name.c_str(), wins, improvement,
                  (improvement < 0.0 || improvement > 25.0)
                      ? "  [flag: outside 0-25% band]"
                      : "");
    }
  }
  report(6, "directional improvement", ok);
}

TEST_CASE("criterion 7: extreme-case robustness") {
  Stopwatch watch;
  const SimConfig cfg = default_sim_config();
  const ScenarioConfig sc = plain_scenario("extreme-3DC", "3DC", PerturbLevel::kExtreme,
                                           {0, 1, 2}, 400, kDefaultBaseSeed);
  const auto out = run_scenario(sc, cfg);

  const double ekf_div = out.summary.ekf.divergence_fraction;
  const double tie_div = out.summary.tie.divergence_fraction;
  const double elapsed = watch.seconds();

  const bool ok = ekf_div > tie_div && tie_div < 0.5 * ekf_div && elapsed < 600.0;
  CHECK(ekf_div > tie_div);
  CHECK(tie_div < 0.5 * ekf_div);
  CHECK(elapsed < 600.0);
  std::printf("  divergence fraction: EKF %.3f (%.0f/400) vs TIE-EKF %.3f (%.0f/400)"
              "  (%.1f s)\n",
              ekf_div, ekf_div * 400, tie_div, tie_div * 400, elapsed);
  report(7, "extreme-case robustness", ok);
}

TEST_CASE("criterion 8: consistency envelope") {
  const SimConfig cfg = default_sim_config();
  const ScenarioConfig sc =
      plain_scenario("consistency-3DC", "3DC", PerturbLevel::kNone, {}, 20, 777);
  McOptions opt;
  opt.keep_records = true;
  const auto out = run_scenario(sc, cfg, opt);

  std::array<std::size_t, 3> inside{0, 0, 0};
  std::size_t total = 0;
  for (const RunResult& run : out.ekf_runs) {
    for (const RunRecord& rec : run.records) {
      for (int c = 0; c < 3; ++c) {
        const double sigma = std::sqrt(std::max(0.0, rec.cov_diag(c)));
        if (std::abs(rec.error_twist(c)) <= 2.0 * sigma) ++inside[c];
      }
      ++total;
    }
  }

  bool ok = true;
  const char* names[3] = {"x", "y", "z"};
  for (int c = 0; c < 3; ++c) {
    const double fraction = static_cast<double>(inside[c]) / static_cast<double>(total);
    const bool in_band = fraction >= 0.85 && fraction <= 0.995;
    ok = ok && in_band;
    CHECK_MESSAGE(in_band, "component " << names[c] << " fraction " << fraction);
    std::printf("  2-sigma containment, %s: %.3f (nominal 0.954)\n", names[c], fraction);
  }
  report(8, "consistency envelope", ok);
}

TEST_CASE("criterion 9: determinism") {
  const SimConfig cfg = default_sim_config();
  const ScenarioConfig sc = plain_scenario("all-high-3DC", "3DC", PerturbLevel::kHigh,
                                           {0, 1, 2}, 5, 31415);

  McOptions serial;
  serial.threads = 1;
  McOptions parallel;
  parallel.threads = 4;

  const auto a = run_scenario(sc, cfg, serial);
  const auto b = run_scenario(sc, cfg, parallel);
  const auto c = run_scenario(sc, cfg, parallel);

  std::ostringstream osa, osb, osc;
  write_samples_csv(osa, {a.summary});
  write_samples_csv(osb, {b.summary});
  write_samples_csv(osc, {c.summary});

  const bool ok = osa.str() == osb.str() && osb.str() == osc.str() && !osa.str().empty();
  CHECK(osa.str() == osb.str());
  CHECK(osb.str() == osc.str());
  std::printf("  samples.csv is byte-identical across reruns and thread counts (%zu bytes)\n",
              osa.str().size());
  report(9, "determinism", ok);
}
