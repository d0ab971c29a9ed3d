#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "tagloc/camera.hpp"
#include "tagloc/estimator.hpp"
#include "tagloc/lie.hpp"
#include "tagloc/rng.hpp"
#include "tagloc/tag_map.hpp"

namespace tagloc {

struct TrajectorySpec {
  enum class Kind { kStraightLine, kCircle };
  Kind kind = Kind::kStraightLine;

  // straight line: back-and-forth sweep along world x, `repetitions` legs
  double length_m = 3.0;
  int repetitions = 4;
  Vec3 start_m{-1.5, 6.0, 1.0};

  // circle: horizontal circle with a sinusoidal vertical component
  double radius_m = 1.0;
  double revolutions = 2.0;
  double vertical_amplitude_m = 0.2;
  Vec3 center_m{0.0, 5.5, 1.0};

  double speed_mps = 0.5;
  double dt_s = 0.1;
  Vec3 look_at_m{0.0, 8.0, 1.0};  // camera aim point on the tag wall
};

struct SceneConfig {
  TagMap map;
  ExtrinsicCalib calib;
  Intrinsics intrinsics;
  double visibility_margin_px = kDefaultVisibilityMarginPx;
  double z_min = kDefaultZMin;
};

struct Trajectory {
  std::vector<Pose> states;        // T_vi at steps 0..N (inertial -> vehicle)
  std::vector<Vec6> exact_inputs;  // N twists; entry k-1 moves step k-1 -> k
  double dt_s = 0.1;
};

// Camera attitude (camera axes as world columns: x right, y down, z forward)
// aiming from eye toward target with world +z up.
Rotation camera_look_at(const Vec3& eye_w, const Vec3& target_w);

// Vehicle position in the inertial frame for a state-convention pose.
Vec3 world_position(const Pose& state_pose);

// Ground truth poses plus exact relative twists. Throws std::runtime_error if
// at any step no tag of the nominal map is fully visible in the noise-free
// camera view.
Trajectory generate_trajectory(const TrajectorySpec& spec, const SceneConfig& scene);

// Left-multiplies each exact step by exp(w), w ~ N(0, process_noise).
// Consumes exactly six normal draws per step.
std::vector<MotionInput> corrupt_inputs(const std::vector<Vec6>& exact,
                                        const Cov6& process_noise,
                                        CounterRng& rng);

// Per step, per tag: projects the four world corners of the (true) map, adds
// N(0, pixel_noise_sigma^2) per coordinate, and emits the observation only if
// the noise-free pixels pass corners_visible. pixel_model_sigma is the value
// the observation advertises to the filter.
std::vector<std::vector<TagObservation>> synthesize_observations(
    const std::vector<Pose>& true_states, const TagMap& true_map,
    const ExtrinsicCalib& calib, const Intrinsics& intr,
    double pixel_noise_sigma, double pixel_model_sigma, double margin_px,
    CounterRng& rng, double z_min = kDefaultZMin);

struct RunRecord {
  double t = 0.0;
  Pose true_pose;  // T_vi
  Pose est_pose;   // T_vi
  Vec6 error_twist = Vec6::Zero();  // log_se3(est * true^-1)
  Vec6 cov_diag = Vec6::Zero();
};

struct RunResult {
  std::vector<RunRecord> records;
  double rmse_position = 0.0;  // over vehicle positions in the inertial frame
  bool diverged = false;
};

// Everything one filter run consumes. Both estimators in a paired comparison
// are fed the same SimData; digest() fingerprints every filter-visible byte
// so the pairing can be asserted.
struct SimData {
  Trajectory trajectory;
  std::vector<MotionInput> inputs;
  std::vector<std::vector<TagObservation>> observations;
  FilterState initial_state;

  std::uint64_t digest() const;  // FNV-1a
};

struct RunParams {
  Intrinsics intrinsics;
  ExtrinsicCalib calib;
  double divergence_threshold_m = 5.0;
  EstimatorConfig estimator;
};

RunResult run_filter(const SimData& data, const TagMap& nominal_map,
                     FilterMode mode, const RunParams& params);

// Stream-id layout: every Monte Carlo iteration owns a block of
// kStreamsPerIteration stream ids, one per noise source, so each source is
// independently seeded and replayable from (seed, iteration) alone.
enum class NoiseStream : std::uint64_t {
  kTagPerturbation = 0,
  kInputNoise = 1,
  kPixelNoise = 2,
  kInitialOffset = 3,
};
inline constexpr std::uint64_t kStreamsPerIteration = 8;

CounterRng make_noise_stream(std::uint64_t seed, std::uint64_t iteration,
                             NoiseStream source);

// Header: t,err_x,err_y,err_z,err_rx,err_ry,err_rz,sig_x,...,sig_rz
// (errors in m/rad, sig = sqrt of the covariance diagonal).
void write_timeseries_csv(std::ostream& os, const RunResult& run);

}  // namespace tagloc
