#include "tagloc/sim.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <stdexcept>
#include <string>

namespace tagloc {

namespace {

constexpr double kTwoPi = 6.283185307179586;

struct Fnv1a {
  std::uint64_t h = 1469598103934665603ull;

  void bytes(const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
  void f64(double v) {
    std::uint64_t u = 0;
    std::memcpy(&u, &v, sizeof(u));
    bytes(&u, sizeof(u));
  }
  void i64(std::int64_t v) { bytes(&v, sizeof(v)); }

  void mat(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) f64(m(r, c));
    }
  }
  void pose(const Pose& p) {
    mat(p.rotation().matrix());
    mat(p.translation());
  }
};

// True iff the tag's four corners are fully visible (noise-free) from the
// given state; outputs the clean pixels and depths when visible.
bool tag_view(const Pose& state, const Tag& tag, const ExtrinsicCalib& calib,
              const Intrinsics& intr, double margin_px, double z_min,
              std::array<PixelPoint, 4>* pixels_out) {
  const std::array<Vec4, 4> corners = corner_points_tag_frame(tag.size_m);
  std::array<PixelPoint, 4> pixels;
  std::array<double, 4> depths;
  for (int n = 0; n < 4; ++n) {
    const Vec3 z = predict_corner_camframe(state, calib, tag.nominal_pose, corners[n]);
    depths[n] = z.z();
    if (!(z.z() > z_min)) return false;
    pixels[n] = project(z, intr, z_min);
  }
  if (!corners_visible(pixels, depths, intr, margin_px, z_min)) return false;
  if (pixels_out != nullptr) *pixels_out = pixels;
  return true;
}

}  // namespace

Rotation camera_look_at(const Vec3& eye_w, const Vec3& target_w) {
  const Vec3 forward = (target_w - eye_w).normalized();
  const Vec3 up_w(0.0, 0.0, 1.0);
  Vec3 right = forward.cross(up_w);
  const double n = right.norm();
  if (n < 1e-9) {
    throw std::invalid_argument("camera_look_at: view direction parallel to world up");
  }
  right /= n;
  const Vec3 down = forward.cross(right);
  Mat3 c_ic;
  c_ic.col(0) = right;
  c_ic.col(1) = down;
  c_ic.col(2) = forward;
  return Rotation::from_matrix(c_ic);
}

Vec3 world_position(const Pose& state_pose) {
  return state_pose.inverse().translation();
}

Trajectory generate_trajectory(const TrajectorySpec& spec, const SceneConfig& scene) {
  if (!(spec.dt_s > 0.0) || !(spec.speed_mps > 0.0)) {
    throw std::invalid_argument("generate_trajectory: dt and speed must be positive");
  }
  const double step_m = spec.speed_mps * spec.dt_s;

  std::vector<Vec3> eyes;
  if (spec.kind == TrajectorySpec::Kind::kStraightLine) {
    if (!(spec.length_m > 0.0) || spec.repetitions < 1) {
      throw std::invalid_argument("generate_trajectory: bad straight-line geometry");
    }
    const int steps_per_leg = std::max(1, static_cast<int>(std::lround(spec.length_m / step_m)));
    Vec3 pos = spec.start_m;
    eyes.push_back(pos);
    double direction = 1.0;
    for (int leg = 0; leg < spec.repetitions; ++leg) {
      for (int s = 0; s < steps_per_leg; ++s) {
        pos.x() += direction * step_m;
        eyes.push_back(pos);
      }
      direction = -direction;
    }
  } else {
    if (!(spec.radius_m > 0.0) || !(spec.revolutions > 0.0)) {
      throw std::invalid_argument("generate_trajectory: bad circle geometry");
    }
    const double dtheta = step_m / spec.radius_m;
    const int total = static_cast<int>(std::lround(kTwoPi * spec.revolutions / dtheta));
    for (int k = 0; k <= total; ++k) {
      const double theta = k * dtheta;
      Vec3 pos = spec.center_m;
      pos.x() += spec.radius_m * std::cos(theta);
      pos.y() += spec.radius_m * std::sin(theta);
      pos.z() += spec.vertical_amplitude_m * std::sin(2.0 * theta);
      eyes.push_back(pos);
    }
  }

  Trajectory traj;
  traj.dt_s = spec.dt_s;
  traj.states.reserve(eyes.size());
  for (const Vec3& eye : eyes) {
    const Pose camera_world(camera_look_at(eye, spec.look_at_m), eye);
    // T_iv = T_ic * T_cv; the state is its inverse.
    traj.states.push_back((camera_world * scene.calib.t_cv).inverse());
  }

  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    bool any_visible = false;
    for (const Tag& tag : scene.map.tags()) {
      if (tag_view(traj.states[k], tag, scene.calib, scene.intrinsics,
                   scene.visibility_margin_px, scene.z_min, nullptr)) {
        any_visible = true;
        break;
      }
    }
    if (!any_visible) {
      throw std::runtime_error("generate_trajectory: no tag visible at step " +
                               std::to_string(k));
    }
  }

  traj.exact_inputs.reserve(traj.states.size() - 1);
  for (std::size_t k = 1; k < traj.states.size(); ++k) {
    traj.exact_inputs.push_back(log_se3(traj.states[k] * traj.states[k - 1].inverse()));
  }
  return traj;
}

std::vector<MotionInput> corrupt_inputs(const std::vector<Vec6>& exact,
                                        const Cov6& process_noise,
                                        CounterRng& rng) {
  if (!is_valid_covariance(process_noise)) {
    throw std::invalid_argument("corrupt_inputs: invalid process noise covariance");
  }
  Eigen::SelfAdjointEigenSolver<Mat6> es(
      (0.5 * (process_noise + process_noise.transpose())).eval());
  const Vec6 scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Mat6 l = es.eigenvectors() * scale.asDiagonal();

  std::vector<MotionInput> inputs;
  inputs.reserve(exact.size());
  for (const Vec6& xi : exact) {
    Vec6 n;
    for (int i = 0; i < 6; ++i) n(i) = rng.normal();
    const Vec6 w = l * n;
    MotionInput input;
    input.xi_rel = log_se3(exp_se3(w) * exp_se3(xi));
    input.process_noise = process_noise;
    inputs.push_back(input);
  }
  return inputs;
}

std::vector<std::vector<TagObservation>> synthesize_observations(
    const std::vector<Pose>& true_states, const TagMap& true_map,
    const ExtrinsicCalib& calib, const Intrinsics& intr,
    double pixel_noise_sigma, double pixel_model_sigma, double margin_px,
    CounterRng& rng, double z_min) {
  if (!(pixel_model_sigma > 0.0)) {
    throw std::invalid_argument("synthesize_observations: model sigma must be positive");
  }
  std::vector<std::vector<TagObservation>> all;
  all.reserve(true_states.size());
  for (const Pose& state : true_states) {
    std::vector<TagObservation> at_step;
    for (const Tag& tag : true_map.tags()) {
      std::array<PixelPoint, 4> clean;
      if (!tag_view(state, tag, calib, intr, margin_px, z_min, &clean)) continue;
      TagObservation obs;
      obs.tag_id = tag.id;
      obs.pixel_sigma = pixel_model_sigma;
      for (int n = 0; n < 4; ++n) {
        obs.corners[n].u = clean[n].u + pixel_noise_sigma * rng.normal();
        obs.corners[n].v = clean[n].v + pixel_noise_sigma * rng.normal();
      }
      at_step.push_back(obs);
    }
    all.push_back(std::move(at_step));
  }
  return all;
}

std::uint64_t SimData::digest() const {
  Fnv1a d;
  d.i64(static_cast<std::int64_t>(trajectory.states.size()));
  d.f64(trajectory.dt_s);
  for (const MotionInput& in : inputs) {
    d.mat(in.xi_rel);
    d.mat(in.process_noise);
  }
  d.i64(static_cast<std::int64_t>(observations.size()));
  for (const auto& step : observations) {
    d.i64(static_cast<std::int64_t>(step.size()));
    for (const TagObservation& obs : step) {
      d.i64(obs.tag_id);
      d.f64(obs.pixel_sigma);
      for (const PixelPoint& px : obs.corners) {
        d.f64(px.u);
        d.f64(px.v);
      }
    }
  }
  d.pose(initial_state.pose);
  d.mat(initial_state.cov);
  return d.h;
}

RunResult run_filter(const SimData& data, const TagMap& nominal_map,
                     FilterMode mode, const RunParams& params) {
  const std::vector<Pose>& truth = data.trajectory.states;
  if (truth.empty() || data.inputs.size() + 1 != truth.size() ||
      data.observations.size() != truth.size()) {
    throw std::invalid_argument("run_filter: misaligned input sequences");
  }

  RunResult result;
  result.records.reserve(truth.size());
  FilterState state = data.initial_state;

  auto record = [&](std::size_t k) {
    RunRecord rec;
    rec.t = static_cast<double>(k) * data.trajectory.dt_s;
    rec.true_pose = truth[k];
    rec.est_pose = state.pose;
    rec.error_twist = log_se3(state.pose * truth[k].inverse());
    rec.cov_diag = state.cov.diagonal();
    result.records.push_back(rec);
  };

  record(0);
  for (std::size_t k = 1; k < truth.size(); ++k) {
    state = predict(state, data.inputs[k - 1]);
    state = correct(state, data.observations[k], nominal_map, params.calib,
                    params.intrinsics, mode, params.estimator);
    record(k);
  }

  double sum_sq = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Vec3 err = world_position(result.records[k].est_pose) -
                     world_position(result.records[k].true_pose);
    sum_sq += err.squaredNorm();
  }
  result.rmse_position = std::sqrt(sum_sq / static_cast<double>(truth.size()));
  if (!std::isfinite(result.rmse_position)) {
    throw std::runtime_error("run_filter: non-finite position RMSE");
  }
  result.diverged = !(result.rmse_position <= params.divergence_threshold_m);
  return result;
}

CounterRng make_noise_stream(std::uint64_t seed, std::uint64_t iteration,
                             NoiseStream source) {
  return CounterRng(seed, iteration * kStreamsPerIteration +
                              static_cast<std::uint64_t>(source));
}

void write_timeseries_csv(std::ostream& os, const RunResult& run) {
  os << "t,err_x,err_y,err_z,err_rx,err_ry,err_rz,"
        "sig_x,sig_y,sig_z,sig_rx,sig_ry,sig_rz\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.12g%c", v, sep);
    os << buf;
  };
  for (const RunRecord& rec : run.records) {
    put(rec.t, ',');
    for (int i = 0; i < 6; ++i) put(rec.error_twist(i), ',');
    for (int i = 0; i < 6; ++i) {
      put(std::sqrt(std::max(0.0, rec.cov_diag(i))), i == 5 ? '\n' : ',');
    }
  }
}

}  // namespace tagloc
