#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tagloc/camera.hpp"
#include "tagloc/estimator.hpp"
#include "tagloc/sim.hpp"
#include "tagloc/tag_map.hpp"

namespace tagloc {

struct TagConfigEntry {
  int id = 0;
  double size_m = 0.165;
  Vec3 position_m = Vec3::Zero();
  Rotation orientation;
  PerturbationSpec sigma;  // used when a scenario asks for the custom level
};

// Everything the simulator and filters read; scenario definitions layer on
// top of this (see mc.hpp). All values are config-file overridable.
struct SimConfig {
  Intrinsics intrinsics;
  double pixel_sigma_px = 1.0;
  double visibility_margin_px = kDefaultVisibilityMarginPx;
  double z_min_m = kDefaultZMin;

  ExtrinsicCalib calib;  // identity: vehicle frame == camera frame

  std::vector<TagConfigEntry> tags;
  int middle_tag_id = 1;

  std::map<std::string, TrajectorySpec> trajectories;  // "SLS", "3DC"

  double input_sigma_translation = 0.05;  // m/s
  double input_sigma_rotation = 0.05;     // rad/s

  double initial_sigma_translation = 0.1;   // m
  double initial_sigma_rotation = 0.01;     // rad

  double divergence_threshold_m = 5.0;
  bool per_corner_independent = false;
};

// Three 0.165 m tags on a wall parallel to the inertial XZ plane at y = 8 m
// (the origin is the surveyed site datum), centers at x in {-1, 0, +1},
// z = 1, facing the flight volume; plus the SLS and 3DC trajectories.
SimConfig default_sim_config();

TagMap build_tag_map(const SimConfig& cfg);  // nominal poses, zero sigma_tau
Cov6 process_noise_cov(const SimConfig& cfg, double dt_s);
Cov6 initial_state_cov(const SimConfig& cfg);

// Yaw-pitch-roll (z-y-x) in degrees to a rotation; the config's orientation
// convention.
Rotation rotation_from_ypr_deg(const Vec3& ypr_deg);

nlohmann::json load_json_file(const std::string& path);

// Merges the given JSON field-by-field over the defaults. Unknown keys are an
// error; arrays replace the default wholesale.
SimConfig sim_config_from_json(const nlohmann::json& root);

nlohmann::json to_json(const SimConfig& cfg);

}  // namespace tagloc
