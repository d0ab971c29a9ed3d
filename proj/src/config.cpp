#include "tagloc/config.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tagloc {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

Vec3 vec3_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument("config: " + what + " must be a 3-element array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json vec3_to_json(const Vec3& v) {
  return nlohmann::json::array({v.x(), v.y(), v.z()});
}

void reject_unknown_keys(const nlohmann::json& obj,
                         const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
    }
  }
}

Rotation orientation_from_json(const nlohmann::json& obj) {
  if (obj.contains("ypr_deg")) {
    return rotation_from_ypr_deg(vec3_from_json(obj.at("ypr_deg"), "ypr_deg"));
  }
  if (obj.contains("axis_angle_rad")) {
    return exp_so3(vec3_from_json(obj.at("axis_angle_rad"), "axis_angle_rad"));
  }
  return Rotation::identity();
}

PerturbationSpec sigma_from_json(const nlohmann::json& obj) {
  reject_unknown_keys(obj, {"sigma_translation_m", "sigma_rotation_deg", "mask"}, "sigma");
  PerturbationSpec spec;
  spec.axis_mask = {true, true, true, true, true, true};
  if (obj.contains("sigma_translation_m")) {
    spec.sigma_translation = vec3_from_json(obj.at("sigma_translation_m"), "sigma_translation_m");
  }
  if (obj.contains("sigma_rotation_deg")) {
    spec.sigma_rotation =
        kDegToRad * vec3_from_json(obj.at("sigma_rotation_deg"), "sigma_rotation_deg");
  }
  if (obj.contains("mask")) {
    const auto& m = obj.at("mask");
    if (!m.is_array() || m.size() != 6) {
      throw std::invalid_argument("config: sigma mask must have 6 entries");
    }
    for (int i = 0; i < 6; ++i) spec.axis_mask[i] = m[i].get<int>() != 0;
  }
  return spec;
}

nlohmann::json sigma_to_json(const PerturbationSpec& spec) {
  nlohmann::json j;
  j["sigma_translation_m"] = vec3_to_json(spec.sigma_translation);
  j["sigma_rotation_deg"] = vec3_to_json(spec.sigma_rotation / kDegToRad);
  nlohmann::json mask = nlohmann::json::array();
  for (bool b : spec.axis_mask) mask.push_back(b ? 1 : 0);
  j["mask"] = mask;
  return j;
}

TrajectorySpec trajectory_from_json(const nlohmann::json& obj, TrajectorySpec base) {
  reject_unknown_keys(obj,
                      {"kind", "length_m", "repetitions", "start_m", "radius_m",
                       "revolutions", "vertical_amplitude_m", "center_m",
                       "speed_mps", "dt_s", "look_at_m"},
                      "trajectory");
  if (obj.contains("kind")) {
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "straight_line") {
      base.kind = TrajectorySpec::Kind::kStraightLine;
    } else if (kind == "circle") {
      base.kind = TrajectorySpec::Kind::kCircle;
    } else {
      throw std::invalid_argument("config: unknown trajectory kind '" + kind + "'");
    }
  }
  if (obj.contains("length_m")) base.length_m = obj.at("length_m").get<double>();
  if (obj.contains("repetitions")) base.repetitions = obj.at("repetitions").get<int>();
  if (obj.contains("start_m")) base.start_m = vec3_from_json(obj.at("start_m"), "start_m");
  if (obj.contains("radius_m")) base.radius_m = obj.at("radius_m").get<double>();
  if (obj.contains("revolutions")) base.revolutions = obj.at("revolutions").get<double>();
  if (obj.contains("vertical_amplitude_m")) {
    base.vertical_amplitude_m = obj.at("vertical_amplitude_m").get<double>();
  }
  if (obj.contains("center_m")) base.center_m = vec3_from_json(obj.at("center_m"), "center_m");
  if (obj.contains("speed_mps")) base.speed_mps = obj.at("speed_mps").get<double>();
  if (obj.contains("dt_s")) base.dt_s = obj.at("dt_s").get<double>();
  if (obj.contains("look_at_m")) base.look_at_m = vec3_from_json(obj.at("look_at_m"), "look_at_m");
  return base;
}

nlohmann::json trajectory_to_json(const TrajectorySpec& spec) {
  nlohmann::json j;
  if (spec.kind == TrajectorySpec::Kind::kStraightLine) {
    j["kind"] = "straight_line";
    j["length_m"] = spec.length_m;
    j["repetitions"] = spec.repetitions;
    j["start_m"] = vec3_to_json(spec.start_m);
  } else {
    j["kind"] = "circle";
    j["radius_m"] = spec.radius_m;
    j["revolutions"] = spec.revolutions;
    j["vertical_amplitude_m"] = spec.vertical_amplitude_m;
    j["center_m"] = vec3_to_json(spec.center_m);
  }
  j["speed_mps"] = spec.speed_mps;
  j["dt_s"] = spec.dt_s;
  j["look_at_m"] = vec3_to_json(spec.look_at_m);
  return j;
}

}  // namespace

Rotation rotation_from_ypr_deg(const Vec3& ypr_deg) {
  const Vec3 ypr = kDegToRad * ypr_deg;
  const Rotation rz = exp_so3(Vec3(0.0, 0.0, ypr.x()));
  const Rotation ry = exp_so3(Vec3(0.0, ypr.y(), 0.0));
  const Rotation rx = exp_so3(Vec3(ypr.z(), 0.0, 0.0));
  return rz * ry * rx;
}

SimConfig default_sim_config() {
  SimConfig cfg;

  // The wall carrying the tags is parallel to the inertial XZ plane at
  // y = kWallY; the inertial origin is the surveyed site datum, deliberately
  // several meters from the wall. Tag-pose uncertainty is expressed in the
  // datum frame, so rotational installation error moves a tag by roughly
  // (datum distance) x (angle), which is what makes large rotational errors
  // punishing. Tag frame: x right along the wall, z out of the wall (-y,
  // toward the flight volume).
  constexpr double kWallY = 8.0;
  const Rotation wall = rotation_from_ypr_deg(Vec3(0.0, 0.0, 90.0));
  for (int i = 0; i < 3; ++i) {
    TagConfigEntry tag;
    tag.id = i;
    tag.size_m = 0.165;
    tag.position_m = Vec3(static_cast<double>(i) - 1.0, kWallY, 1.0);
    tag.orientation = wall;
    cfg.tags.push_back(tag);
  }
  cfg.middle_tag_id = 1;

  const Vec3 wall_center(0.0, kWallY, 1.0);

  TrajectorySpec sls;
  sls.kind = TrajectorySpec::Kind::kStraightLine;
  sls.start_m = Vec3(-1.5, kWallY - 2.0, 1.0);
  sls.look_at_m = wall_center;
  cfg.trajectories["SLS"] = sls;

  TrajectorySpec tdc;
  tdc.kind = TrajectorySpec::Kind::kCircle;
  tdc.center_m = Vec3(0.0, kWallY - 2.5, 1.0);
  tdc.look_at_m = wall_center;
  cfg.trajectories["3DC"] = tdc;

  return cfg;
}

TagMap build_tag_map(const SimConfig& cfg) {
  std::vector<Tag> tags;
  tags.reserve(cfg.tags.size());
  for (const TagConfigEntry& entry : cfg.tags) {
    Tag tag;
    tag.id = entry.id;
    tag.size_m = entry.size_m;
    tag.nominal_pose = Pose(entry.orientation, entry.position_m);
    tags.push_back(tag);
  }
  return TagMap(std::move(tags));
}

Cov6 process_noise_cov(const SimConfig& cfg, double dt_s) {
  Cov6 q = Cov6::Zero();
  const double st = cfg.input_sigma_translation * dt_s;
  const double sr = cfg.input_sigma_rotation * dt_s;
  q.topLeftCorner<3, 3>() = st * st * Mat3::Identity();
  q.bottomRightCorner<3, 3>() = sr * sr * Mat3::Identity();
  return q;
}

Cov6 initial_state_cov(const SimConfig& cfg) {
  Cov6 p0 = Cov6::Zero();
  p0.topLeftCorner<3, 3>() =
      cfg.initial_sigma_translation * cfg.initial_sigma_translation * Mat3::Identity();
  p0.bottomRightCorner<3, 3>() =
      cfg.initial_sigma_rotation * cfg.initial_sigma_rotation * Mat3::Identity();
  return p0;
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  nlohmann::json root;
  in >> root;
  return root;
}

SimConfig sim_config_from_json(const nlohmann::json& root) {
  SimConfig cfg = default_sim_config();
  if (root.is_null()) return cfg;
  if (!root.is_object()) {
    throw std::invalid_argument("config: top level must be a JSON object");
  }
  reject_unknown_keys(root,
                      {"camera", "pixel_sigma_px", "visibility_margin_px", "z_min_m",
                       "extrinsics", "tags", "middle_tag_id", "trajectories",
                       "process_noise", "filter", "scenarios"},
                      "top level");

  if (root.contains("camera")) {
    const auto& cam = root.at("camera");
    reject_unknown_keys(cam, {"fx", "fy", "cx", "cy", "width", "height"}, "camera");
    if (cam.contains("fx")) cfg.intrinsics.fx = cam.at("fx").get<double>();
    if (cam.contains("fy")) cfg.intrinsics.fy = cam.at("fy").get<double>();
    if (cam.contains("cx")) cfg.intrinsics.cx = cam.at("cx").get<double>();
    if (cam.contains("cy")) cfg.intrinsics.cy = cam.at("cy").get<double>();
    if (cam.contains("width")) cfg.intrinsics.width = cam.at("width").get<int>();
    if (cam.contains("height")) cfg.intrinsics.height = cam.at("height").get<int>();
  }
  cfg.intrinsics.validate();

  if (root.contains("pixel_sigma_px")) cfg.pixel_sigma_px = root.at("pixel_sigma_px").get<double>();
  if (root.contains("visibility_margin_px")) {
    cfg.visibility_margin_px = root.at("visibility_margin_px").get<double>();
  }
  if (root.contains("z_min_m")) cfg.z_min_m = root.at("z_min_m").get<double>();

  if (root.contains("extrinsics")) {
    const auto& ext = root.at("extrinsics");
    reject_unknown_keys(ext, {"translation_m", "ypr_deg", "axis_angle_rad"}, "extrinsics");
    Vec3 t = Vec3::Zero();
    if (ext.contains("translation_m")) t = vec3_from_json(ext.at("translation_m"), "translation_m");
    cfg.calib.t_cv = Pose(orientation_from_json(ext), t);
  }

  if (root.contains("tags")) {
    cfg.tags.clear();
    for (const auto& jt : root.at("tags")) {
      reject_unknown_keys(jt, {"id", "size_m", "position_m", "ypr_deg", "axis_angle_rad", "sigma"},
                          "tag entry");
      TagConfigEntry tag;
      tag.id = jt.at("id").get<int>();
      if (jt.contains("size_m")) tag.size_m = jt.at("size_m").get<double>();
      tag.position_m = vec3_from_json(jt.at("position_m"), "position_m");
      tag.orientation = orientation_from_json(jt);
      if (jt.contains("sigma")) tag.sigma = sigma_from_json(jt.at("sigma"));
      cfg.tags.push_back(tag);
    }
  }
  if (root.contains("middle_tag_id")) cfg.middle_tag_id = root.at("middle_tag_id").get<int>();

  if (root.contains("trajectories")) {
    for (const auto& [name, jt] : root.at("trajectories").items()) {
      TrajectorySpec base;
      auto it = cfg.trajectories.find(name);
      if (it != cfg.trajectories.end()) base = it->second;
      cfg.trajectories[name] = trajectory_from_json(jt, base);
    }
  }

  if (root.contains("process_noise")) {
    const auto& pn = root.at("process_noise");
    reject_unknown_keys(pn, {"sigma_translation_mps", "sigma_rotation_radps"}, "process_noise");
    if (pn.contains("sigma_translation_mps")) {
      cfg.input_sigma_translation = pn.at("sigma_translation_mps").get<double>();
    }
    if (pn.contains("sigma_rotation_radps")) {
      cfg.input_sigma_rotation = pn.at("sigma_rotation_radps").get<double>();
    }
  }

  if (root.contains("filter")) {
    const auto& f = root.at("filter");
    reject_unknown_keys(f,
                        {"initial_sigma_translation_m", "initial_sigma_rotation_rad",
                         "divergence_threshold_m", "per_corner_independent"},
                        "filter");
    if (f.contains("initial_sigma_translation_m")) {
      cfg.initial_sigma_translation = f.at("initial_sigma_translation_m").get<double>();
    }
    if (f.contains("initial_sigma_rotation_rad")) {
      cfg.initial_sigma_rotation = f.at("initial_sigma_rotation_rad").get<double>();
    }
    if (f.contains("divergence_threshold_m")) {
      cfg.divergence_threshold_m = f.at("divergence_threshold_m").get<double>();
    }
    if (f.contains("per_corner_independent")) {
      cfg.per_corner_independent = f.at("per_corner_independent").get<bool>();
    }
  }

  build_tag_map(cfg);  // validates tag ids/sizes
  return cfg;
}

nlohmann::json to_json(const SimConfig& cfg) {
  nlohmann::json root;
  root["camera"] = {{"fx", cfg.intrinsics.fx}, {"fy", cfg.intrinsics.fy},
                    {"cx", cfg.intrinsics.cx}, {"cy", cfg.intrinsics.cy},
                    {"width", cfg.intrinsics.width}, {"height", cfg.intrinsics.height}};
  root["pixel_sigma_px"] = cfg.pixel_sigma_px;
  root["visibility_margin_px"] = cfg.visibility_margin_px;
  root["z_min_m"] = cfg.z_min_m;

  nlohmann::json ext;
  ext["translation_m"] = vec3_to_json(cfg.calib.t_cv.translation());
  ext["axis_angle_rad"] = vec3_to_json(log_so3(cfg.calib.t_cv.rotation()));
  root["extrinsics"] = ext;

  nlohmann::json tags = nlohmann::json::array();
  for (const TagConfigEntry& tag : cfg.tags) {
    nlohmann::json jt;
    jt["id"] = tag.id;
    jt["size_m"] = tag.size_m;
    jt["position_m"] = vec3_to_json(tag.position_m);
    jt["axis_angle_rad"] = vec3_to_json(log_so3(tag.orientation));
    jt["sigma"] = sigma_to_json(tag.sigma);
    tags.push_back(jt);
  }
  root["tags"] = tags;
  root["middle_tag_id"] = cfg.middle_tag_id;

  nlohmann::json trajectories;
  for (const auto& [name, spec] : cfg.trajectories) {
    trajectories[name] = trajectory_to_json(spec);
  }
  root["trajectories"] = trajectories;

  root["process_noise"] = {{"sigma_translation_mps", cfg.input_sigma_translation},
                           {"sigma_rotation_radps", cfg.input_sigma_rotation}};
  root["filter"] = {{"initial_sigma_translation_m", cfg.initial_sigma_translation},
                    {"initial_sigma_rotation_rad", cfg.initial_sigma_rotation},
                    {"divergence_threshold_m", cfg.divergence_threshold_m},
                    {"per_corner_independent", cfg.per_corner_independent}};
  return root;
}

}  // namespace tagloc
