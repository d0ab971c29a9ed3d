#include "tagloc/tag_map.hpp"

#include <stdexcept>
#include <string>
#include <unordered_set>

namespace tagloc {

PerturbationSpec PerturbationSpec::in_plane(double sigma_x_m, double sigma_z_m,
                                            double sigma_theta_y_rad) {
  PerturbationSpec spec;
  spec.sigma_translation = Vec3(sigma_x_m, 0.0, sigma_z_m);
  spec.sigma_rotation = Vec3(0.0, sigma_theta_y_rad, 0.0);
  spec.axis_mask = {true, false, true, false, true, false};
  return spec;
}

PerturbationSpec PerturbationSpec::isotropic(double sigma_trans_m,
                                             double sigma_rot_rad) {
  PerturbationSpec spec;
  spec.sigma_translation = Vec3::Constant(sigma_trans_m);
  spec.sigma_rotation = Vec3::Constant(sigma_rot_rad);
  return spec;
}

Cov6 build_sigma(const PerturbationSpec& spec) {
  for (int i = 0; i < 3; ++i) {
    if (spec.sigma_translation(i) < 0.0 || spec.sigma_rotation(i) < 0.0) {
      throw std::invalid_argument("build_sigma: negative standard deviation");
    }
  }
  Cov6 sigma = Cov6::Zero();
  for (int i = 0; i < 3; ++i) {
    if (spec.axis_mask[i]) {
      sigma(i, i) = spec.sigma_translation(i) * spec.sigma_translation(i);
    }
    if (spec.axis_mask[i + 3]) {
      sigma(i + 3, i + 3) = spec.sigma_rotation(i) * spec.sigma_rotation(i);
    }
  }
  return sigma;
}

TagMap::TagMap(std::vector<Tag> tags) : tags_(std::move(tags)) {
  if (tags_.empty()) {
    throw std::invalid_argument("TagMap: at least one tag required");
  }
  std::unordered_set<int> ids;
  for (const Tag& tag : tags_) {
    if (!(tag.size_m > 0.0)) {
      throw std::invalid_argument("TagMap: tag size must be positive");
    }
    if (!ids.insert(tag.id).second) {
      throw std::invalid_argument("TagMap: duplicate tag id " + std::to_string(tag.id));
    }
  }
}

const Tag& TagMap::by_id(int id) const {
  for (const Tag& tag : tags_) {
    if (tag.id == id) return tag;
  }
  throw std::out_of_range("TagMap: unknown tag id " + std::to_string(id));
}

bool TagMap::contains(int id) const {
  for (const Tag& tag : tags_) {
    if (tag.id == id) return true;
  }
  return false;
}

std::array<Vec4, 4> corner_points_tag_frame(double size_m) {
  if (!(size_m > 0.0)) {
    throw std::invalid_argument("corner_points_tag_frame: size must be positive");
  }
  const double h = 0.5 * size_m;
  return {Vec4(-h, -h, 0.0, 1.0), Vec4(h, -h, 0.0, 1.0),
          Vec4(h, h, 0.0, 1.0), Vec4(-h, h, 0.0, 1.0)};
}

std::array<Vec4, 4> corner_points_world(const Tag& tag, const Pose& true_pose) {
  std::array<Vec4, 4> corners = corner_points_tag_frame(tag.size_m);
  for (Vec4& c : corners) c = true_pose * c;
  return corners;
}

TagMap perturb_map(const TagMap& map, const std::set<int>& perturbed_ids,
                   CounterRng& rng) {
  for (int id : perturbed_ids) {
    if (!map.contains(id)) {
      throw std::out_of_range("perturb_map: unknown tag id " + std::to_string(id));
    }
  }
  std::vector<Tag> tags = map.tags();
  for (Tag& tag : tags) {
    if (perturbed_ids.count(tag.id) > 0) {
      tag.nominal_pose = sample_perturbed(tag.nominal_pose, tag.sigma_tau, rng);
    }
  }
  return TagMap(std::move(tags));
}

}  // namespace tagloc
