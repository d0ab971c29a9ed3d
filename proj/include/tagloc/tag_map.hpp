#pragma once

#include <array>
#include <set>
#include <vector>

#include "tagloc/lie.hpp"
#include "tagloc/rng.hpp"

namespace tagloc {

// Installation-error model for one tag: per-axis standard deviations plus a
// mask selecting which of the six twist components [x y z rx ry rz] may move.
struct PerturbationSpec {
  Vec3 sigma_translation = Vec3::Zero();  // m
  Vec3 sigma_rotation = Vec3::Zero();     // rad
  std::array<bool, 6> axis_mask{true, true, true, true, true, true};

  // Wall-mounted tag on the inertial XZ plane: slide in x/z plus a spin about
  // the wall normal (y).
  static PerturbationSpec in_plane(double sigma_x_m, double sigma_z_m,
                                   double sigma_theta_y_rad);
  static PerturbationSpec isotropic(double sigma_trans_m, double sigma_rot_rad);
  static PerturbationSpec none() { return PerturbationSpec{}; }
};

// Diagonal twist covariance built from `spec`; masked components are exactly zero.
Cov6 build_sigma(const PerturbationSpec& spec);

struct Tag {
  int id = 0;
  double size_m = 0.165;          // edge length of the black square
  Pose nominal_pose;              // tag frame -> inertial frame
  Cov6 sigma_tau = Cov6::Zero();  // installation-error covariance
};

class TagMap {
 public:
  explicit TagMap(std::vector<Tag> tags);  // non-empty, unique ids

  const std::vector<Tag>& tags() const { return tags_; }
  const Tag& by_id(int id) const;  // throws std::out_of_range
  bool contains(int id) const;
  std::size_t size() const { return tags_.size(); }

 private:
  std::vector<Tag> tags_;
};

// Corners in the tag's XY plane, counterclockwise from bottom-left:
// (-s/2,-s/2), (s/2,-s/2), (s/2,s/2), (-s/2,s/2); homogeneous with z = 0.
std::array<Vec4, 4> corner_points_tag_frame(double size_m);

std::array<Vec4, 4> corner_points_world(const Tag& tag, const Pose& true_pose);

// Resamples the pose of each listed tag as exp(eps) * nominal with
// eps ~ N(0, sigma_tau); unlisted tags pass through untouched. Tags are
// processed in map order so the draw sequence is deterministic. Throws on
// ids not present in the map.
TagMap perturb_map(const TagMap& map, const std::set<int>& perturbed_ids,
                   CounterRng& rng);

}  // namespace tagloc
