#pragma once

#include <vector>

#include "tagloc/camera.hpp"
#include "tagloc/lie.hpp"
#include "tagloc/tag_map.hpp"

namespace tagloc {

enum class FilterMode { kEkf, kTieEkf };
const char* to_string(FilterMode mode);  // "EKF" / "TIE-EKF"

// The state pose maps inertial -> vehicle; the covariance is over the left
// perturbation delta_xi with T = exp_se3(delta_xi) * mean.
struct FilterState {
  Pose pose;
  Cov6 cov = Cov6::Zero();
};

struct MotionInput {
  // Body-frame step, log of T_{v_k v_{k-1}}.
  Vec6 xi_rel = Vec6::Zero();
  Cov6 process_noise = Cov6::Zero();
};

struct TagObservation {
  int tag_id = 0;
  std::array<PixelPoint, 4> corners{};  // fixed corner order
  double pixel_sigma = 1.0;             // px, must be > 0
};

// Vehicle -> camera transform from calibration.
struct ExtrinsicCalib {
  Pose t_cv;
};

struct EstimatorConfig {
  double z_min = kDefaultZMin;
  // Drop the cross-corner correlation induced by the shared tag perturbation,
  // keeping only per-corner 2x2 blocks in the augmented noise.
  bool per_corner_independent = false;
};

FilterState predict(const FilterState& state, const MotionInput& input);

// Camera-frame coordinates of one tag corner, the chain T_cv T_vi T_itau P
// truncated to its first three components.
Vec3 predict_corner_camframe(const Pose& state_pose, const ExtrinsicCalib& calib,
                             const Pose& tag_nominal, const Vec4& corner);

// d(camera point)/d(state left perturbation), 3x6.
Eigen::Matrix<double, 3, 6> state_jacobian_z(const Pose& state_pose,
                                             const ExtrinsicCalib& calib,
                                             const Pose& tag_nominal,
                                             const Vec4& corner);

// d(camera point)/d(tag-pose left perturbation), 3x6.
Eigen::Matrix<double, 3, 6> tag_jacobian_e(const Pose& state_pose,
                                           const ExtrinsicCalib& calib,
                                           const Pose& tag_nominal,
                                           const Vec4& corner);

// Measurement noise for the stacked corners of one tag: with H stacking the
// per-corner 2x6 products S_n * E_n, returns H * sigma_tau * H^T +
// pixel_sigma^2 * I. The shared tag perturbation correlates corners within
// the block unless per_corner_independent.
Eigen::MatrixXd augmented_noise_block(
    const std::vector<Eigen::Matrix<double, 2, 3>>& s_list,
    const std::vector<Eigen::Matrix<double, 3, 6>>& e_list,
    const Cov6& sigma_tau, double pixel_sigma,
    bool per_corner_independent = false);

// One multiplicative EKF correction. Stacks two rows per corner across all
// observed tags; corners whose prediction falls behind the camera or outside
// the image are dropped. The noise is block-diagonal across tags, with blocks
// from augmented_noise_block in TIE-EKF mode and pixel_sigma^2 * I in EKF
// mode. An empty observation list returns the predicted state unchanged.
FilterState correct(const FilterState& predicted,
                    const std::vector<TagObservation>& observations,
                    const TagMap& map, const ExtrinsicCalib& calib,
                    const Intrinsics& intr, FilterMode mode,
                    const EstimatorConfig& cfg = EstimatorConfig{});

}  // namespace tagloc
