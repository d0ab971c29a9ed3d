#include "tagloc/estimator.hpp"

#include <stdexcept>
#include <string>

namespace tagloc {

const char* to_string(FilterMode mode) {
  return mode == FilterMode::kEkf ? "EKF" : "TIE-EKF";
}

FilterState predict(const FilterState& state, const MotionInput& input) {
  const Pose step = exp_se3(input.xi_rel);
  const Mat6 f = adjoint(step);
  FilterState out;
  out.pose = step * state.pose;
  out.cov = f * state.cov * f.transpose() + input.process_noise;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

Vec3 predict_corner_camframe(const Pose& state_pose, const ExtrinsicCalib& calib,
                             const Pose& tag_nominal, const Vec4& corner) {
  return (calib.t_cv * (state_pose * (tag_nominal * corner))).head<3>();
}

Eigen::Matrix<double, 3, 6> state_jacobian_z(const Pose& state_pose,
                                             const ExtrinsicCalib& calib,
                                             const Pose& tag_nominal,
                                             const Vec4& corner) {
  const Vec4 p = state_pose * (tag_nominal * corner);
  return (calib.t_cv.matrix() * dot_op(p)).topRows<3>();
}

Eigen::Matrix<double, 3, 6> tag_jacobian_e(const Pose& state_pose,
                                           const ExtrinsicCalib& calib,
                                           const Pose& tag_nominal,
                                           const Vec4& corner) {
  const Vec4 q = tag_nominal * corner;
  return ((calib.t_cv * state_pose).matrix() * dot_op(q)).topRows<3>();
}

Eigen::MatrixXd augmented_noise_block(
    const std::vector<Eigen::Matrix<double, 2, 3>>& s_list,
    const std::vector<Eigen::Matrix<double, 3, 6>>& e_list,
    const Cov6& sigma_tau, double pixel_sigma, bool per_corner_independent) {
  if (s_list.empty() || s_list.size() != e_list.size()) {
    throw std::invalid_argument("augmented_noise_block: mismatched corner lists");
  }
  const int n = static_cast<int>(s_list.size());
  Eigen::MatrixXd h(2 * n, 6);
  for (int i = 0; i < n; ++i) {
    h.block<2, 6>(2 * i, 0) = s_list[i] * e_list[i];
  }
  Eigen::MatrixXd r = h * sigma_tau * h.transpose();
  if (per_corner_independent) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) r.block<2, 2>(2 * i, 2 * j).setZero();
      }
    }
  }
  r += pixel_sigma * pixel_sigma * Eigen::MatrixXd::Identity(2 * n, 2 * n);
  return r;
}

FilterState correct(const FilterState& predicted,
                    const std::vector<TagObservation>& observations,
                    const TagMap& map, const ExtrinsicCalib& calib,
                    const Intrinsics& intr, FilterMode mode,
                    const EstimatorConfig& cfg) {
  struct TagBlock {
    Eigen::MatrixXd g;          // 2k x 6
    Eigen::VectorXd innovation; // 2k
    Eigen::MatrixXd r;          // 2k x 2k
  };
  std::vector<TagBlock> blocks;
  int rows = 0;

  for (const TagObservation& obs : observations) {
    const Tag& tag = map.by_id(obs.tag_id);
    if (!(obs.pixel_sigma > 0.0)) {
      throw std::invalid_argument("correct: pixel_sigma must be positive");
    }
    const std::array<Vec4, 4> corners = corner_points_tag_frame(tag.size_m);

    std::vector<Eigen::Matrix<double, 2, 3>> s_list;
    std::vector<Eigen::Matrix<double, 3, 6>> e_list;
    std::vector<Eigen::Matrix<double, 2, 6>> g_rows;
    std::vector<Eigen::Vector2d> innov_rows;

    for (int n = 0; n < 4; ++n) {
      const Vec3 z = predict_corner_camframe(predicted.pose, calib,
                                             tag.nominal_pose, corners[n]);
      if (!(z.z() > cfg.z_min)) continue;  // behind the camera
      const PixelPoint px = project(z, intr, cfg.z_min);
      if (px.u < 0.0 || px.u > intr.width || px.v < 0.0 || px.v > intr.height) {
        continue;  // predicted outside the image
      }
      const Eigen::Matrix<double, 2, 3> s = projection_jacobian(z, intr, cfg.z_min);
      const Eigen::Matrix<double, 3, 6> zjac =
          state_jacobian_z(predicted.pose, calib, tag.nominal_pose, corners[n]);
      s_list.push_back(s);
      e_list.push_back(tag_jacobian_e(predicted.pose, calib, tag.nominal_pose, corners[n]));
      g_rows.push_back(s * zjac);
      innov_rows.emplace_back(obs.corners[n].u - px.u, obs.corners[n].v - px.v);
    }
    if (g_rows.empty()) continue;

    const int k = static_cast<int>(g_rows.size());
    TagBlock block;
    block.g.resize(2 * k, 6);
    block.innovation.resize(2 * k);
    for (int i = 0; i < k; ++i) {
      block.g.block<2, 6>(2 * i, 0) = g_rows[i];
      block.innovation.segment<2>(2 * i) = innov_rows[i];
    }
    if (mode == FilterMode::kTieEkf) {
      block.r = augmented_noise_block(s_list, e_list, tag.sigma_tau,
                                      obs.pixel_sigma, cfg.per_corner_independent);
    } else {
      block.r = obs.pixel_sigma * obs.pixel_sigma *
                Eigen::MatrixXd::Identity(2 * k, 2 * k);
    }
    rows += 2 * k;
    blocks.push_back(std::move(block));
  }

  if (rows == 0) return predicted;

  Eigen::MatrixXd g(rows, 6);
  Eigen::VectorXd innovation(rows);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(rows, rows);
  int at = 0;
  for (const TagBlock& block : blocks) {
    const int k = static_cast<int>(block.g.rows());
    g.middleRows(at, k) = block.g;
    innovation.segment(at, k) = block.innovation;
    r.block(at, at, k, k) = block.r;
    at += k;
  }
  if (!g.allFinite() || !innovation.allFinite()) {
    throw std::runtime_error("correct: non-finite measurement linearization");
  }

  Eigen::MatrixXd w = g * predicted.cov * g.transpose() + r;
  w = 0.5 * (w + w.transpose()).eval();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(w);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("correct: innovation covariance factorization failed (" +
                             std::to_string(rows) + " rows)");
  }
  // K = P G^T W^-1, assembled from the transposed solve.
  const Eigen::MatrixXd kt = ldlt.solve(g * predicted.cov);
  const Vec6 delta = kt.transpose() * innovation;
  if (!delta.allFinite()) {
    throw std::runtime_error("correct: non-finite state correction");
  }

  FilterState out;
  out.pose = exp_se3(delta) * predicted.pose;
  out.cov = (Mat6::Identity() - kt.transpose() * g) * predicted.cov;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace tagloc
