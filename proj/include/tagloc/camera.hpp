#pragma once

#include <array>

#include <Eigen/Dense>

#include "tagloc/lie.hpp"

namespace tagloc {

inline constexpr double kDefaultZMin = 1e-6;  // m
inline constexpr double kDefaultVisibilityMarginPx = 2.0;

struct Intrinsics {
  double fx = 500.0, fy = 500.0;  // focal lengths, px
  double cx = 320.0, cy = 240.0;  // principal point, px
  int width = 640, height = 480;

  Mat3 k_matrix() const;
  void validate() const;  // throws std::invalid_argument
  static Intrinsics default_sim() { return Intrinsics{}; }
};

struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

// Ideal pinhole projection, no lens distortion. Throws std::domain_error when
// the point is not safely in front of the camera (Z <= z_min).
PixelPoint project(const Vec3& p_cam, const Intrinsics& intr,
                   double z_min = kDefaultZMin);

// d(pixel)/d(camera-frame point). Same domain restriction as project().
Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p_cam,
                                                const Intrinsics& intr,
                                                double z_min = kDefaultZMin);

// True iff every depth exceeds z_min and every pixel lies inside
// [margin, width - margin] x [margin, height - margin] (inclusive).
bool corners_visible(const std::array<PixelPoint, 4>& pixels,
                     const std::array<double, 4>& depths,
                     const Intrinsics& intr, double margin_px,
                     double z_min = kDefaultZMin);

}  // namespace tagloc
