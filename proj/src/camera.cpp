#include "tagloc/camera.hpp"

#include <stdexcept>
#include <string>

namespace tagloc {

Mat3 Intrinsics::k_matrix() const {
  Mat3 k;
  k << fx, 0.0, cx,
       0.0, fy, cy,
       0.0, 0.0, 1.0;
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw std::invalid_argument("Intrinsics: focal lengths must be positive");
  }
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw std::invalid_argument("Intrinsics: principal point must lie inside the image");
  }
}

PixelPoint project(const Vec3& p_cam, const Intrinsics& intr, double z_min) {
  const double z = p_cam.z();
  if (!(z > z_min)) {
    throw std::domain_error("project: point behind camera (Z = " + std::to_string(z) + ")");
  }
  return PixelPoint{intr.fx * p_cam.x() / z + intr.cx,
                    intr.fy * p_cam.y() / z + intr.cy};
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const Vec3& p_cam,
                                                const Intrinsics& intr,
                                                double z_min) {
  const double z = p_cam.z();
  if (!(z > z_min)) {
    throw std::domain_error("projection_jacobian: point behind camera");
  }
  Mat3 s;
  s << 1.0 / z, 0.0, -p_cam.x() / (z * z),
       0.0, 1.0 / z, -p_cam.y() / (z * z),
       0.0, 0.0, 0.0;
  return (intr.k_matrix() * s).topRows<2>();
}

bool corners_visible(const std::array<PixelPoint, 4>& pixels,
                     const std::array<double, 4>& depths,
                     const Intrinsics& intr, double margin_px, double z_min) {
  for (int i = 0; i < 4; ++i) {
    if (!(depths[i] > z_min)) return false;
    const auto& px = pixels[i];
    if (px.u < margin_px || px.u > intr.width - margin_px) return false;
    if (px.v < margin_px || px.v > intr.height - margin_px) return false;
  }
  return true;
}

}  // namespace tagloc
