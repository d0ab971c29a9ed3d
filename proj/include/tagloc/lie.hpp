#pragma once

#include <Eigen/Dense>

#include "tagloc/rng.hpp"

namespace tagloc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat46 = Eigen::Matrix<double, 4, 6>;

// Twist-space covariance; same component ordering as a twist.
using Cov6 = Mat6;

// Conventions used throughout:
//  - twists are ordered [rho; phi]: translation first (m), rotation second (rad);
//  - uncertain poses use a left perturbation, T = exp_se3(eps) * mean;
//  - all 6x6 covariances live in that left-perturbation twist space.

inline constexpr double kOrthonormalityTol = 1e-9;
inline constexpr double kSmallAngle = 1e-8;

// 3x3 orthonormal matrix with determinant +1.
class Rotation {
 public:
  Rotation() : c_(Mat3::Identity()) {}
  static Rotation identity() { return Rotation(); }
  // Validates orthonormality and the determinant within kOrthonormalityTol.
  static Rotation from_matrix(const Mat3& c);

  const Mat3& matrix() const { return c_; }
  Rotation inverse() const { return Rotation(c_.transpose(), Unchecked{}); }
  Rotation operator*(const Rotation& o) const { return Rotation(c_ * o.c_, Unchecked{}); }
  Vec3 operator*(const Vec3& v) const { return c_ * v; }

 private:
  struct Unchecked {};
  Rotation(const Mat3& c, Unchecked) : c_(c) {}
  friend Rotation exp_so3(const Vec3&);
  friend class Pose;
  Mat3 c_;
};

// Rigid-body transform, the 4x4 block matrix [C r; 0 1].
class Pose {
 public:
  Pose() = default;
  Pose(const Rotation& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}
  static Pose identity() { return Pose(); }
  // Validates the rotation block and the (0 0 0 1) bottom row.
  static Pose from_matrix(const Mat4& m);

  const Rotation& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  Mat4 matrix() const;

  Pose inverse() const;
  Pose operator*(const Pose& o) const;
  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec4 operator*(const Vec4& p) const;

 private:
  Rotation rotation_;
  Vec3 translation_ = Vec3::Zero();
};

struct UncertainPose {
  Pose mean;
  Cov6 cov = Cov6::Zero();
};

Mat3 hat3(const Vec3& phi);
// Inverse of hat3; rejects matrices that are not antisymmetric within 1e-9.
Vec3 vee3(const Mat3& m);

Mat4 hat6(const Vec6& xi);
// Inverse of hat6; rejects matrices without the se(3) block structure.
Vec6 vee6(const Mat4& m);

Rotation exp_so3(const Vec3& phi);
// Rotation vector with norm <= pi. At a half-turn the axis sign is fixed by
// making the largest-magnitude component positive.
Vec3 log_so3(const Rotation& c);

Mat3 left_jacobian_so3(const Vec3& phi);
Mat3 left_jacobian_inv_so3(const Vec3& phi);

Pose exp_se3(const Vec6& xi);
Vec6 log_se3(const Pose& t);

// 6x6 block matrix [[C, hat3(r)*C], [0, C]].
Mat6 adjoint(const Pose& t);

// 4x6 operator satisfying hat6(xi) * p == dot_op(p) * xi for homogeneous p.
Mat46 dot_op(const Vec4& p);

bool is_valid_covariance(const Cov6& cov, double sym_tol = 1e-9,
                         double eig_floor = -1e-10);

// Draws eps ~ N(0, cov) and returns exp_se3(eps) * mean. The covariance is
// factorized by eigendecomposition with negative eigenvalues clamped at zero,
// so rank-deficient covariances are accepted. Always consumes exactly six
// normal draws (12 u64) so paired streams stay aligned, even for cov = 0.
Pose sample_perturbed(const Pose& mean, const Cov6& cov, CounterRng& rng);

}  // namespace tagloc
