#include "tagloc/lie.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tagloc {

Rotation Rotation::from_matrix(const Mat3& c) {
  const double ortho = (c * c.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kOrthonormalityTol) {
    throw std::invalid_argument("Rotation::from_matrix: matrix is not orthonormal");
  }
  if (std::abs(c.determinant() - 1.0) > kOrthonormalityTol) {
    throw std::invalid_argument("Rotation::from_matrix: determinant is not +1");
  }
  return Rotation(c, Unchecked{});
}

Pose Pose::from_matrix(const Mat4& m) {
  const Eigen::RowVector4d bottom(0.0, 0.0, 0.0, 1.0);
  if ((m.row(3) - bottom).cwiseAbs().maxCoeff() > kOrthonormalityTol) {
    throw std::invalid_argument("Pose::from_matrix: bottom row is not (0 0 0 1)");
  }
  return Pose(Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>());
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_.matrix();
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  Rotation rinv = rotation_.inverse();
  return Pose(rinv, -(rinv * translation_));
}

Pose Pose::operator*(const Pose& o) const {
  return Pose(rotation_ * o.rotation_, rotation_ * o.translation_ + translation_);
}

Vec4 Pose::operator*(const Vec4& p) const {
  Vec4 out;
  out.head<3>() = rotation_.matrix() * p.head<3>() + translation_ * p(3);
  out(3) = p(3);
  return out;
}

Mat3 hat3(const Vec3& phi) {
  Mat3 m;
  m << 0.0, -phi.z(), phi.y(),
       phi.z(), 0.0, -phi.x(),
      -phi.y(), phi.x(), 0.0;
  return m;
}

Vec3 vee3(const Mat3& m) {
  if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("vee3: matrix is not antisymmetric");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Mat4 hat6(const Vec6& xi) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = hat3(xi.tail<3>());
  m.topRightCorner<3, 1>() = xi.head<3>();
  return m;
}

Vec6 vee6(const Mat4& m) {
  if (m.row(3).cwiseAbs().maxCoeff() > 1e-9) {
    throw std::invalid_argument("vee6: bottom row is not zero");
  }
  Vec6 xi;
  xi.head<3>() = m.topRightCorner<3, 1>();
  xi.tail<3>() = vee3(m.topLeftCorner<3, 3>());
  return xi;
}

Rotation exp_so3(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 w = hat3(phi);
  Mat3 c;
  if (t < kSmallAngle) {
    c = Mat3::Identity() + w + 0.5 * (w * w);
  } else {
    c = Mat3::Identity() + (std::sin(t) / t) * w +
        ((1.0 - std::cos(t)) / (t * t)) * (w * w);
  }
  return Rotation(c, Rotation::Unchecked{});
}

Vec3 log_so3(const Rotation& rot) {
  const Mat3& c = rot.matrix();
  // w = sin(theta) * axis
  Vec3 w(c(2, 1) - c(1, 2), c(0, 2) - c(2, 0), c(1, 0) - c(0, 1));
  w *= 0.5;
  const double s = w.norm();
  const double cth = std::clamp(0.5 * (c.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(s, cth);

  if (theta < kSmallAngle) return w;
  if (cth > -0.99) return (theta / s) * w;

  // Near a half-turn sin(theta) is tiny; recover the axis from the
  // well-conditioned symmetric part, a*a^T = (C_sym - cos(theta) I)/(1 - cos).
  const Mat3 aat = (0.5 * (c + c.transpose()) - cth * Mat3::Identity()) / (1.0 - cth);
  int j = 0;
  aat.diagonal().maxCoeff(&j);
  Vec3 a = aat.col(j);
  a.normalize();
  if (s > 1e-12) {
    if (a.dot(w) < 0.0) a = -a;
  } else {
    int k = 0;
    a.cwiseAbs().maxCoeff(&k);
    if (a(k) < 0.0) a = -a;
  }
  return theta * a;
}

Mat3 left_jacobian_so3(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 w = hat3(phi);
  if (t < kSmallAngle) {
    return Mat3::Identity() + 0.5 * w + (1.0 / 6.0) * (w * w);
  }
  const double t2 = t * t;
  return Mat3::Identity() + ((1.0 - std::cos(t)) / t2) * w +
         ((t - std::sin(t)) / (t2 * t)) * (w * w);
}

Mat3 left_jacobian_inv_so3(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 w = hat3(phi);
  if (t < kSmallAngle) {
    return Mat3::Identity() - 0.5 * w + (1.0 / 12.0) * (w * w);
  }
  const double half = 0.5 * t;
  // (1 - (t/2) cot(t/2)) / t^2, finite on (0, pi]
  const double coeff = (1.0 - half / std::tan(half)) / (t * t);
  return Mat3::Identity() - 0.5 * w + coeff * (w * w);
}

Pose exp_se3(const Vec6& xi) {
  const Vec3 rho = xi.head<3>();
  const Vec3 phi = xi.tail<3>();
  return Pose(exp_so3(phi), left_jacobian_so3(phi) * rho);
}

Vec6 log_se3(const Pose& t) {
  Vec6 xi;
  const Vec3 phi = log_so3(t.rotation());
  xi.tail<3>() = phi;
  xi.head<3>() = left_jacobian_inv_so3(phi) * t.translation();
  return xi;
}

Mat6 adjoint(const Pose& t) {
  const Mat3& c = t.rotation().matrix();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = c;
  ad.topRightCorner<3, 3>() = hat3(t.translation()) * c;
  ad.bottomRightCorner<3, 3>() = c;
  return ad;
}

Mat46 dot_op(const Vec4& p) {
  Mat46 m = Mat46::Zero();
  m.topLeftCorner<3, 3>() = p(3) * Mat3::Identity();
  m.topRightCorner<3, 3>() = -hat3(p.head<3>());
  return m;
}

bool is_valid_covariance(const Cov6& cov, double sym_tol, double eig_floor) {
  if (!cov.allFinite()) return false;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > sym_tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (cov + cov.transpose()),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= eig_floor;
}

Pose sample_perturbed(const Pose& mean, const Cov6& cov, CounterRng& rng) {
  if (!is_valid_covariance(cov)) {
    throw std::invalid_argument("sample_perturbed: covariance is not symmetric PSD");
  }
  Vec6 n;
  for (int i = 0; i < 6; ++i) n(i) = rng.normal();

  Vec6 eps;
  const bool diagonal = (cov - Cov6(cov.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
  if (diagonal) {
    // keeps masked axes exactly untouched for diagonal covariances
    eps = cov.diagonal().cwiseMax(0.0).cwiseSqrt().cwiseProduct(n);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (cov + cov.transpose()));
    const Vec6 scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    eps = es.eigenvectors() * scale.asDiagonal() * n;
  }
  return exp_se3(eps) * mean;
}

}  // namespace tagloc
