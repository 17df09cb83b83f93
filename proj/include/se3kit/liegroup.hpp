#pragma once

// SO(3)/SE(3) kinematics. Twists and wrenches use the (linear, angular)
// ordering: xi = [v; w], F = [f; tau].

#include <algorithm>
#include <cmath>
#include <numbers>

#include "se3kit/core.hpp"

namespace se3kit {

/// Rotations whose angle is within this distance of pi have no unique log.
inline constexpr double kAntipodalEpsilon = 1e-6;

namespace detail {
inline constexpr double kOrthoAccept = 1e-10;
inline constexpr double kOrthoReject = 1e-6;
inline constexpr double kSkewTol = 1e-9;
}  // namespace detail

template <typename Scalar>
Mat3<Scalar> hat3(const Vec3<Scalar>& w) {
  Mat3<Scalar> s;
  s << Scalar(0), -w.z(), w.y(),
       w.z(), Scalar(0), -w.x(),
       -w.y(), w.x(), Scalar(0);
  return s;
}

template <typename Scalar>
Vec3<Scalar> vee3(const Mat3<Scalar>& s) {
  if ((s + s.transpose()).norm() > Scalar(detail::kSkewTol)) {
    throw Error(ErrorCode::NotSkew, "vee3 argument is not skew-symmetric");
  }
  return Vec3<Scalar>(s(2, 1) - s(1, 2), s(0, 2) - s(2, 0), s(1, 0) - s(0, 1)) / Scalar(2);
}

/// An element of SO(3). Construction validates orthonormality and re-projects
/// small drift onto the group through the polar decomposition.
template <typename Scalar>
class Rotation {
 public:
  Rotation() : m_(Mat3<Scalar>::Identity()) {}

  explicit Rotation(const Mat3<Scalar>& m) : m_(project(m)) {}

  static Rotation identity() { return Rotation(); }

  /// Trusted construction for matrices produced by closed-form group operations.
  static Rotation from_orthonormal(const Mat3<Scalar>& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3<Scalar>& matrix() const { return m_; }

  Rotation inverse() const { return from_orthonormal(m_.transpose()); }

  Rotation operator*(const Rotation& other) const { return from_orthonormal(m_ * other.m_); }

  Vec3<Scalar> operator*(const Vec3<Scalar>& x) const { return m_ * x; }

 private:
  static Mat3<Scalar> project(const Mat3<Scalar>& m) {
    const Scalar drift = (m.transpose() * m - Mat3<Scalar>::Identity()).norm();
    if (!std::isfinite(static_cast<double>(drift)) || drift > Scalar(detail::kOrthoReject)) {
      throw Error(ErrorCode::NotOrthonormal, "matrix is too far from SO(3)");
    }
    if (m.determinant() <= Scalar(0)) {
      throw Error(ErrorCode::NotOrthonormal, "matrix has negative determinant");
    }
    if (drift <= Scalar(detail::kOrthoAccept)) return m;
    Eigen::JacobiSVD<Mat3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
  }

  Mat3<Scalar> m_;
};

/// Rigid transform g = (R, p), acting on points as x -> R x + p.
template <typename Scalar>
class Pose {
 public:
  Pose() : p_(Vec3<Scalar>::Zero()) {}
  Pose(const Rotation<Scalar>& r, const Vec3<Scalar>& p) : r_(r), p_(p) {}

  static Pose identity() { return Pose(); }
  static Pose translation(const Vec3<Scalar>& p) { return Pose(Rotation<Scalar>(), p); }

  static Pose from_matrix(const Mat4<Scalar>& h) {
    const Eigen::Matrix<Scalar, 1, 4> bottom(Scalar(0), Scalar(0), Scalar(0), Scalar(1));
    if ((h.row(3) - bottom).norm() > Scalar(detail::kOrthoAccept)) {
      throw Error(ErrorCode::InvalidInput, "homogeneous matrix must end in [0 0 0 1]");
    }
    return Pose(Rotation<Scalar>(Mat3<Scalar>(h.template topLeftCorner<3, 3>())),
                h.template topRightCorner<3, 1>());
  }

  const Rotation<Scalar>& rotation() const { return r_; }
  const Mat3<Scalar>& R() const { return r_.matrix(); }
  const Vec3<Scalar>& p() const { return p_; }

  Mat4<Scalar> matrix() const {
    Mat4<Scalar> h = Mat4<Scalar>::Identity();
    h.template topLeftCorner<3, 3>() = r_.matrix();
    h.template topRightCorner<3, 1>() = p_;
    return h;
  }

  Pose inverse() const {
    const Rotation<Scalar> rt = r_.inverse();
    return Pose(rt, -(rt.matrix() * p_));
  }

  Pose operator*(const Pose& other) const {
    return Pose(r_ * other.r_, r_.matrix() * other.p_ + p_);
  }

  Vec3<Scalar> operator*(const Vec3<Scalar>& x) const { return r_.matrix() * x + p_; }

 private:
  Rotation<Scalar> r_;
  Vec3<Scalar> p_;
};

enum class Frame { Body, Spatial };

template <typename Scalar>
struct Twist {
  Vec3<Scalar> v = Vec3<Scalar>::Zero();
  Vec3<Scalar> w = Vec3<Scalar>::Zero();
  Frame frame = Frame::Body;

  static Twist from_vector(const Vec6<Scalar>& xi, Frame frame = Frame::Body) {
    return Twist{xi.template head<3>(), xi.template tail<3>(), frame};
  }

  Vec6<Scalar> vector() const {
    Vec6<Scalar> xi;
    xi << v, w;
    return xi;
  }
};

template <typename Scalar>
struct Wrench {
  Vec3<Scalar> f = Vec3<Scalar>::Zero();
  Vec3<Scalar> tau = Vec3<Scalar>::Zero();
  Frame frame = Frame::Body;

  static Wrench from_vector(const Vec6<Scalar>& F, Frame frame = Frame::Body) {
    return Wrench{F.template head<3>(), F.template tail<3>(), frame};
  }

  Vec6<Scalar> vector() const {
    Vec6<Scalar> F;
    F << f, tau;
    return F;
  }
};

using Rotationd = Rotation<double>;
using Posed = Pose<double>;
using Twistd = Twist<double>;
using Wrenchd = Wrench<double>;

// ---------------------------------------------------------------------------
// se(3) <-> 4x4

template <typename Scalar>
Mat4<Scalar> hat6(const Vec6<Scalar>& xi) {
  Mat4<Scalar> m = Mat4<Scalar>::Zero();
  m.template topLeftCorner<3, 3>() = hat3<Scalar>(xi.template tail<3>());
  m.template topRightCorner<3, 1>() = xi.template head<3>();
  return m;
}

template <typename Scalar>
Mat4<Scalar> hat6(const Twist<Scalar>& xi) {
  return hat6<Scalar>(xi.vector());
}

template <typename Scalar>
Vec6<Scalar> vee6(const Mat4<Scalar>& m) {
  if (m.row(3).norm() > Scalar(detail::kSkewTol)) {
    throw Error(ErrorCode::NotSkew, "se(3) matrix must have a zero bottom row");
  }
  Vec6<Scalar> xi;
  xi << m.template topRightCorner<3, 1>(), vee3<Scalar>(m.template topLeftCorner<3, 3>());
  return xi;
}

// ---------------------------------------------------------------------------
// Exponential and logarithm

template <typename Scalar>
Rotation<Scalar> exp_so3(const Vec3<Scalar>& w) {
  using std::cos;
  using std::sin;
  const Scalar t2 = w.squaredNorm();
  const Scalar t = std::sqrt(t2);
  Scalar a, b;  // sin(t)/t and (1 - cos t)/t^2
  if (t < Scalar(1e-4)) {
    a = Scalar(1) - t2 / Scalar(6) + t2 * t2 / Scalar(120);
    b = Scalar(0.5) - t2 / Scalar(24) + t2 * t2 / Scalar(720);
  } else {
    a = sin(t) / t;
    b = (Scalar(1) - cos(t)) / t2;
  }
  const Mat3<Scalar> s = hat3<Scalar>(w);
  return Rotation<Scalar>::from_orthonormal(Mat3<Scalar>::Identity() + a * s + b * s * s);
}

/// Rotation angle in [0, pi].
template <typename Scalar>
Scalar rotation_angle(const Rotation<Scalar>& r) {
  const Scalar c = std::clamp((r.matrix().trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  // acos loses precision near 0 and pi; atan2 with the skew norm does not.
  const Mat3<Scalar>& m = r.matrix();
  const Scalar s = Vec3<Scalar>(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm() / Scalar(2);
  return std::atan2(s, c);
}

template <typename Scalar>
Vec3<Scalar> log_so3(const Rotation<Scalar>& r) {
  const Mat3<Scalar>& m = r.matrix();
  const Scalar theta = rotation_angle(r);
  const Vec3<Scalar> skew(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));  // 2 sin(t) axis
  if (std::numbers::pi_v<Scalar> - theta < Scalar(kAntipodalEpsilon)) {
    throw Error(ErrorCode::AntipodalSingularity, "rotation angle within epsilon of pi");
  }
  if (theta < Scalar(1e-4)) {
    const Scalar t2 = theta * theta;
    return skew * (Scalar(0.5) * (Scalar(1) + t2 / Scalar(6) + Scalar(7) * t2 * t2 / Scalar(360)));
  }
  if (theta < Scalar(2.5)) {
    return skew * (theta / (Scalar(2) * std::sin(theta)));
  }
  // Near pi the symmetric part (R + R^T)/2 = cos(t) I + (1 - cos t) a a^T
  // carries the axis; take the column with the largest diagonal pivot.
  const Scalar c = std::cos(theta);
  const Mat3<Scalar> aat = ((m + m.transpose()) / Scalar(2) - c * Mat3<Scalar>::Identity()) / (Scalar(1) - c);
  Eigen::Index k = 0;
  aat.diagonal().maxCoeff(&k);
  Vec3<Scalar> axis = aat.col(k) / std::sqrt(aat(k, k));
  axis.normalize();
  if (axis.dot(skew) < Scalar(0)) axis = -axis;
  return axis * theta;
}

namespace detail {
/// Left Jacobian of SO(3): V(phi) = I + (1 - cos t)/t^2 phi^ + (t - sin t)/t^3 phi^2.
template <typename Scalar>
Mat3<Scalar> so3_left_jacobian(const Vec3<Scalar>& phi) {
  const Scalar t2 = phi.squaredNorm();
  const Scalar t = std::sqrt(t2);
  Scalar b, c;
  if (t < Scalar(1e-4)) {
    b = Scalar(0.5) - t2 / Scalar(24);
    c = Scalar(1) / Scalar(6) - t2 / Scalar(120);
  } else {
    b = (Scalar(1) - std::cos(t)) / t2;
    c = (t - std::sin(t)) / (t2 * t);
  }
  const Mat3<Scalar> s = hat3<Scalar>(phi);
  return Mat3<Scalar>::Identity() + b * s + c * s * s;
}
}  // namespace detail

/// A^{-1}(psi), the inverse of the SO(3) left Jacobian, used to recover the
/// translational part of log(g).
template <typename Scalar>
Mat3<Scalar> inverse_left_jacobian(const Vec3<Scalar>& psi) {
  const Scalar t2 = psi.squaredNorm();
  const Scalar t = std::sqrt(t2);
  const Mat3<Scalar> s = hat3<Scalar>(psi);
  Scalar k;
  if (t < Scalar(1e-4)) {
    k = Scalar(1) / Scalar(12) + t2 / Scalar(720);
  } else {
    k = (Scalar(2) * std::sin(t) - t * (Scalar(1) + std::cos(t))) / (Scalar(2) * t2 * std::sin(t));
  }
  return Mat3<Scalar>::Identity() - Scalar(0.5) * s + k * s * s;
}

template <typename Scalar>
Pose<Scalar> exp_se3(const Twist<Scalar>& xi, Scalar theta = Scalar(1)) {
  const Vec3<Scalar> phi = xi.w * theta;
  const Vec3<Scalar> rho = xi.v * theta;
  return Pose<Scalar>(exp_so3<Scalar>(phi), detail::so3_left_jacobian<Scalar>(phi) * rho);
}

template <typename Scalar>
Pose<Scalar> exp_se3(const Vec6<Scalar>& xi, Scalar theta = Scalar(1)) {
  return exp_se3<Scalar>(Twist<Scalar>::from_vector(xi), theta);
}

/// log(g) as a twist with unit parameter: exp_se3(log_se3(g), 1) == g.
template <typename Scalar>
Twist<Scalar> log_se3(const Pose<Scalar>& g) {
  const Vec3<Scalar> psi = log_so3(g.rotation());
  return Twist<Scalar>{inverse_left_jacobian<Scalar>(psi) * g.p(), psi, Frame::Body};
}

// ---------------------------------------------------------------------------
// Adjoint machinery

template <typename Scalar>
Mat6<Scalar> adjoint_big(const Pose<Scalar>& g) {
  Mat6<Scalar> ad = Mat6<Scalar>::Zero();
  ad.template topLeftCorner<3, 3>() = g.R();
  ad.template topRightCorner<3, 3>() = hat3<Scalar>(g.p()) * g.R();
  ad.template bottomRightCorner<3, 3>() = g.R();
  return ad;
}

/// ad_xi, so that ad_xi eta = [xi^, eta^]^v.
template <typename Scalar>
Mat6<Scalar> adjoint_small(const Vec6<Scalar>& xi) {
  Mat6<Scalar> ad = Mat6<Scalar>::Zero();
  const Mat3<Scalar> w = hat3<Scalar>(xi.template tail<3>());
  ad.template topLeftCorner<3, 3>() = w;
  ad.template topRightCorner<3, 3>() = hat3<Scalar>(xi.template head<3>());
  ad.template bottomRightCorner<3, 3>() = w;
  return ad;
}

template <typename Scalar>
Mat6<Scalar> adjoint_small(const Twist<Scalar>& xi) {
  return adjoint_small<Scalar>(xi.vector());
}

template <typename Scalar>
Vec6<Scalar> lie_bracket(const Vec6<Scalar>& a, const Vec6<Scalar>& b) {
  return adjoint_small<Scalar>(a) * b;
}

// ---------------------------------------------------------------------------
// Velocities and wrenches

namespace detail {
template <typename Scalar>
Vec6<Scalar> velocity_from(const Mat4<Scalar>& vhat, Scalar scale) {
  const Mat3<Scalar> w = vhat.template topLeftCorner<3, 3>();
  const Scalar tol = Scalar(1e-9) * (Scalar(1) + scale);
  if ((w + w.transpose()).norm() > tol || vhat.row(3).norm() > tol) {
    throw Error(ErrorCode::InconsistentDerivative, "gdot is not tangent to SE(3) at g");
  }
  Vec6<Scalar> xi;
  xi << vhat.template topRightCorner<3, 1>(),
        Vec3<Scalar>(w(2, 1) - w(1, 2), w(0, 2) - w(2, 0), w(1, 0) - w(0, 1)) / Scalar(2);
  return xi;
}
}  // namespace detail

/// V^b from g^{-1} gdot.
template <typename Scalar>
Twist<Scalar> body_velocity(const Pose<Scalar>& g, const Mat4<Scalar>& gdot) {
  const Mat4<Scalar> vhat = g.inverse().matrix() * gdot;
  return Twist<Scalar>::from_vector(detail::velocity_from<Scalar>(vhat, gdot.norm()), Frame::Body);
}

/// V^s from gdot g^{-1}.
template <typename Scalar>
Twist<Scalar> spatial_velocity(const Pose<Scalar>& g, const Mat4<Scalar>& gdot) {
  const Mat4<Scalar> vhat = gdot * g.inverse().matrix();
  return Twist<Scalar>::from_vector(detail::velocity_from<Scalar>(vhat, gdot.norm()), Frame::Spatial);
}

/// Power pairing <V, F> = v.f + w.tau; both must be expressed in the same frame.
template <typename Scalar>
Scalar pairing(const Twist<Scalar>& V, const Wrench<Scalar>& F) {
  if (V.frame != F.frame) throw Error(ErrorCode::FrameMismatch, "twist and wrench frames differ");
  return V.v.dot(F.f) + V.w.dot(F.tau);
}

/// F_c = Ad_{g_bc}^T F_b. The wrench must be tagged with `from`; the result is
/// tagged with `to`.
template <typename Scalar>
Wrench<Scalar> transform_wrench(const Wrench<Scalar>& F, const Pose<Scalar>& g_bc, Frame from, Frame to) {
  if (F.frame != from) throw Error(ErrorCode::FrameMismatch, "wrench is not expressed in the source frame");
  return Wrench<Scalar>::from_vector(adjoint_big(g_bc).transpose() * F.vector(), to);
}

// ---------------------------------------------------------------------------
// Sampling helpers for property tests. Rotations come from Gram-Schmidt on
// Gaussian triples, which is Haar-uniform.

template <typename Scalar = double>
Rotation<Scalar> random_rotation(Rng& rng) {
  Mat3<Scalar> a;
  for (int i = 0; i < 9; ++i) a(i) = Scalar(gaussian(rng));
  Vec3<Scalar> c0 = a.col(0).normalized();
  Vec3<Scalar> c1 = (a.col(1) - c0.dot(a.col(1)) * c0).normalized();
  Vec3<Scalar> c2 = c0.cross(c1);
  Mat3<Scalar> m;
  m << c0, c1, c2;
  return Rotation<Scalar>::from_orthonormal(m);
}

template <typename Scalar = double>
Pose<Scalar> random_pose(Rng& rng, Scalar translation_scale = Scalar(1)) {
  Rotation<Scalar> r = random_rotation<Scalar>(rng);
  Vec3<Scalar> p;
  for (int i = 0; i < 3; ++i) p(i) = Scalar(gaussian(rng)) * translation_scale;
  return Pose<Scalar>(r, p);
}

template <typename Scalar = double>
Vec6<Scalar> random_twist(Rng& rng, Scalar scale = Scalar(1)) {
  Vec6<Scalar> xi;
  for (int i = 0; i < 6; ++i) xi(i) = Scalar(gaussian(rng)) * scale;
  return xi;
}

/// Random rotation with angle drawn uniformly from [0, max_angle].
template <typename Scalar = double>
Rotation<Scalar> random_rotation_within(Rng& rng, Scalar max_angle) {
  Vec3<Scalar> axis;
  for (int i = 0; i < 3; ++i) axis(i) = Scalar(gaussian(rng));
  axis.normalize();
  return exp_so3<Scalar>(axis * Scalar(uniform(rng, 0.0, static_cast<double>(max_angle))));
}

}  // namespace se3kit
