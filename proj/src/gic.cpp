#include "se3kit/gic.hpp"

namespace se3kit {

namespace {

bool spd(const Eigen::MatrixXd& k) {
  if ((k - k.transpose()).norm() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  return eig.eigenvalues().minCoeff() > 0.0;
}

// (A - A^T)^v
Eigen::Vector3d skew_part_vee(const Eigen::Matrix3d& a) {
  return Eigen::Vector3d(a(2, 1) - a(1, 2), a(0, 2) - a(2, 0), a(1, 0) - a(0, 1));
}

}  // namespace

void GicGains::validate() const {
  if (!spd(Kp) || !spd(KR) || !spd(Kxi) || !spd(Kd)) {
    throw Error(ErrorCode::InvalidInput, "impedance gains must be symmetric positive definite");
  }
}

Posed config_error(const Posed& g, const Posed& g_d) { return g_d.inverse() * g; }

double psi1(const Posed& g, const Posed& g_d) {
  const Eigen::Matrix3d rde = g_d.R().transpose() * g.R();
  return (Eigen::Matrix3d::Identity() - rde).trace() + 0.5 * (g.p() - g_d.p()).squaredNorm();
}

double psi1_frobenius(const Posed& g, const Posed& g_d) {
  const Eigen::Matrix4d x = Eigen::Matrix4d::Identity() - g_d.inverse().matrix() * g.matrix();
  return 0.5 * x.squaredNorm();
}

double psi2(const Posed& g, const Posed& g_d) { return 0.5 * xi_de(g, g_d).squaredNorm(); }

Vector6d gcev(const Posed& g, const Posed& g_d) {
  const Eigen::Matrix3d& r = g.R();
  const Eigen::Matrix3d& rd = g_d.R();
  Vector6d e;
  e << r.transpose() * (g.p() - g_d.p()), skew_part_vee(rd.transpose() * r);
  return e;
}

Vector6d xi_de(const Posed& g, const Posed& g_d) { return log_se3(config_error(g, g_d)).vector(); }

Vector6d transported_desired_velocity(const TaskState& s) {
  const Posed g_ed = s.g.inverse() * s.g_d;
  return adjoint_big(g_ed) * s.Vb_d.vector();
}

Vector6d velocity_error(const TaskState& s) { return s.Vb.vector() - transported_desired_velocity(s); }

Vector6d transported_desired_acceleration(const TaskState& s) {
  const Posed g_ed = s.g.inverse() * s.g_d;
  const Vector6d v_star = adjoint_big(g_ed) * s.Vb_d.vector();
  const Vector6d e_v = s.Vb.vector() - v_star;
  return adjoint_big(g_ed) * s.Vdot_d - adjoint_small<double>(e_v) * v_star;
}

double potential_p1(const Posed& g, const Posed& g_d, const GicGains& gains) {
  const Eigen::Matrix3d rde = g_d.R().transpose() * g.R();
  const Eigen::Vector3d dp = g.p() - g_d.p();
  return (gains.KR * (Eigen::Matrix3d::Identity() - rde)).trace() +
         0.5 * dp.dot(g_d.R() * gains.Kp * g_d.R().transpose() * dp);
}

double potential_p2(const Posed& g, const Posed& g_d, const GicGains& gains) {
  const Vector6d xi = xi_de(g, g_d);
  return 0.5 * xi.dot(gains.Kxi * xi);
}

double potential(GicVariant variant, const Posed& g, const Posed& g_d, const GicGains& gains) {
  return variant == GicVariant::LieGroup ? potential_p1(g, g_d, gains) : potential_p2(g, g_d, gains);
}

Vector6d elastic_force_1(const Posed& g, const Posed& g_d, const GicGains& gains) {
  const Eigen::Matrix3d& r = g.R();
  const Eigen::Matrix3d& rd = g_d.R();
  Vector6d f;
  f << r.transpose() * rd * gains.Kp * rd.transpose() * (g.p() - g_d.p()),
      skew_part_vee(gains.KR * rd.transpose() * r);
  return f;
}

Vector6d elastic_force_2(const Posed& g, const Posed& g_d, const GicGains& gains) {
  return gains.Kxi * xi_de(g, g_d);
}

Vector6d elastic_force(GicVariant variant, const Posed& g, const Posed& g_d, const GicGains& gains) {
  return variant == GicVariant::LieGroup ? elastic_force_1(g, g_d, gains) : elastic_force_2(g, g_d, gains);
}

double kinetic_energy(const Vector6d& e_v, const Matrix6d& Mt) { return 0.5 * e_v.dot(Mt * e_v); }

Vector6d feedback_wrench(const TaskState& s, const GicGains& gains, GicVariant variant) {
  return -elastic_force(variant, s.g, s.g_d, gains) - gains.Kd * velocity_error(s);
}

Vector6d gic_control(const TaskState& s, const GicGains& gains, const TaskDynamics& plant, GicVariant variant) {
  const Vector6d v_star = transported_desired_velocity(s);
  return plant.Mt * transported_desired_acceleration(s) + plant.Ct * v_star + plant.Gt +
         feedback_wrench(s, gains, variant);
}

Vector6d gcev_right(const Posed& g, const Posed& g_d) {
  const Eigen::Matrix3d a = g.R() * g_d.R().transpose();
  Vector6d e;
  e << g.p() - a * g_d.p(), skew_part_vee(a);
  return e;
}

}  // namespace se3kit
