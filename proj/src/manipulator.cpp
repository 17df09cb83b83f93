#include "se3kit/manipulator.hpp"

#include <cmath>

namespace se3kit {

Joint Joint::revolute(const Eigen::Vector3d& axis, const Eigen::Vector3d& point) {
  if (std::abs(axis.norm() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidInput, "revolute axis must be a unit vector");
  Joint j;
  j.type = JointType::Revolute;
  j.twist << -axis.cross(point), axis;
  return j;
}

Joint Joint::prismatic(const Eigen::Vector3d& direction) {
  if (std::abs(direction.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidInput, "prismatic direction must be a unit vector");
  }
  Joint j;
  j.type = JointType::Prismatic;
  j.twist << direction, Eigen::Vector3d::Zero();
  return j;
}

Matrix6d LinkInertia::spatial_inertia() const {
  Matrix6d m = Matrix6d::Zero();
  m.topLeftCorner<3, 3>() = mass * Eigen::Matrix3d::Identity();
  m.bottomRightCorner<3, 3>() = inertia;
  return m;
}

ManipulatorModel::ManipulatorModel(std::vector<Joint> joints, Posed home, std::vector<LinkInertia> links,
                                   Eigen::Vector3d gravity)
    : joints_(std::move(joints)), home_(std::move(home)), links_(std::move(links)), gravity_(gravity) {
  for (const auto& j : joints_) {
    const double w = j.twist.tail<3>().norm();
    const double v = j.twist.head<3>().norm();
    const bool ok = j.type == JointType::Revolute ? std::abs(w - 1.0) < 1e-9
                                                  : (w < 1e-12 && std::abs(v - 1.0) < 1e-9);
    if (!ok) throw Error(ErrorCode::InvalidInput, "joint twist violates the unit-axis convention");
  }
  if (!links_.empty() && links_.size() != joints_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one link inertia per joint is required");
  }
  for (const auto& link : links_) {
    if (link.mass < 0.0) throw Error(ErrorCode::InvalidInput, "link mass must be non-negative");
    if (link.armature < 0.0) throw Error(ErrorCode::InvalidInput, "armature must be non-negative");
    if ((link.inertia - link.inertia.transpose()).norm() > 1e-12) {
      throw Error(ErrorCode::InvalidInput, "link inertia must be symmetric");
    }
  }
}

ManipulatorModel ManipulatorModel::with_gravity(const Eigen::Vector3d& g) const {
  ManipulatorModel copy = *this;
  copy.gravity_ = g;
  return copy;
}

namespace {

void check_dof(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof()) throw Error(ErrorCode::DimensionMismatch, "joint vector length differs from joint count");
}

// prefix[i] = exp(xi_1 q_1) ... exp(xi_i q_i), prefix[0] = identity.
std::vector<Posed> exponential_prefixes(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  std::vector<Posed> prefix(static_cast<std::size_t>(model.dof() + 1));
  for (int i = 0; i < model.dof(); ++i) {
    prefix[static_cast<std::size_t>(i + 1)] =
        prefix[static_cast<std::size_t>(i)] * exp_se3<double>(model.joints()[static_cast<std::size_t>(i)].twist, q(i));
  }
  return prefix;
}

Matrix6Xd spatial_twists(const ManipulatorModel& model, const std::vector<Posed>& prefix) {
  Matrix6Xd js(6, model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    js.col(i) = adjoint_big(prefix[static_cast<std::size_t>(i)]) * model.joints()[static_cast<std::size_t>(i)].twist;
  }
  return js;
}

}  // namespace

Posed forward_kinematics(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  check_dof(model, q);
  return exponential_prefixes(model, q).back() * model.home();
}

Matrix6Xd spatial_jacobian(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  check_dof(model, q);
  return spatial_twists(model, exponential_prefixes(model, q));
}

Matrix6Xd body_jacobian(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  check_dof(model, q);
  const auto prefix = exponential_prefixes(model, q);
  const Posed g = prefix.back() * model.home();
  return adjoint_big(g.inverse()) * spatial_twists(model, prefix);
}

Matrix6Xd body_jacobian_rate(const ManipulatorModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  check_dof(model, qdot);
  const Matrix6Xd jb = body_jacobian(model, q);
  // Column j depends on q_k for k > j only: d col_j / d q_k = [col_j, col_k].
  Matrix6Xd rate = Matrix6Xd::Zero(6, model.dof());
  for (int j = 0; j < model.dof(); ++j) {
    const Matrix6d ad = adjoint_small<double>(Vector6d(jb.col(j)));
    for (int k = j + 1; k < model.dof(); ++k) rate.col(j) += ad * jb.col(k) * qdot(k);
  }
  return rate;
}

KinematicsSnapshot kinematics(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  check_dof(model, q);
  const auto prefix = exponential_prefixes(model, q);
  KinematicsSnapshot snap;
  snap.end_effector = prefix.back() * model.home();
  snap.spatial_twists = spatial_twists(model, prefix);
  if (!model.has_inertia()) return snap;
  const int n = model.dof();
  for (int i = 0; i < n; ++i) {
    const Posed frame =
        prefix[static_cast<std::size_t>(i + 1)] * Posed::translation(model.links()[static_cast<std::size_t>(i)].com);
    Matrix6Xd j = Matrix6Xd::Zero(6, n);
    j.leftCols(i + 1) = adjoint_big(frame.inverse()) * snap.spatial_twists.leftCols(i + 1);
    snap.link_frames.push_back(frame);
    snap.link_jacobians.push_back(std::move(j));
  }
  return snap;
}

// ---------------------------------------------------------------------------

ManipulatorModel make_pendulum(double mass, double length) {
  std::vector<Joint> joints{Joint::revolute(Eigen::Vector3d::UnitX(), Eigen::Vector3d::Zero())};
  LinkInertia link;
  link.mass = mass;
  link.com = Eigen::Vector3d(0.0, 0.0, -length);
  return ManipulatorModel(std::move(joints), Posed::translation(link.com), {link});
}

namespace {

Eigen::Matrix3d cylinder_inertia(double mass, double length, double radius, const Eigen::Vector3d& axis) {
  const double axial = 0.5 * mass * radius * radius;
  const double transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
  return transverse * Eigen::Matrix3d::Identity() + (axial - transverse) * axis * axis.transpose();
}

}  // namespace

ManipulatorModel make_planar_2link(double l1, double l2, double m1, double m2) {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ(), x = Eigen::Vector3d::UnitX();
  std::vector<Joint> joints{Joint::revolute(z, Eigen::Vector3d::Zero()), Joint::revolute(z, l1 * x)};
  std::vector<LinkInertia> links(2);
  links[0] = {m1, 0.5 * l1 * x, cylinder_inertia(m1, l1, 0.03, x)};
  links[1] = {m2, (l1 + 0.5 * l2) * x, cylinder_inertia(m2, l2, 0.03, x)};
  return ManipulatorModel(std::move(joints), Posed::translation((l1 + l2) * x), std::move(links));
}

ManipulatorModel make_elbow_6dof() {
  const double base = 0.35, upper = 0.40, fore = 0.35, tool = 0.10;
  const Eigen::Vector3d x = Eigen::Vector3d::UnitX(), y = Eigen::Vector3d::UnitY(), z = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d shoulder(0.0, 0.0, base), elbow(0.0, upper, base), wrist(0.0, upper + fore, base);
  std::vector<Joint> joints{
      Joint::revolute(z, Eigen::Vector3d::Zero()), Joint::revolute(-x, shoulder), Joint::revolute(-x, elbow),
      Joint::revolute(z, wrist),                   Joint::revolute(-x, wrist),    Joint::revolute(y, wrist),
  };
  std::vector<LinkInertia> links{
      {3.0, Eigen::Vector3d(0.0, 0.0, 0.5 * base), cylinder_inertia(3.0, base, 0.06, z)},
      {2.0, Eigen::Vector3d(0.0, 0.5 * upper, base), cylinder_inertia(2.0, upper, 0.05, y)},
      {1.5, Eigen::Vector3d(0.0, upper + 0.5 * fore, base), cylinder_inertia(1.5, fore, 0.04, y)},
      {1.0, wrist, cylinder_inertia(1.0, 0.10, 0.08, z)},
      {1.0, wrist + Eigen::Vector3d(0.0, 0.03, 0.0), cylinder_inertia(1.0, 0.10, 0.08, x)},
      // gripper payload, radius of gyration 0.1 m
      {2.0, wrist + Eigen::Vector3d(0.0, 0.5 * tool, 0.0), 0.02 * Eigen::Matrix3d::Identity()},
  };
  for (auto& link : links) link.armature = 0.1;
  return ManipulatorModel(std::move(joints), Posed::translation(wrist + tool * y), std::move(links));
}

Eigen::VectorXd elbow_nominal_configuration() {
  Eigen::VectorXd q(6);
  q << 0.2, 0.5, -1.3, 0.3, 0.8, -0.4;
  return q;
}

}  // namespace se3kit
