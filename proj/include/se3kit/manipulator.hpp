#pragma once

// Serial manipulators described by the product of exponentials
//   g(q) = exp(xi_1 q_1) ... exp(xi_n q_n) g(0)
// with spatial-frame joint twists.

#include <string>
#include <vector>

#include "se3kit/liegroup.hpp"

namespace se3kit {

using Matrix6Xd = Eigen::Matrix<double, 6, Eigen::Dynamic>;

enum class JointType { Revolute, Prismatic };

struct Joint {
  JointType type = JointType::Revolute;
  Vector6d twist = Vector6d::Zero();  // spatial frame, (v, w)

  static Joint revolute(const Eigen::Vector3d& axis, const Eigen::Vector3d& point);
  static Joint prismatic(const Eigen::Vector3d& direction);
};

/// Inertial data of the link driven by the joint with the same index. The
/// centre of mass and the inertia about it are given at q = 0 in base axes.
struct LinkInertia {
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
  double armature = 0.0;  // rotor inertia reflected to the joint, added to M(i, i)

  /// diag(m I, I_c) in the (v, w) ordering.
  Matrix6d spatial_inertia() const;
};

class ManipulatorModel {
 public:
  ManipulatorModel() = default;
  ManipulatorModel(std::vector<Joint> joints, Posed home, std::vector<LinkInertia> links = {},
                   Eigen::Vector3d gravity = Eigen::Vector3d(0.0, 0.0, -9.81));

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<Joint>& joints() const { return joints_; }
  const Posed& home() const { return home_; }
  const std::vector<LinkInertia>& links() const { return links_; }
  bool has_inertia() const { return !links_.empty(); }
  const Eigen::Vector3d& gravity() const { return gravity_; }

  ManipulatorModel with_gravity(const Eigen::Vector3d& g) const;

 private:
  std::vector<Joint> joints_;
  Posed home_;
  std::vector<LinkInertia> links_;
  Eigen::Vector3d gravity_ = Eigen::Vector3d(0.0, 0.0, -9.81);
};

Posed forward_kinematics(const ManipulatorModel& model, const Eigen::VectorXd& q);

/// Columns are the current spatial joint twists Ad_{e^{xi_1 q_1}...e^{xi_{i-1} q_{i-1}}} xi_i.
Matrix6Xd spatial_jacobian(const ManipulatorModel& model, const Eigen::VectorXd& q);

/// V^b = J_b(q) qdot.
Matrix6Xd body_jacobian(const ManipulatorModel& model, const Eigen::VectorXd& q);

/// d/dt J_b along qdot.
Matrix6Xd body_jacobian_rate(const ManipulatorModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot);

/// Everything the dynamics need at one configuration.
struct KinematicsSnapshot {
  Posed end_effector;
  Matrix6Xd spatial_twists;             // current spatial joint twists
  std::vector<Posed> link_frames;       // centre-of-mass frames
  std::vector<Matrix6Xd> link_jacobians;  // body Jacobians of the link frames (zero beyond the link)
};

KinematicsSnapshot kinematics(const ManipulatorModel& model, const Eigen::VectorXd& q);

// Stock models.

/// Point mass `mass` on a massless rod of length `length`, hinged about x at
/// the origin and hanging along -z at q = 0.
ManipulatorModel make_pendulum(double mass = 1.0, double length = 1.0);

/// Two-link arm in the xy plane rotating about z, links along +x at q = 0.
ManipulatorModel make_planar_2link(double l1 = 1.0, double l2 = 0.8, double m1 = 1.0, double m2 = 0.8);

/// Six-joint elbow manipulator with a spherical wrist and cylinder links.
ManipulatorModel make_elbow_6dof();

/// A configuration of the elbow arm well away from singularities.
Eigen::VectorXd elbow_nominal_configuration();

}  // namespace se3kit
