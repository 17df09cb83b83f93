#pragma once

// Rigid-body plants for the impedance controllers: a serial manipulator in
// joint space (M q'' + C q' + G = tau) with its operational-space form, and a
// fully actuated free rigid body on SE(3).

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "se3kit/gic.hpp"
#include "se3kit/manipulator.hpp"

namespace se3kit {

inline constexpr double kSingularityGuard = 1e-3;

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qdot;
};

struct DynamicsMatrices {
  Eigen::MatrixXd M;
  Eigen::MatrixXd C;  // Christoffel construction, so Mdot - 2C is skew
  Eigen::VectorXd G;
  Eigen::MatrixXd Mdot;
};

struct OperationalMatrices {
  TaskDynamics task;
  Matrix6d Jb;
  Matrix6d Jb_dot;
};

/// dM/dq_k for every joint k.
std::vector<Eigen::MatrixXd> mass_matrix_partials(const ManipulatorModel& model, const Eigen::VectorXd& q);

DynamicsMatrices joint_dynamics(const ManipulatorModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot);

/// Operational-space matrices for a six-joint arm:
///   M~ = J^-T M J^-1,  C~ = J^-T (C - M J^-1 J') J^-1,  G~ = J^-T G.
/// Throws NearSingularJacobian when the smallest singular value of J_b
/// drops below kSingularityGuard.
OperationalMatrices operational_dynamics(const ManipulatorModel& model, const Eigen::VectorXd& q,
                                         const Eigen::VectorXd& qdot);

/// Joint accelerations for the applied torque.
Eigen::VectorXd joint_acceleration(const ManipulatorModel& model, const JointState& s, const Eigen::VectorXd& tau);

using TorquePolicy = std::function<Eigen::VectorXd(double t, const JointState&)>;

/// One classical RK4 step with the torque held constant.
JointState step_rk4(const ManipulatorModel& model, const JointState& s, const Eigen::VectorXd& tau, double dt);

/// One RK4 step with the torque re-evaluated at every stage.
JointState step_rk4(const ManipulatorModel& model, const JointState& s, const TorquePolicy& policy, double t,
                    double dt);

/// Mechanical energy 1/2 qdot^T M qdot + potential energy of gravity.
double mechanical_energy(const ManipulatorModel& model, const JointState& s);

// ---------------------------------------------------------------------------
// Free rigid body, body-frame Newton-Euler with the centre of mass at the
// body origin.

struct RigidBody {
  double mass = 1.0;
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Identity() * 0.1;
};

struct RigidBodyState {
  Posed g;
  Vector6d V = Vector6d::Zero();
};

/// M~ = diag(m I, I), C~ skew, G~ from gravity.
TaskDynamics rigid_body_dynamics(const RigidBody& body, const RigidBodyState& s, const Eigen::Vector3d& gravity);

RigidBodyState step_rk4(const RigidBody& body, const RigidBodyState& s,
                        const std::function<Vector6d(double, const RigidBodyState&)>& wrench,
                        const Eigen::Vector3d& gravity, double t, double dt);

// ---------------------------------------------------------------------------
// Closed loop

struct DesiredSample {
  Posed g_d;
  Vector6d V_d = Vector6d::Zero();     // body frame
  Vector6d Vdot_d = Vector6d::Zero();  // body frame
};

using DesiredTrajectory = std::function<DesiredSample(double t)>;

DesiredTrajectory constant_pose(const Posed& g_d);

/// Fixed orientation, centre moving on a circle in the plane spanned by the
/// first two columns of `orientation`.
DesiredTrajectory circle_trajectory(const Posed& center, double radius, double period);

/// Zero-order hold on timestamped samples.
DesiredTrajectory sampled_trajectory(std::vector<double> times, std::vector<DesiredSample> samples);

struct GicScenario {
  std::string name = "scenario";
  Eigen::VectorXd q0;              // manipulator plants
  Eigen::VectorXd qdot0;
  RigidBodyState body0;            // rigid-body plants
  DesiredTrajectory desired;
  GicGains gains;
  GicVariant variant = GicVariant::LieGroup;
  double horizon = 1.0;
  double dt = 1e-3;
  std::optional<Eigen::Vector3d> gravity;  // overrides the model's gravity
  int record_every = 1;
};

struct TraceRow {
  double t = 0.0;
  Eigen::VectorXd q;
  Posed g;
  Vector6d position_error = Vector6d::Zero();  // e_G or xi_de
  Vector6d velocity_error = Vector6d::Zero();
  double psi = 0.0;
  double kinetic = 0.0;
  double potential = 0.0;
  double lyapunov = 0.0;
  double lyapunov_rate = 0.0;  // finite difference of the recorded Lyapunov values
  double dissipation = 0.0;    // -e_V^T K_d e_V
  double dissipated = 0.0;     // integral of e_V^T K_d e_V since t = 0
  double dissipation_residual = 0.0;  // |d/dt (V + dissipated)|
  Vector6d wrench = Vector6d::Zero();
};

struct SimTrace {
  GicVariant variant = GicVariant::LieGroup;
  double dt = 0.0;
  std::vector<TraceRow> rows;

  double max_dissipation_residual() const;
  double final_psi() const { return rows.empty() ? 0.0 : rows.back().psi; }
};

SimTrace run_closed_loop(const ManipulatorModel& model, const GicScenario& scenario);

SimTrace run_closed_loop(const RigidBody& body, const GicScenario& scenario);

/// CSV with columns t, q..., psi, kinetic, potential, lyapunov,
/// dissipation_residual, wrench_0..wrench_5.
std::string trace_to_csv(const SimTrace& trace, int dof);

}  // namespace se3kit
