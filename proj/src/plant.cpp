#include "se3kit/plant.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace se3kit {

namespace {

void check_state(const ManipulatorModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  if (q.size() != model.dof() || qdot.size() != model.dof()) {
    throw Error(ErrorCode::DimensionMismatch, "joint state length differs from joint count");
  }
  if (!model.has_inertia()) throw Error(ErrorCode::InvalidInput, "model has no link inertias");
}

Eigen::MatrixXd mass_matrix(const KinematicsSnapshot& snap, const ManipulatorModel& model) {
  const int n = model.dof();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const auto& j = snap.link_jacobians[static_cast<std::size_t>(i)];
    m += j.transpose() * model.links()[static_cast<std::size_t>(i)].spatial_inertia() * j;
    m(i, i) += model.links()[static_cast<std::size_t>(i)].armature;
  }
  return 0.5 * (m + m.transpose());
}

std::vector<Eigen::MatrixXd> mass_partials(const KinematicsSnapshot& snap, const ManipulatorModel& model) {
  const int n = model.dof();
  std::vector<Eigen::MatrixXd> dm(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    const auto& j = snap.link_jacobians[static_cast<std::size_t>(i)];
    const Matrix6d inertia = model.links()[static_cast<std::size_t>(i)].spatial_inertia();
    const Matrix6Xd mj = inertia * j;
    for (int k = 1; k <= i; ++k) {
      // d col_c / d q_k = [col_c, col_k] for c < k; zero otherwise.
      Matrix6Xd dj = Matrix6Xd::Zero(6, n);
      for (int c = 0; c < k; ++c) dj.col(c) = adjoint_small<double>(Vector6d(j.col(c))) * j.col(k);
      const Eigen::MatrixXd t = dj.transpose() * mj;
      dm[static_cast<std::size_t>(k)] += t + t.transpose();
    }
  }
  return dm;
}

Eigen::VectorXd gravity_vector(const KinematicsSnapshot& snap, const ManipulatorModel& model) {
  const int n = model.dof();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const auto& link = model.links()[static_cast<std::size_t>(i)];
    const auto& frame = snap.link_frames[static_cast<std::size_t>(i)];
    Vector6d w = Vector6d::Zero();
    w.head<3>() = -link.mass * frame.R().transpose() * model.gravity();
    g += snap.link_jacobians[static_cast<std::size_t>(i)].transpose() * w;
  }
  return g;
}

DynamicsMatrices assemble(const KinematicsSnapshot& snap, const ManipulatorModel& model,
                          const Eigen::VectorXd& qdot) {
  const int n = model.dof();
  DynamicsMatrices d;
  d.M = mass_matrix(snap, model);
  const auto dm = mass_partials(snap, model);
  d.Mdot = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) d.Mdot += dm[static_cast<std::size_t>(k)] * qdot(k);
  d.C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double c = 0.0;
      for (int k = 0; k < n; ++k) {
        const auto& dk = dm[static_cast<std::size_t>(k)];
        c += (dk(i, j) + dm[static_cast<std::size_t>(j)](i, k) - dm[static_cast<std::size_t>(i)](j, k)) * qdot(k);
      }
      d.C(i, j) = 0.5 * c;
    }
  }
  d.G = gravity_vector(snap, model);
  return d;
}

struct Operational {
  DynamicsMatrices joint;
  OperationalMatrices task;
  Posed g;
};

Operational operational(const ManipulatorModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  check_state(model, q, qdot);
  if (model.dof() != 6) {
    throw Error(ErrorCode::DimensionMismatch, "operational-space dynamics need exactly six joints");
  }
  const KinematicsSnapshot snap = kinematics(model, q);
  Operational out;
  out.g = snap.end_effector;
  out.joint = assemble(snap, model, qdot);

  const Matrix6d jb = adjoint_big(snap.end_effector.inverse()) * snap.spatial_twists;
  Eigen::JacobiSVD<Matrix6d> svd(jb);
  if (svd.singularValues().minCoeff() < kSingularityGuard) {
    throw Error(ErrorCode::NearSingularJacobian, "body Jacobian is near singular");
  }
  Matrix6d jb_dot = Matrix6d::Zero();
  for (int j = 0; j < 6; ++j) {
    const Matrix6d ad = adjoint_small<double>(Vector6d(jb.col(j)));
    for (int k = j + 1; k < 6; ++k) jb_dot.col(j) += ad * jb.col(k) * qdot(k);
  }
  const Eigen::PartialPivLU<Matrix6d> lu(jb);
  const Matrix6d jinv = lu.inverse();
  const Matrix6d jinv_t = jinv.transpose();
  const Matrix6d m = out.joint.M;
  TaskDynamics& t = out.task.task;
  t.Mt = jinv_t * m * jinv;
  t.Mt = 0.5 * (t.Mt + t.Mt.transpose());
  t.Ct = jinv_t * (Matrix6d(out.joint.C) - m * jinv * jb_dot) * jinv;
  t.Gt = jinv_t * Vector6d(out.joint.G);
  out.task.Jb = jb;
  out.task.Jb_dot = jb_dot;
  return out;
}

Eigen::VectorXd accelerate(const DynamicsMatrices& d, const Eigen::VectorXd& qdot, const Eigen::VectorXd& tau) {
  return d.M.ldlt().solve(tau - d.C * qdot - d.G);
}

}  // namespace

std::vector<Eigen::MatrixXd> mass_matrix_partials(const ManipulatorModel& model, const Eigen::VectorXd& q) {
  check_state(model, q, q);
  return mass_partials(kinematics(model, q), model);
}

DynamicsMatrices joint_dynamics(const ManipulatorModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot) {
  check_state(model, q, qdot);
  return assemble(kinematics(model, q), model, qdot);
}

OperationalMatrices operational_dynamics(const ManipulatorModel& model, const Eigen::VectorXd& q,
                                         const Eigen::VectorXd& qdot) {
  return operational(model, q, qdot).task;
}

Eigen::VectorXd joint_acceleration(const ManipulatorModel& model, const JointState& s, const Eigen::VectorXd& tau) {
  if (tau.size() != model.dof()) throw Error(ErrorCode::DimensionMismatch, "torque length differs from joint count");
  return accelerate(joint_dynamics(model, s.q, s.qdot), s.qdot, tau);
}

JointState step_rk4(const ManipulatorModel& model, const JointState& s, const Eigen::VectorXd& tau, double dt) {
  return step_rk4(model, s, [&tau](double, const JointState&) { return tau; }, 0.0, dt);
}

namespace {

// Torque and the instantaneous dissipation rate at one stage.
using StagePolicy = std::function<std::pair<Eigen::VectorXd, double>(double, const JointState&)>;

// RK4 on (q, qdot, W) where W accumulates the dissipation rate.
JointState joint_rk4(const ManipulatorModel& model, const JointState& s, const StagePolicy& policy, double t,
                     double dt, double* work) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidInput, "time step must be positive");
  struct Deriv {
    Eigen::VectorXd dq, dqd;
    double dw;
  };
  auto deriv = [&](double time, const JointState& x) {
    const auto [tau, rate] = policy(time, x);
    return Deriv{x.qdot, joint_acceleration(model, x, tau), rate};
  };
  auto shift = [](const JointState& x, const Deriv& k, double h) {
    return JointState{x.q + h * k.dq, x.qdot + h * k.dqd};
  };
  const Deriv k1 = deriv(t, s);
  const Deriv k2 = deriv(t + 0.5 * dt, shift(s, k1, 0.5 * dt));
  const Deriv k3 = deriv(t + 0.5 * dt, shift(s, k2, 0.5 * dt));
  const Deriv k4 = deriv(t + dt, shift(s, k3, dt));
  JointState out;
  out.q = s.q + dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
  out.qdot = s.qdot + dt / 6.0 * (k1.dqd + 2.0 * k2.dqd + 2.0 * k3.dqd + k4.dqd);
  if (work) *work += dt / 6.0 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
  return out;
}

}  // namespace

JointState step_rk4(const ManipulatorModel& model, const JointState& s, const TorquePolicy& policy, double t,
                    double dt) {
  return joint_rk4(
      model, s, [&policy](double time, const JointState& x) { return std::make_pair(policy(time, x), 0.0); }, t, dt,
      nullptr);
}

double mechanical_energy(const ManipulatorModel& model, const JointState& s) {
  check_state(model, s.q, s.qdot);
  const KinematicsSnapshot snap = kinematics(model, s.q);
  double energy = 0.5 * s.qdot.dot(mass_matrix(snap, model) * s.qdot);
  for (int i = 0; i < model.dof(); ++i) {
    energy -= model.links()[static_cast<std::size_t>(i)].mass *
              model.gravity().dot(snap.link_frames[static_cast<std::size_t>(i)].p());
  }
  return energy;
}

// ---------------------------------------------------------------------------

TaskDynamics rigid_body_dynamics(const RigidBody& body, const RigidBodyState& s, const Eigen::Vector3d& gravity) {
  TaskDynamics d;
  d.Mt.setZero();
  d.Mt.topLeftCorner<3, 3>() = body.mass * Eigen::Matrix3d::Identity();
  d.Mt.bottomRightCorner<3, 3>() = body.inertia;
  const Eigen::Vector3d w = s.V.tail<3>();
  d.Ct.setZero();
  d.Ct.topLeftCorner<3, 3>() = body.mass * hat3(w);
  d.Ct.bottomRightCorner<3, 3>() = -hat3(Eigen::Vector3d(body.inertia * w));
  d.Gt.setZero();
  d.Gt.head<3>() = -body.mass * s.g.R().transpose() * gravity;
  return d;
}

namespace {

struct BodyDeriv {
  Eigen::Matrix3d R;
  Eigen::Vector3d p;
  Vector6d V;
  double W = 0.0;
};

}  // namespace

namespace {

using BodyPolicy = std::function<std::pair<Vector6d, double>(double, const RigidBodyState&)>;

RigidBodyState body_rk4(const RigidBody& body, const RigidBodyState& s, const BodyPolicy& wrench,
                        const Eigen::Vector3d& gravity, double t, double dt, double* work) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidInput, "time step must be positive");
  struct Raw {
    Eigen::Matrix3d R;
    Eigen::Vector3d p;
    Vector6d V;
  };
  auto to_state = [](const Raw& x) {
    RigidBodyState st;
    st.g = Posed(Rotationd::from_orthonormal(x.R), x.p);
    st.V = x.V;
    return st;
  };
  auto deriv = [&](double time, const Raw& x) {
    const RigidBodyState st = to_state(x);
    const TaskDynamics d = rigid_body_dynamics(body, st, gravity);
    const auto [applied, rate] = wrench(time, st);
    const Vector6d rhs = applied - d.Ct * x.V - d.Gt;
    BodyDeriv k;
    k.W = rate;
    k.R = x.R * hat3(Eigen::Vector3d(x.V.tail<3>()));
    k.p = x.R * x.V.head<3>();
    k.V.head<3>() = rhs.head<3>() / body.mass;
    k.V.tail<3>() = body.inertia.ldlt().solve(Eigen::Vector3d(rhs.tail<3>()));
    return k;
  };
  auto shift = [](const Raw& x, const BodyDeriv& k, double h) {
    return Raw{x.R + h * k.R, x.p + h * k.p, x.V + h * k.V};
  };
  const Raw x0{s.g.R(), s.g.p(), s.V};
  const BodyDeriv k1 = deriv(t, x0);
  const BodyDeriv k2 = deriv(t + 0.5 * dt, shift(x0, k1, 0.5 * dt));
  const BodyDeriv k3 = deriv(t + 0.5 * dt, shift(x0, k2, 0.5 * dt));
  const BodyDeriv k4 = deriv(t + dt, shift(x0, k3, dt));
  Raw x1;
  x1.R = x0.R + dt / 6.0 * (k1.R + 2.0 * k2.R + 2.0 * k3.R + k4.R);
  x1.p = x0.p + dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
  x1.V = x0.V + dt / 6.0 * (k1.V + 2.0 * k2.V + 2.0 * k3.V + k4.V);
  if (work) *work += dt / 6.0 * (k1.W + 2.0 * k2.W + 2.0 * k3.W + k4.W);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(x1.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  x1.R = svd.matrixU() * svd.matrixV().transpose();
  return to_state(x1);
}

}  // namespace

RigidBodyState step_rk4(const RigidBody& body, const RigidBodyState& s,
                        const std::function<Vector6d(double, const RigidBodyState&)>& wrench,
                        const Eigen::Vector3d& gravity, double t, double dt) {
  return body_rk4(
      body, s, [&wrench](double time, const RigidBodyState& x) { return std::make_pair(wrench(time, x), 0.0); },
      gravity, t, dt, nullptr);
}

// ---------------------------------------------------------------------------

DesiredTrajectory constant_pose(const Posed& g_d) {
  return [g_d](double) { return DesiredSample{g_d, Vector6d::Zero(), Vector6d::Zero()}; };
}

DesiredTrajectory circle_trajectory(const Posed& center, double radius, double period) {
  if (!(period > 0.0)) throw Error(ErrorCode::InvalidInput, "circle period must be positive");
  const double omega = 2.0 * M_PI / period;
  return [center, radius, omega](double t) {
    const double c = std::cos(omega * t), s = std::sin(omega * t);
    const Eigen::Vector3d local(radius * c, radius * s, 0.0);
    DesiredSample out;
    out.g_d = Posed(center.rotation(), center.p() + center.R() * local);
    out.V_d << radius * omega * Eigen::Vector3d(-s, c, 0.0), Eigen::Vector3d::Zero();
    out.Vdot_d << radius * omega * omega * Eigen::Vector3d(-c, -s, 0.0), Eigen::Vector3d::Zero();
    return out;
  };
}

DesiredTrajectory sampled_trajectory(std::vector<double> times, std::vector<DesiredSample> samples) {
  if (times.empty() || times.size() != samples.size()) {
    throw Error(ErrorCode::InvalidInput, "trajectory needs one timestamp per sample");
  }
  if (!std::is_sorted(times.begin(), times.end())) {
    throw Error(ErrorCode::InvalidInput, "trajectory timestamps must be sorted");
  }
  return [times = std::move(times), samples = std::move(samples)](double t) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t idx = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin() - 1);
    return samples[idx];
  };
}

// ---------------------------------------------------------------------------

double SimTrace::max_dissipation_residual() const {
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.dissipation_residual);
  return worst;
}

namespace {

double psi_of(GicVariant v, const Posed& g, const Posed& g_d) {
  return v == GicVariant::LieGroup ? psi1(g, g_d) : psi2(g, g_d);
}

Vector6d position_error_of(GicVariant v, const Posed& g, const Posed& g_d) {
  return v == GicVariant::LieGroup ? gcev(g, g_d) : xi_de(g, g_d);
}

TaskState task_state(const Posed& g, const Vector6d& vb, const DesiredSample& d) {
  TaskState s;
  s.g = g;
  s.g_d = d.g_d;
  s.Vb = Twistd::from_vector(vb, Frame::Body);
  s.Vb_d = Twistd::from_vector(d.V_d, Frame::Body);
  s.Vdot_d = d.Vdot_d;
  return s;
}

TraceRow make_row(double t, const GicScenario& sc, const TaskState& ts, const TaskDynamics& d, const Vector6d& wrench) {
  TraceRow row;
  row.t = t;
  row.g = ts.g;
  row.position_error = position_error_of(sc.variant, ts.g, ts.g_d);
  row.velocity_error = velocity_error(ts);
  row.psi = psi_of(sc.variant, ts.g, ts.g_d);
  row.kinetic = kinetic_energy(row.velocity_error, d.Mt);
  row.potential = potential(sc.variant, ts.g, ts.g_d, sc.gains);
  row.lyapunov = row.kinetic + row.potential;
  row.dissipation = -row.velocity_error.dot(sc.gains.Kd * row.velocity_error);
  row.wrench = wrench;
  return row;
}

// Central differences inside, three-point one-sided differences at the ends.
template <typename F>
double difference(const std::vector<TraceRow>& rows, std::size_t i, double h, F value) {
  const std::size_t n = rows.size();
  if (i == 0) return (-3.0 * value(rows[0]) + 4.0 * value(rows[1]) - value(rows[2])) / (2.0 * h);
  if (i == n - 1) return (3.0 * value(rows[n - 1]) - 4.0 * value(rows[n - 2]) + value(rows[n - 3])) / (2.0 * h);
  return (value(rows[i + 1]) - value(rows[i - 1])) / (2.0 * h);
}

// The residual is the rate of V + W, with W the dissipated work integrated
// alongside the state.
void fill_rates(std::vector<TraceRow>& rows, double h) {
  if (rows.size() < 3) return;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].lyapunov_rate = difference(rows, i, h, [](const TraceRow& r) { return r.lyapunov; });
    rows[i].dissipation_residual =
        std::abs(difference(rows, i, h, [](const TraceRow& r) { return r.lyapunov + r.dissipated; }));
  }
}

void check_scenario(const GicScenario& sc) {
  if (!(sc.dt > 0.0) || !(sc.horizon >= 0.0) || sc.record_every < 1) {
    throw Error(ErrorCode::InvalidInput, "scenario needs dt > 0, horizon >= 0 and record_every >= 1");
  }
  if (!sc.desired) throw Error(ErrorCode::InvalidInput, "scenario has no desired trajectory");
  sc.gains.validate();
}

long step_count(const GicScenario& sc) { return std::lround(sc.horizon / sc.dt); }

}  // namespace

SimTrace run_closed_loop(const ManipulatorModel& model, const GicScenario& sc) {
  check_scenario(sc);
  const ManipulatorModel plant = sc.gravity ? model.with_gravity(*sc.gravity) : model;
  SimTrace trace;
  trace.variant = sc.variant;
  trace.dt = sc.dt;

  auto evaluate = [&](double t, const JointState& x, Operational* keep, TaskState* ts_out) {
    Operational op = operational(plant, x.q, x.qdot);
    const TaskState ts = task_state(op.g, op.task.Jb * x.qdot, sc.desired(t));
    const Vector6d wrench = gic_control(ts, sc.gains, op.task.task, sc.variant);
    if (ts_out) *ts_out = ts;
    if (keep) *keep = std::move(op);
    return wrench;
  };
  double work = 0.0;
  auto record = [&](double t, const JointState& x) {
    Operational op;
    TaskState ts;
    const Vector6d wrench = evaluate(t, x, &op, &ts);
    TraceRow row = make_row(t, sc, ts, op.task.task, wrench);
    row.q = x.q;
    row.dissipated = work;
    trace.rows.push_back(std::move(row));
  };
  const StagePolicy policy = [&](double t, const JointState& x) {
    Operational op;
    TaskState ts;
    const Vector6d wrench = evaluate(t, x, &op, &ts);
    const Vector6d e_v = velocity_error(ts);
    return std::make_pair(Eigen::VectorXd(op.task.Jb.transpose() * wrench), e_v.dot(sc.gains.Kd * e_v));
  };

  JointState x{sc.q0, sc.qdot0.size() ? sc.qdot0 : Eigen::VectorXd::Zero(sc.q0.size())};
  const long steps = step_count(sc);
  record(0.0, x);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    x = joint_rk4(plant, x, policy, t, sc.dt, &work);
    if ((k + 1) % sc.record_every == 0) record(static_cast<double>(k + 1) * sc.dt, x);
  }
  fill_rates(trace.rows, sc.dt * sc.record_every);
  return trace;
}

SimTrace run_closed_loop(const RigidBody& body, const GicScenario& sc) {
  check_scenario(sc);
  const Eigen::Vector3d gravity = sc.gravity.value_or(Eigen::Vector3d(0.0, 0.0, -9.81));
  SimTrace trace;
  trace.variant = sc.variant;
  trace.dt = sc.dt;

  auto control = [&](double t, const RigidBodyState& s, TaskState* ts_out, TaskDynamics* d_out) {
    const TaskState ts = task_state(s.g, s.V, sc.desired(t));
    const TaskDynamics d = rigid_body_dynamics(body, s, gravity);
    if (ts_out) *ts_out = ts;
    if (d_out) *d_out = d;
    return gic_control(ts, sc.gains, d, sc.variant);
  };
  double work = 0.0;
  auto record = [&](double t, const RigidBodyState& s) {
    TaskState ts;
    TaskDynamics d;
    const Vector6d wrench = control(t, s, &ts, &d);
    trace.rows.push_back(make_row(t, sc, ts, d, wrench));
    trace.rows.back().dissipated = work;
  };
  const BodyPolicy policy = [&](double t, const RigidBodyState& s) {
    TaskState ts;
    const Vector6d wrench = control(t, s, &ts, nullptr);
    const Vector6d e_v = velocity_error(ts);
    return std::make_pair(wrench, e_v.dot(sc.gains.Kd * e_v));
  };

  RigidBodyState x = sc.body0;
  const long steps = step_count(sc);
  record(0.0, x);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    x = body_rk4(body, x, policy, gravity, t, sc.dt, &work);
    if ((k + 1) % sc.record_every == 0) record(static_cast<double>(k + 1) * sc.dt, x);
  }
  fill_rates(trace.rows, sc.dt * sc.record_every);
  return trace;
}

std::string trace_to_csv(const SimTrace& trace, int dof) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "t";
  for (int i = 0; i < dof; ++i) out << ",q" << i;
  out << ",psi,kinetic,potential,lyapunov,dissipation_residual";
  for (int i = 0; i < 6; ++i) out << ",wrench" << i;
  out << '\n';
  for (const auto& r : trace.rows) {
    out << r.t;
    for (int i = 0; i < dof; ++i) out << ',' << (i < r.q.size() ? r.q(i) : 0.0);
    out << ',' << r.psi << ',' << r.kinetic << ',' << r.potential << ',' << r.lyapunov << ','
        << r.dissipation_residual;
    for (int i = 0; i < 6; ++i) out << ',' << r.wrench(i);
    out << '\n';
  }
  return out.str();
}

}  // namespace se3kit
