#pragma once

// Geometric impedance control on SE(3): error functions, error vectors,
// energies and the two dissipative control laws. All vectors are body-frame
// quantities in the (linear, angular) ordering.

#include "se3kit/liegroup.hpp"

namespace se3kit {

enum class GicVariant {
  LieGroup = 1,    // Frobenius-norm potential, GCEV-based elastic force
  LieAlgebra = 2,  // log-map potential, K_xi xi_de elastic force
};

struct GicGains {
  Eigen::Matrix3d Kp = 100.0 * Eigen::Matrix3d::Identity();
  Eigen::Matrix3d KR = 100.0 * Eigen::Matrix3d::Identity();
  Matrix6d Kxi = 100.0 * Matrix6d::Identity();
  Matrix6d Kd = 20.0 * Matrix6d::Identity();

  static GicGains defaults() { return {}; }

  /// Throws InvalidInput unless every gain is symmetric positive definite.
  void validate() const;
};

struct TaskState {
  Posed g;
  Posed g_d;
  Twistd Vb;
  Twistd Vb_d;
  Vector6d Vdot_d = Vector6d::Zero();
};

/// Operational-space dynamics M V' + C V + G = T, in the body frame.
struct TaskDynamics {
  Matrix6d Mt = Matrix6d::Identity();
  Matrix6d Ct = Matrix6d::Zero();
  Vector6d Gt = Vector6d::Zero();
};

/// g_de = g_d^{-1} g.
Posed config_error(const Posed& g, const Posed& g_d);

/// tr(I - R_d^T R) + 1/2 |p - p_d|^2.
double psi1(const Posed& g, const Posed& g_d);

/// 1/2 ||I - g_d^{-1} g||_F^2 evaluated on the homogeneous matrices.
double psi1_frobenius(const Posed& g, const Posed& g_d);

/// 1/2 |psi_de|^2 + 1/2 |b_de|^2 with (b_de, psi_de) = log(g_de).
double psi2(const Posed& g, const Posed& g_d);

/// e_G = [R^T (p - p_d); (R_d^T R - R^T R_d)^v].
Vector6d gcev(const Posed& g, const Posed& g_d);

/// xi_de = log(g_d^{-1} g)^v = [b_de; psi_de].
Vector6d xi_de(const Posed& g, const Posed& g_d);

/// V*_d = Ad_{g_ed} V_d^b, the desired velocity carried to the current frame.
Vector6d transported_desired_velocity(const TaskState& s);

/// d/dt V*_d = Ad_{g_ed} Vdot_d - ad_{e_V} V*_d.
Vector6d transported_desired_acceleration(const TaskState& s);

/// e_V = V^b - Ad_{g_ed} V_d^b.
Vector6d velocity_error(const TaskState& s);

double potential_p1(const Posed& g, const Posed& g_d, const GicGains& gains);
double potential_p2(const Posed& g, const Posed& g_d, const GicGains& gains);
double potential(GicVariant variant, const Posed& g, const Posed& g_d, const GicGains& gains);

/// f_{G,1} = [R^T R_d K_p R_d^T (p - p_d); (K_R R_d^T R - R^T R_d K_R)^v].
Vector6d elastic_force_1(const Posed& g, const Posed& g_d, const GicGains& gains);

/// f_{G,2} = K_xi xi_de.
Vector6d elastic_force_2(const Posed& g, const Posed& g_d, const GicGains& gains);

Vector6d elastic_force(GicVariant variant, const Posed& g, const Posed& g_d, const GicGains& gains);

/// 1/2 e_V^T M e_V.
double kinetic_energy(const Vector6d& e_v, const Matrix6d& Mt);

/// Feedback part -f_{G,i} - K_d e_V of the control law.
Vector6d feedback_wrench(const TaskState& s, const GicGains& gains, GicVariant variant);

/// T = M V'*_d + C V*_d + G - f_{G,i} - K_d e_V.
Vector6d gic_control(const TaskState& s, const GicGains& gains, const TaskDynamics& plant, GicVariant variant);

/// Right-invariant counterpart of e_G, expressed in the spatial frame:
/// [p - R R_d^T p_d; (R R_d^T - R_d R^T)^v].
Vector6d gcev_right(const Posed& g, const Posed& g_d);

}  // namespace se3kit
