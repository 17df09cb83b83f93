#include <gtest/gtest.h>

#include <numbers>

#include "se3kit/liegroup.hpp"
#include "se3kit/manipulator.hpp"

using namespace se3kit;

namespace {

constexpr double kPi = std::numbers::pi;

template <typename M>
M series_exp(const M& a, int terms = 30) {
  M sum = M::Identity(a.rows(), a.cols());
  M term = M::Identity(a.rows(), a.cols());
  for (int k = 1; k < terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

Eigen::Vector3d random_vec3(Rng& rng, double scale = 1.0) {
  return Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)) * scale;
}

}  // namespace

TEST(Hat, ZeroAndBasis) {
  EXPECT_EQ(hat3<double>(Eigen::Vector3d::Zero()), Eigen::Matrix3d::Zero());
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(hat3<double>(Eigen::Vector3d::UnitZ()), expected);
}

TEST(Hat, MatchesCrossProduct) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d w = random_vec3(rng), u = random_vec3(rng);
    const Eigen::Vector3d cross(w(1) * u(2) - w(2) * u(1), w(2) * u(0) - w(0) * u(2), w(0) * u(1) - w(1) * u(0));
    EXPECT_LT((hat3<double>(w) * u - cross).norm(), 1e-14);
  }
}

TEST(Vee, RoundtripAndRejection) {
  EXPECT_EQ(vee3<double>(Eigen::Matrix3d::Zero()), Eigen::Vector3d::Zero());
  const Eigen::Vector3d w(1, 2, 3);
  EXPECT_EQ(vee3<double>(hat3<double>(w)), w);
  Rng rng(2);
  Eigen::Matrix3d a = Eigen::Matrix3d::Random();
  a = a + a.transpose();
  try {
    vee3<double>(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotSkew);
  }
}

TEST(Rotation, ProjectionPolicy) {
  Rng rng(3);
  const Eigen::Matrix3d r = random_rotation(rng).matrix();
  Eigen::Matrix3d drift = r;
  drift(0, 1) += 1e-8;
  const Rotationd fixed(drift);
  EXPECT_LT((fixed.matrix().transpose() * fixed.matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-14);
  Eigen::Matrix3d bad = r;
  bad(0, 1) += 1e-3;
  EXPECT_THROW(Rotationd{bad}, Error);
  EXPECT_THROW(Rotationd{Eigen::Matrix3d(-Eigen::Matrix3d::Identity())}, Error);
}

TEST(ExpSo3, BasicCases) {
  EXPECT_LT((exp_so3<double>(Eigen::Vector3d::Zero()).matrix() - Eigen::Matrix3d::Identity()).norm(), 1e-15);
  const Rotationd q = exp_so3<double>(Eigen::Vector3d(0, 0, kPi / 2));
  EXPECT_LT((q * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm(), 1e-15);
}

TEST(ExpSo3, MatchesSeries) {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Vector3d w = random_vec3(rng, 1.2);
    const Eigen::Matrix3d ref = series_exp<Eigen::Matrix3d>(hat3<double>(w), 40);
    EXPECT_LT((exp_so3<double>(w).matrix() - ref).norm(), 1e-12);
    EXPECT_LT((exp_so3<double>(w) * w - w).norm(), 1e-12);
  }
  const Eigen::Vector3d tiny(3e-6, -1e-6, 2e-6);
  EXPECT_LT((exp_so3<double>(tiny).matrix() - series_exp<Eigen::Matrix3d>(hat3<double>(tiny))).norm(), 1e-15);
}

TEST(LogSo3, Roundtrips) {
  EXPECT_EQ(log_so3(Rotationd()), Eigen::Vector3d::Zero());
  const Eigen::Vector3d w(0.3, -0.2, 0.1);
  EXPECT_LT((log_so3(exp_so3<double>(w)) - w).norm(), 1e-14);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Rotationd r = random_rotation_within<double>(rng, kPi - 1e-5);
    const Eigen::Vector3d phi = log_so3(r);
    EXPECT_LE(phi.norm(), kPi);
    EXPECT_LT((exp_so3<double>(phi).matrix() - r.matrix()).norm(), 1e-9);
  }
}

TEST(LogSo3, NearBranchCut) {
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector3d axis = random_vec3(rng).normalized();
    const Eigen::Vector3d w = axis * (kPi - 1e-3);
    EXPECT_LT((log_so3(exp_so3<double>(w)) - w).norm(), 1e-6);
  }
}

TEST(LogSo3, AntipodalRaises) {
  const Rotationd half = exp_so3<double>(Eigen::Vector3d(0, kPi, 0));
  try {
    log_so3(half);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AntipodalSingularity);
  }
}

TEST(ExpSe3, BasicCasesAndSeries) {
  EXPECT_LT((exp_se3<double>(Vector6d::Zero()).matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-15);
  Vector6d prism;
  prism << 1, 0, 0, 0, 0, 0;
  EXPECT_LT((exp_se3<double>(prism, 2.0).p() - Eigen::Vector3d(2, 0, 0)).norm(), 1e-15);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Vector6d xi = random_twist(rng);
    const double theta = uniform(rng, -1.5, 1.5);
    const Eigen::Matrix4d ref = series_exp<Eigen::Matrix4d>(hat6<double>(Vector6d(xi * theta)), 40);
    EXPECT_LT((exp_se3<double>(xi, theta).matrix() - ref).norm(), 1e-12);
  }
}

TEST(LogSe3, Roundtrips) {
  EXPECT_EQ(log_se3(Posed()).vector(), Vector6d::Zero());
  const Eigen::Vector3d p(0.4, -1.0, 2.0);
  Vector6d expected;
  expected << p, Eigen::Vector3d::Zero();
  EXPECT_LT((log_se3(Posed::translation(p)).vector() - expected).norm(), 1e-15);
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    const Posed g(random_rotation_within<double>(rng, kPi - 1e-3), random_vec3(rng));
    const Twistd xi = log_se3(g);
    EXPECT_LT((exp_se3(xi).matrix() - g.matrix()).norm(), 1e-9);
  }
}

TEST(GroupAxioms, Pose) {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const Posed a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_LT((((a * b) * c).matrix() - (a * (b * c)).matrix()).norm(), 1e-12);
    EXPECT_LT(((a * a.inverse()).matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-12);
    EXPECT_LT(((a * Posed()).matrix() - a.matrix()).norm(), 1e-15);
    EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).norm(), 1e-12);
  }
}

TEST(Adjoint, Structure) {
  EXPECT_EQ(adjoint_big(Posed()), Matrix6d::Identity());
  Rng rng(10);
  const Rotationd r = random_rotation(rng);
  Matrix6d blk = Matrix6d::Zero();
  blk.topLeftCorner<3, 3>() = r.matrix();
  blk.bottomRightCorner<3, 3>() = r.matrix();
  EXPECT_LT((adjoint_big(Posed(r, Eigen::Vector3d::Zero())) - blk).norm(), 1e-15);
  for (int i = 0; i < 100; ++i) {
    const Posed a = random_pose(rng), b = random_pose(rng);
    EXPECT_LT((adjoint_big(a * b) - adjoint_big(a) * adjoint_big(b)).norm(), 1e-12);
    EXPECT_LT((adjoint_big(a).inverse() - adjoint_big(a.inverse())).norm(), 1e-12);
    const Vector6d xi = random_twist(rng);
    // Ad_g xi^ = g xi^ g^-1
    const Eigen::Matrix4d conj = a.matrix() * hat6<double>(xi) * a.inverse().matrix();
    EXPECT_LT((hat6<double>(Vector6d(adjoint_big(a) * xi)) - conj).norm(), 1e-12);
  }
}

TEST(AdjointSmall, BracketAndExponential) {
  EXPECT_EQ(adjoint_small<double>(Vector6d::Zero()), Matrix6d::Zero());
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    const Vector6d a = random_twist(rng), b = random_twist(rng), c = random_twist(rng);
    EXPECT_LT(lie_bracket(a, a).norm(), 1e-15);
    const Eigen::Matrix4d comm = hat6<double>(a) * hat6<double>(b) - hat6<double>(b) * hat6<double>(a);
    EXPECT_LT((hat6<double>(lie_bracket(a, b)) - comm).norm(), 1e-12);
    const Vector6d jacobi = lie_bracket(a, lie_bracket(b, c)) + lie_bracket(b, lie_bracket(c, a)) +
                            lie_bracket(c, lie_bracket(a, b));
    EXPECT_LT(jacobi.norm(), 1e-10);
    const double t = uniform(rng, -1.0, 1.0);
    const Matrix6d lhs = series_exp<Matrix6d>(Matrix6d(t * adjoint_small<double>(a)), 60);
    EXPECT_LT((lhs - adjoint_big(exp_se3<double>(a, t))).norm(), 1e-10);
  }
}

TEST(Velocity, IdentityAndErrors) {
  Rng rng(12);
  const Posed g = random_pose(rng);
  EXPECT_EQ(body_velocity<double>(g, Eigen::Matrix4d::Zero()).vector(), Vector6d::Zero());
  const Vector6d xi = random_twist(rng);
  EXPECT_LT((body_velocity<double>(Posed(), hat6<double>(xi)).vector() - xi).norm(), 1e-15);
  Eigen::Matrix4d bad = Eigen::Matrix4d::Zero();
  bad(0, 0) = 1.0;
  EXPECT_THROW(body_velocity<double>(g, bad), Error);
}

TEST(Velocity, FiniteDifferenceCurve) {
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    const Posed g0 = random_pose(rng);
    const Vector6d a = random_twist(rng), b = random_twist(rng);
    auto curve = [&](double t) { return g0 * exp_se3<double>(Vector6d(a * t + 0.5 * b * t * t)); };
    const double t = 0.3, h = 1e-5;
    const Eigen::Matrix4d gdot = (curve(t + h).matrix() - curve(t - h).matrix()) / (2 * h);
    const Posed g = curve(t);
    // Finite differences carry O(h^2) tangency error, well inside the tolerance.
    const Twistd vb = body_velocity<double>(g, gdot);
    const Twistd vs = spatial_velocity<double>(g, gdot);
    EXPECT_EQ(vb.frame, Frame::Body);
    EXPECT_EQ(vs.frame, Frame::Spatial);
    EXPECT_LT((adjoint_big(g) * vb.vector() - vs.vector()).norm(), 1e-6);
  }
}

TEST(Wrench, PairingInvariance) {
  Rng rng(14);
  const Wrenchd f = Wrenchd::from_vector(random_twist(rng), Frame::Body);
  EXPECT_EQ(transform_wrench(f, Posed(), Frame::Body, Frame::Body).vector(), f.vector());
  const Rotationd r = random_rotation(rng);
  const Wrenchd fr = transform_wrench(f, Posed(r, Eigen::Vector3d::Zero()), Frame::Body, Frame::Body);
  EXPECT_NEAR(fr.f.norm(), f.f.norm(), 1e-14);
  EXPECT_NEAR(fr.tau.norm(), f.tau.norm(), 1e-14);
  for (int i = 0; i < 100; ++i) {
    const Posed g_bc = random_pose(rng);
    const Twistd v_ac = Twistd::from_vector(random_twist(rng), Frame::Spatial);
    const Twistd v_ab = Twistd::from_vector(adjoint_big(g_bc) * v_ac.vector(), Frame::Body);
    const Wrenchd f_b = Wrenchd::from_vector(random_twist(rng), Frame::Body);
    const Wrenchd f_c = transform_wrench(f_b, g_bc, Frame::Body, Frame::Spatial);
    EXPECT_NEAR(pairing(v_ac, f_c), pairing(v_ab, f_b), 1e-10);
  }
  EXPECT_THROW(pairing(Twistd::from_vector(Vector6d::Zero(), Frame::Spatial), f), Error);
  EXPECT_THROW(transform_wrench(f, Posed(), Frame::Spatial, Frame::Body), Error);
}

TEST(ForwardKinematics, HomeAndSingleJoint) {
  const ManipulatorModel arm = make_elbow_6dof();
  EXPECT_LT((forward_kinematics(arm, Eigen::VectorXd::Zero(6)).matrix() - arm.home().matrix()).norm(), 1e-15);
  const Posed home(Rotationd(), Eigen::Vector3d(1, 0, 0));
  const ManipulatorModel one({Joint::revolute(Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero())}, home);
  Eigen::VectorXd q(1);
  q << 0.7;
  const Posed expected = Posed(exp_so3<double>(Eigen::Vector3d(0, 0, 0.7)), Eigen::Vector3d::Zero()) * home;
  EXPECT_LT((forward_kinematics(one, q).matrix() - expected.matrix()).norm(), 1e-15);
  EXPECT_THROW(forward_kinematics(one, Eigen::VectorXd::Zero(2)), Error);
}

TEST(ForwardKinematics, PlanarTrigonometry) {
  const double l1 = 1.0, l2 = 0.8;
  const ManipulatorModel arm = make_planar_2link(l1, l2);
  Rng rng(15);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd q(2);
    q << uniform(rng, -kPi, kPi), uniform(rng, -kPi, kPi);
    const Eigen::Vector3d p = forward_kinematics(arm, q).p();
    EXPECT_NEAR(p.x(), l1 * std::cos(q(0)) + l2 * std::cos(q(0) + q(1)), 1e-12);
    EXPECT_NEAR(p.y(), l1 * std::sin(q(0)) + l2 * std::sin(q(0) + q(1)), 1e-12);
  }
}

TEST(Jacobian, BodyVelocityMatchesFiniteDifference) {
  const ManipulatorModel arm = make_elbow_6dof();
  Rng rng(16);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd q = gaussian_vector(rng, 6), qd = gaussian_vector(rng, 6);
    const double h = 1e-6;
    const Eigen::Matrix4d gdot =
        (forward_kinematics(arm, q + h * qd).matrix() - forward_kinematics(arm, q - h * qd).matrix()) / (2 * h);
    const Posed g = forward_kinematics(arm, q);
    const Vector6d vb = body_velocity<double>(g, gdot).vector();
    EXPECT_LT((body_jacobian(arm, q) * qd - vb).norm(), 1e-6);
    const Vector6d vs = spatial_velocity<double>(g, gdot).vector();
    EXPECT_LT((spatial_jacobian(arm, q) * qd - vs).norm(), 1e-6);
  }
  EXPECT_EQ(body_jacobian(arm, Eigen::VectorXd::Zero(6)) * Eigen::VectorXd::Zero(6), Vector6d::Zero());
}

TEST(Jacobian, RateMatchesFiniteDifference) {
  const ManipulatorModel arm = make_elbow_6dof();
  Rng rng(17);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd q = gaussian_vector(rng, 6), qd = gaussian_vector(rng, 6);
    const double h = 1e-6;
    const Matrix6Xd fd = (body_jacobian(arm, q + h * qd) - body_jacobian(arm, q - h * qd)) / (2 * h);
    EXPECT_LT((body_jacobian_rate(arm, q, qd) - fd).norm(), 1e-7);
  }
}

TEST(Manipulator, RejectsNonUnitAxis) {
  Joint j;
  j.twist << 0, 0, 0, 0, 0, 2;
  EXPECT_THROW(ManipulatorModel({j}, Posed()), Error);
  EXPECT_THROW(Joint::revolute(Eigen::Vector3d(0, 0, 2), Eigen::Vector3d::Zero()), Error);
}
