#include "se3kit/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "se3kit/gic.hpp"
#include "se3kit/gimdp.hpp"

namespace se3kit {

bool Metric::passed() const {
  if (!checked()) return true;
  if (!std::isfinite(value)) return false;
  return value >= lower && (strict_upper ? value < upper : value <= upper);
}

bool CriterionResult::passed() const {
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.passed(); });
}

namespace {

Metric below(std::string name, double value, double upper) { return {std::move(name), value, -INFINITY, upper, true}; }
Metric at_most(std::string name, double value, double upper) { return {std::move(name), value, -INFINITY, upper, false}; }
Metric at_least(std::string name, double value, double lower) { return {std::move(name), value, lower, INFINITY, true}; }
Metric within(std::string name, double value, double lower, double upper) {
  return {std::move(name), value, lower, upper, false};
}
Metric info(std::string name, double value) { return {std::move(name), value, -INFINITY, INFINITY, true}; }

Rng criterion_rng(std::uint64_t seed, int id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// 1. Lie group identities.
CriterionResult lie_suite(Rng& rng) {
  double exp_log = 0.0, ad_chain = 0.0, jacobi = 0.0, pair = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vector6d xi = random_twist(rng);
    if (xi.tail<3>().norm() > 3.0) xi.tail<3>() *= 3.0 / xi.tail<3>().norm();
    exp_log = std::max(exp_log, (log_se3(exp_se3<double>(xi)).vector() - xi).norm());
    const Posed g = random_pose(rng), h = random_pose(rng);
    exp_log = std::max(exp_log, (exp_se3(log_se3(g)).matrix() - g.matrix()).norm());
    ad_chain = std::max(ad_chain, (adjoint_big(g * h) - adjoint_big(g) * adjoint_big(h)).cwiseAbs().maxCoeff());
    const Vector6d x = random_twist(rng), y = random_twist(rng), z = random_twist(rng);
    jacobi = std::max(jacobi, (lie_bracket(x, lie_bracket(y, z)) + lie_bracket(y, lie_bracket(z, x)) +
                               lie_bracket(z, lie_bracket(x, y)))
                                  .norm());
    const Twistd v_ac = Twistd::from_vector(random_twist(rng), Frame::Spatial);
    const Twistd v_ab = Twistd::from_vector(adjoint_big(g) * v_ac.vector(), Frame::Body);
    const Wrenchd f_b = Wrenchd::from_vector(random_twist(rng), Frame::Body);
    pair = std::max(pair, std::abs(pairing(v_ac, transform_wrench(f_b, g, Frame::Body, Frame::Spatial)) -
                                   pairing(v_ab, f_b)));
  }
  return {1, "lie-group suite", 5.0,
          {below("exp_log_roundtrip", exp_log, 1e-9), below("adjoint_composition", ad_chain, 1e-12),
           below("jacobi_identity", jacobi, 1e-10), below("pairing_invariance", pair, 1e-10)}};
}

// 2. Spherical harmonics, Wigner-D and Clebsch-Gordan.
CriterionResult representation_suite(Rng& rng) {
  double steering = 0.0, homomorphism = 0.0, intertwiner = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Rotationd a = random_rotation(rng), b = random_rotation(rng);
    const Eigen::Vector3d n = Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)).normalized();
    const auto da = wigner_d_all(4, a), db = wigner_d_all(4, b), dab = wigner_d_all(4, a * b);
    for (int l = 0; l <= 4; ++l) {
      const auto k = static_cast<std::size_t>(l);
      steering = std::max(steering, (sh_vector(l, a * n) - da[k] * sh_vector(l, n)).norm());
      homomorphism = std::max(homomorphism, (dab[k] - da[k] * db[k]).norm());
    }
  }
  const CGTable table(3, 3, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = wigner_d_all(6, random_rotation(rng));
    for (int l1 = 0; l1 <= 3; ++l1)
      for (int l2 = 0; l2 <= 3; ++l2)
        for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l) {
          const Eigen::MatrixXd c = table.block(l1, l2, l).matrix();
          intertwiner = std::max(intertwiner, (d[static_cast<std::size_t>(l)] * c -
                                               c * kron(d[static_cast<std::size_t>(l1)], d[static_cast<std::size_t>(l2)]))
                                                  .norm());
        }
  }
  return {2, "representation suite", 30.0,
          {below("sh_steering", steering, 1e-9), below("wigner_homomorphism", homomorphism, 1e-9),
           below("cg_intertwiner", intertwiner, 1e-8)}};
}

// 3. TFN layer equivariance.
CriterionResult tfn_suite(Rng& rng) {
  EquivarianceOptions o;
  o.seed = rng();
  o.layer = LayerKind::Tfn;
  o.trials = 200;
  o.max_degree = 2;
  o.points = 32;
  const EquivarianceReport tfn = equivariance_report(o);
  o.seed = rng();
  o.layer = LayerKind::SelfInteraction;
  const EquivarianceReport si = equivariance_report(o);
  o.seed = rng();
  o.layer = LayerKind::Attention;
  o.trials = 50;
  const EquivarianceReport att = equivariance_report(o);
  o.seed = rng();
  o.layer = LayerKind::Tfn;
  o.trials = 5;
  o.perturb_cg = true;
  const EquivarianceReport broken = equivariance_report(o);
  return {3, "tfn equivariance", 60.0,
          {below("tfn_layer_residual", tfn.max_residual, 1e-8), info("tfn_layer_mean_residual", tfn.mean_residual),
           below("self_interaction_residual", si.max_residual, 1e-8),
           below("attention_layer_residual", att.max_residual, 1e-8),
           at_least("perturbed_cg_residual", broken.max_residual, 1e-3)}};
}

// 4. eSCN against the direct tensor product.
CriterionResult escn_suite(Rng& rng) {
  EquivarianceOptions o;
  o.seed = rng();
  o.layer = LayerKind::Escn;
  o.trials = 500;
  o.max_degree = 3;
  const EquivarianceReport r = equivariance_report(o);
  CriterionResult c{4, "escn equivalence", 0.0, {below("max_abs_deviation", r.max_residual, 1e-8)}};
  const std::uint64_t cost_seed = rng();
  double previous = 0.0;
  for (int L = 2; L <= 4; ++L) {
    const EscnCost cost = escn_cost(L, cost_seed);
    c.metrics.push_back(info("direct_flops_L" + std::to_string(L), static_cast<double>(cost.direct_flops)));
    c.metrics.push_back(info("escn_flops_L" + std::to_string(L), static_cast<double>(cost.escn_flops)));
    c.metrics.push_back(info("work_ratio_L" + std::to_string(L), cost.ratio()));
    if (L > 2) c.metrics.push_back(at_least("work_ratio_step_L" + std::to_string(L), cost.ratio() - previous, 0.0));
    previous = cost.ratio();
  }
  return c;
}

GicGains random_gains(Rng& rng) {
  auto spd = [&](int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n * n; ++i) a(i) = gaussian(rng);
    return Eigen::MatrixXd(a * a.transpose() + Eigen::MatrixXd::Identity(n, n));
  };
  GicGains g;
  g.Kp = spd(3);
  g.KR = spd(3);
  g.Kxi = spd(6);
  g.Kd = spd(6);
  return g;
}

Posed random_nearby(Rng& rng, const Posed& g, double max_angle) {
  return g * Posed(random_rotation_within<double>(rng, max_angle),
                   Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)));
}

double arm_regulation_residual(GicVariant variant, double dt) {
  const ManipulatorModel arm = make_elbow_6dof();
  GicScenario sc;
  sc.q0 = elbow_nominal_configuration();
  sc.qdot0 = Eigen::VectorXd::Zero(6);
  Eigen::VectorXd offset(6);
  offset << 0.15, -0.1, 0.12, -0.2, 0.1, 0.25;
  sc.desired = constant_pose(forward_kinematics(arm, sc.q0 + offset));
  sc.variant = variant;
  sc.horizon = 2.0;
  sc.dt = dt;
  sc.record_every = static_cast<int>(std::lround(1e-3 / dt));
  return run_closed_loop(arm, sc).max_dissipation_residual();
}

// 5. Geometric impedance control certificates.
CriterionResult gic_suite(Rng& rng) {
  double invariance = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const GicGains k = random_gains(rng);
    const Posed g_d = random_pose(rng), g = random_nearby(rng, g_d, 2.5), g_l = random_pose(rng);
    const Posed h = g_l * g, h_d = g_l * g_d;
    invariance = std::max({invariance, std::abs(psi1(h, h_d) - psi1(g, g_d)), std::abs(psi2(h, h_d) - psi2(g, g_d)),
                           (gcev(h, h_d) - gcev(g, g_d)).norm(),
                           (elastic_force_1(h, h_d, k) - elastic_force_1(g, g_d, k)).norm(),
                           (elastic_force_2(h, h_d, k) - elastic_force_2(g, g_d, k)).norm()});
  }

  double worst_order = INFINITY, worst_gradient = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const GicGains k = random_gains(rng);
    const Posed g_d = random_pose(rng), g = random_nearby(rng, g_d, 2.5);
    const Vector6d eta = random_twist(rng);
    auto fd = [&](auto f, double eps) {
      return (f(g * exp_se3<double>(eta, eps)) - f(g * exp_se3<double>(eta, -eps))) / (2 * eps);
    };
    auto p1 = [&](const Posed& x) { return potential_p1(x, g_d, k); };
    auto s1 = [&](const Posed& x) { return psi1(x, g_d); };
    const double exact_p = elastic_force_1(g, g_d, k).dot(eta), exact_s = gcev(g, g_d).dot(eta);
    for (const auto& [f, exact] : {std::pair<std::function<double(const Posed&)>, double>{p1, exact_p}, {s1, exact_s}}) {
      const double e2 = std::abs(fd(f, 1e-2) - exact), e3 = std::abs(fd(f, 1e-3) - exact);
      worst_order = std::min(worst_order, std::log10(e2 / e3));
      worst_gradient = std::max(worst_gradient, std::abs(fd(f, 1e-5) - exact) / (1.0 + std::abs(exact)));
    }
  }

  const double residual = arm_regulation_residual(GicVariant::LieGroup, 1e-4);
  const double residual_coarse = arm_regulation_residual(GicVariant::LieGroup, 2e-4);
  const double residual_v2 = arm_regulation_residual(GicVariant::LieAlgebra, 1e-4);

  std::vector<Posed> starts;
  for (int k = 0; k < 100; ++k)
    starts.emplace_back(random_rotation_within<double>(rng, std::numbers::pi - 0.2),
                        0.3 * Eigen::Vector3d(gaussian(rng), gaussian(rng), gaussian(rng)));
  double worst_psi[2] = {0.0, 0.0};
  for (int v = 0; v < 2; ++v) {
    std::vector<double> finals(starts.size());
    parallel_for(static_cast<int>(starts.size()), [&](int i) {
      GicScenario sc;
      sc.body0.g = starts[static_cast<std::size_t>(i)];
      sc.desired = constant_pose(Posed());
      sc.variant = v == 0 ? GicVariant::LieGroup : GicVariant::LieAlgebra;
      sc.horizon = 6.0;
      sc.dt = 1e-3;
      sc.record_every = 1000;
      finals[static_cast<std::size_t>(i)] = run_closed_loop(RigidBody{}, sc).final_psi();
    });
    worst_psi[v] = *std::max_element(finals.begin(), finals.end());
  }

  return {5, "gic certificates", 300.0,
          {below("left_invariance", invariance, 1e-10), at_least("fd_gradient_order", worst_order, 1.8),
           below("fd_gradient_error", worst_gradient, 1e-6), below("dissipation_residual_dt_1e-4", residual, 1e-5),
           info("dissipation_residual_dt_2e-4", residual_coarse),
           info("dissipation_residual_lie_algebra_variant", residual_v2),
           below("final_psi_lie_group_variant", worst_psi[0], 1e-6),
           below("final_psi_lie_algebra_variant", worst_psi[1], 1e-6)}};
}

// 6. Symmetry of the C4 gridworld.
CriterionResult mdp_suite() {
  CriterionResult c{6, "group-invariant mdp", 1.0, {}};
  const double tol = 1e-10;
  for (double slip : {0.0, 0.1}) {
    const std::string tag = slip == 0.0 ? "_deterministic" : "_slip";
    const TabularMdp mdp = make_c4_gridworld(0.95, slip);
    const GroupAction c4 = c4_grid_action();
    const InvarianceReport inv = verify_invariant_mdp(mdp, c4);
    const ValueIterationResult vi = value_iteration(mdp, tol);
    const SymmetryReport sym = check_symmetry_theorems(mdp, c4, vi, tol);
    const double oracle = (vi.Q - policy_evaluation(mdp, vi.policy)).cwiseAbs().maxCoeff();
    c.metrics.push_back(at_most("reward_violation" + tag, inv.reward_violation, 0.0));
    c.metrics.push_back(at_most("transition_violation" + tag, inv.transition_violation, 0.0));
    c.metrics.push_back(at_most("q_invariance_gap" + tag, sym.q_gap, sym.bound));
    c.metrics.push_back(at_most("argmax_set_mismatches" + tag, sym.argmax_mismatches, 0.0));
    c.metrics.push_back(info("tie_broken_mismatches" + tag, sym.tie_broken_mismatches));
    c.metrics.push_back(at_most("policy_evaluation_gap" + tag, oracle, sym.bound));
    c.metrics.push_back(info("sweeps" + tag, vi.sweeps));
  }
  return c;
}

// 7. Plant sanity.
CriterionResult plant_suite(Rng& rng) {
  const ManipulatorModel arm = make_elbow_6dof();
  double skew = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const DynamicsMatrices d = joint_dynamics(arm, gaussian_vector(rng, 6), gaussian_vector(rng, 6));
    const Eigen::MatrixXd n = d.Mdot - 2.0 * d.C;
    skew = std::max(skew, (n + n.transpose()).norm());
  }

  const ManipulatorModel free_arm = arm.with_gravity(Eigen::Vector3d::Zero());
  JointState s{gaussian_vector(rng, 6), gaussian_vector(rng, 6)};
  const double e0 = mechanical_energy(free_arm, s);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
  double drift = 0.0;
  for (int k = 0; k < 1000; ++k) {
    s = step_rk4(free_arm, s, zero, 1e-3);
    drift = std::max(drift, std::abs(mechanical_energy(free_arm, s) - e0));
  }

  const ManipulatorModel pendulum = make_pendulum(1.0, 1.0);
  auto run = [&](double dt) {
    JointState p{Eigen::VectorXd::Constant(1, 1.2), Eigen::VectorXd::Zero(1)};
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int k = 0; k < n; ++k) p = step_rk4(pendulum, p, Eigen::VectorXd::Zero(1), dt);
    return p.q(0);
  };
  const double ref = run(1e-4);
  const double ratio = std::abs(run(0.02) - ref) / std::abs(run(0.01) - ref);
  return {7, "plant sanity", 0.0,
          {below("passivity_skew_defect", skew, 1e-8), below("energy_drift", drift, 1e-6),
           within("rk4_halving_ratio", ratio, 12.0, 20.0)}};
}

}  // namespace

CriterionResult run_criterion(int id, std::uint64_t seed) {
  Rng rng = criterion_rng(seed, id);
  switch (id) {
    case 1: return lie_suite(rng);
    case 2: return representation_suite(rng);
    case 3: return tfn_suite(rng);
    case 4: return escn_suite(rng);
    case 5: return gic_suite(rng);
    case 6: return mdp_suite();
    case 7: return plant_suite(rng);
    default: throw Error(ErrorCode::InvalidInput, "criterion id must be in 1..7");
  }
}

Json criterion_to_json(const CriterionResult& c) {
  Json metrics = Json::array();
  for (const Metric& m : c.metrics) {
    Json j{{"name", m.name}, {"value", m.value}};
    if (std::isfinite(m.lower)) j["min"] = m.lower;
    if (std::isfinite(m.upper)) j[m.strict_upper ? "below" : "max"] = m.upper;
    if (m.checked()) j["passed"] = m.passed();
    metrics.push_back(std::move(j));
  }
  return Json{{"id", c.id}, {"name", c.name}, {"passed", c.passed()}, {"metrics", metrics}};
}

Json selftest_report(std::uint64_t seed) {
  Json criteria = Json::array();
  bool all = true;
  for (int id = 1; id <= kCriterionCount; ++id) {
    const CriterionResult c = run_criterion(id, seed);
    all = all && c.passed();
    criteria.push_back(criterion_to_json(c));
  }
  return Json{{"seed", seed}, {"passed", all}, {"criteria", criteria}};
}

}  // namespace se3kit
