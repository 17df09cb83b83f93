#include "se3kit/gimdp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace se3kit {

TabularMdp::TabularMdp(int states_, int actions_, double gamma_)
    : states(states_),
      actions(actions_),
      transition(static_cast<std::size_t>(std::max(states_, 0)) * static_cast<std::size_t>(std::max(actions_, 0)) *
                     static_cast<std::size_t>(std::max(states_, 0)),
                 0.0),
      reward(Eigen::MatrixXd::Zero(std::max(states_, 0), std::max(actions_, 0))),
      gamma(gamma_) {}

void TabularMdp::validate() const {
  if (states < 1 || actions < 1) throw Error(ErrorCode::InvalidInput, "MDP needs states and actions");
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::InvalidInput, "gamma must lie in (0, 1)");
  if (transition.size() != static_cast<std::size_t>(states) * actions * states || reward.rows() != states ||
      reward.cols() != actions)
    throw Error(ErrorCode::InvalidInput, "MDP tensor shapes do not match");
  if (!reward.allFinite()) throw Error(ErrorCode::InvalidInput, "rewards must be finite");
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions; ++a) {
      double total = 0.0;
      for (int s2 = 0; s2 < states; ++s2) {
        const double p = P(s, a, s2);
        if (!(p >= 0.0)) throw Error(ErrorCode::InvalidInput, "negative transition probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::InvalidInput, "transition row does not sum to 1");
    }
}

GroupAction GroupAction::trivial(int states, int actions) {
  GroupAction g;
  g.state_perm.emplace_back(static_cast<std::size_t>(states));
  g.action_perm.emplace_back(static_cast<std::size_t>(actions));
  for (int s = 0; s < states; ++s) g.state_perm[0][static_cast<std::size_t>(s)] = s;
  for (int a = 0; a < actions; ++a) g.action_perm[0][static_cast<std::size_t>(a)] = a;
  return g;
}

namespace {

bool is_permutation(const std::vector<int>& p, int n) {
  if (static_cast<int>(p.size()) != n) return false;
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int v : p) {
    if (v < 0 || v >= n || seen[static_cast<std::size_t>(v)]) return false;
    seen[static_cast<std::size_t>(v)] = true;
  }
  return true;
}

std::vector<int> compose(const std::vector<int>& outer, const std::vector<int>& inner) {
  std::vector<int> out(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) out[i] = outer[static_cast<std::size_t>(inner[i])];
  return out;
}

}  // namespace

void GroupAction::validate(int states, int actions) const {
  if (state_perm.empty() || state_perm.size() != action_perm.size())
    throw Error(ErrorCode::InvalidInput, "group needs matching state and action permutations");
  std::set<std::pair<std::vector<int>, std::vector<int>>> elements;
  bool identity = false;
  for (int g = 0; g < size(); ++g) {
    const auto& ps = state_perm[static_cast<std::size_t>(g)];
    const auto& pa = action_perm[static_cast<std::size_t>(g)];
    if (!is_permutation(ps, states) || !is_permutation(pa, actions))
      throw Error(ErrorCode::InvalidInput, "group element is not a permutation");
    identity = identity || (std::is_sorted(ps.begin(), ps.end()) && std::is_sorted(pa.begin(), pa.end()));
    elements.insert({ps, pa});
  }
  if (!identity) throw Error(ErrorCode::InvalidInput, "group lacks the identity");
  for (int g = 0; g < size(); ++g)
    for (int h = 0; h < size(); ++h) {
      const auto gh = std::make_pair(compose(state_perm[static_cast<std::size_t>(g)], state_perm[static_cast<std::size_t>(h)]),
                                     compose(action_perm[static_cast<std::size_t>(g)], action_perm[static_cast<std::size_t>(h)]));
      if (!elements.count(gh)) throw Error(ErrorCode::InvalidInput, "group is not closed under composition");
    }
}

InvarianceReport verify_invariant_mdp(const TabularMdp& mdp, const GroupAction& group, double tolerance) {
  mdp.validate();
  group.validate(mdp.states, mdp.actions);
  InvarianceReport r;
  for (int g = 0; g < group.size(); ++g) {
    const auto& ps = group.state_perm[static_cast<std::size_t>(g)];
    const auto& pa = group.action_perm[static_cast<std::size_t>(g)];
    for (int s = 0; s < mdp.states; ++s)
      for (int a = 0; a < mdp.actions; ++a) {
        const int gs = ps[static_cast<std::size_t>(s)], ga = pa[static_cast<std::size_t>(a)];
        r.reward_violation = std::max(r.reward_violation, std::abs(mdp.reward(gs, ga) - mdp.reward(s, a)));
        for (int s2 = 0; s2 < mdp.states; ++s2)
          r.transition_violation = std::max(
              r.transition_violation, std::abs(mdp.P(gs, ga, ps[static_cast<std::size_t>(s2)]) - mdp.P(s, a, s2)));
      }
  }
  r.reward_invariant = r.reward_violation <= tolerance;
  r.transition_invariant = r.transition_violation <= tolerance;
  return r;
}

namespace {

Eigen::MatrixXd bellman(const TabularMdp& mdp, const Eigen::MatrixXd& q) {
  const Eigen::VectorXd v = q.rowwise().maxCoeff();
  Eigen::MatrixXd out = mdp.reward;
  for (int s = 0; s < mdp.states; ++s)
    for (int a = 0; a < mdp.actions; ++a) {
      double ev = 0.0;
      for (int s2 = 0; s2 < mdp.states; ++s2) ev += mdp.P(s, a, s2) * v(s2);
      out(s, a) += mdp.gamma * ev;
    }
  return out;
}

}  // namespace

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, int max_sweeps) {
  mdp.validate();
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidInput, "tolerance must be positive");
  ValueIterationResult out;
  out.Q = Eigen::MatrixXd::Zero(mdp.states, mdp.actions);
  Eigen::MatrixXd next = bellman(mdp, out.Q);
  out.residual = (next - out.Q).cwiseAbs().maxCoeff();
  while (out.residual >= tol && out.sweeps < max_sweeps) {
    out.gaps.push_back(out.residual);
    out.Q = std::move(next);
    ++out.sweeps;
    next = bellman(mdp, out.Q);
    out.residual = (next - out.Q).cwiseAbs().maxCoeff();
  }
  if (out.residual >= tol) throw Error(ErrorCode::InvalidInput, "value iteration did not converge");
  out.policy.resize(static_cast<std::size_t>(mdp.states));
  for (int s = 0; s < mdp.states; ++s) out.Q.row(s).maxCoeff(&out.policy[static_cast<std::size_t>(s)]);
  return out;
}

Eigen::MatrixXd policy_evaluation(const TabularMdp& mdp, const std::vector<int>& policy) {
  mdp.validate();
  if (static_cast<int>(policy.size()) != mdp.states) throw Error(ErrorCode::DimensionMismatch, "policy size");
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(mdp.states, mdp.states);
  Eigen::VectorXd b(mdp.states);
  for (int s = 0; s < mdp.states; ++s) {
    const int act = policy[static_cast<std::size_t>(s)];
    b(s) = mdp.reward(s, act);
    for (int s2 = 0; s2 < mdp.states; ++s2) a(s, s2) -= mdp.gamma * mdp.P(s, act, s2);
  }
  const Eigen::VectorXd v = a.partialPivLu().solve(b);
  Eigen::MatrixXd q = mdp.reward;
  for (int s = 0; s < mdp.states; ++s)
    for (int act = 0; act < mdp.actions; ++act)
      for (int s2 = 0; s2 < mdp.states; ++s2) q(s, act) += mdp.gamma * mdp.P(s, act, s2) * v(s2);
  return q;
}

std::vector<int> argmax_set(const Eigen::MatrixXd& q, int s, double tie_tol) {
  const double top = q.row(s).maxCoeff();
  std::vector<int> out;
  for (int a = 0; a < q.cols(); ++a)
    if (q(s, a) >= top - tie_tol) out.push_back(a);
  return out;
}

SymmetryReport check_symmetry_theorems(const TabularMdp& mdp, const GroupAction& group,
                                       const ValueIterationResult& result, double tol) {
  group.validate(mdp.states, mdp.actions);
  SymmetryReport r;
  r.bound = 2.0 * tol / (1.0 - mdp.gamma);
  const double tie_tol = 2.0 * r.bound;
  const Eigen::MatrixXd& q = result.Q;
  for (int g = 0; g < group.size(); ++g) {
    const auto& ps = group.state_perm[static_cast<std::size_t>(g)];
    const auto& pa = group.action_perm[static_cast<std::size_t>(g)];
    for (int s = 0; s < mdp.states; ++s) {
      const int gs = ps[static_cast<std::size_t>(s)];
      for (int a = 0; a < mdp.actions; ++a)
        r.q_gap = std::max(r.q_gap, std::abs(q(gs, pa[static_cast<std::size_t>(a)]) - q(s, a)));
      std::vector<int> mapped;
      for (int a : argmax_set(q, s, tie_tol)) mapped.push_back(pa[static_cast<std::size_t>(a)]);
      std::sort(mapped.begin(), mapped.end());
      if (mapped != argmax_set(q, gs, tie_tol)) ++r.argmax_mismatches;
      if (result.policy[static_cast<std::size_t>(gs)] != pa[static_cast<std::size_t>(result.policy[static_cast<std::size_t>(s)])])
        ++r.tie_broken_mismatches;
    }
  }
  r.q_invariant = r.q_gap <= r.bound;
  r.argmax_equivariant = r.argmax_mismatches == 0;
  return r;
}

namespace {

constexpr int kGrid = 5;
constexpr int kCentre = kGrid / 2;

int cell(int x, int y) { return (y + kCentre) * kGrid + (x + kCentre); }

bool inside(int x, int y) { return std::abs(x) <= kCentre && std::abs(y) <= kCentre; }

// Direction k is the quarter turn of +x applied k times.
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};

}  // namespace

TabularMdp make_c4_gridworld(double gamma, double slip) {
  if (!(slip >= 0.0 && slip <= 1.0)) throw Error(ErrorCode::InvalidInput, "slip must lie in [0, 1]");
  TabularMdp mdp(kGrid * kGrid, 4, gamma);
  const int goal = cell(0, 0);
  for (int y = -kCentre; y <= kCentre; ++y)
    for (int x = -kCentre; x <= kCentre; ++x) {
      const int s = cell(x, y);
      for (int a = 0; a < 4; ++a) {
        if (s == goal) {
          mdp.P(s, a, s) = 1.0;
          continue;
        }
        const int dirs[3] = {a, (a + 1) % 4, (a + 3) % 4};
        const double probs[3] = {1.0 - slip, 0.5 * slip, 0.5 * slip};
        for (int k = 0; k < 3; ++k) {
          if (probs[k] == 0.0) continue;
          const int nx = x + kDx[dirs[k]], ny = y + kDy[dirs[k]];
          const int s2 = inside(nx, ny) ? cell(nx, ny) : s;
          mdp.P(s, a, s2) += probs[k];
        }
        mdp.reward(s, a) = mdp.P(s, a, goal);
      }
    }
  mdp.validate();
  return mdp;
}

GroupAction c4_grid_action() {
  GroupAction g;
  for (int k = 0; k < 4; ++k) {
    std::vector<int> ps(kGrid * kGrid), pa(4);
    for (int y = -kCentre; y <= kCentre; ++y)
      for (int x = -kCentre; x <= kCentre; ++x) {
        int rx = x, ry = y;
        for (int t = 0; t < k; ++t) std::tie(rx, ry) = std::make_pair(-ry, rx);
        ps[static_cast<std::size_t>(cell(x, y))] = cell(rx, ry);
      }
    for (int a = 0; a < 4; ++a) pa[static_cast<std::size_t>(a)] = (a + k) % 4;
    g.state_perm.push_back(std::move(ps));
    g.action_perm.push_back(std::move(pa));
  }
  return g;
}

}  // namespace se3kit
