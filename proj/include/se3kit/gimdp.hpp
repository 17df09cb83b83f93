#pragma once

// Tabular MDPs with a finite symmetry group acting by permutations.

#include <vector>

#include "se3kit/core.hpp"

namespace se3kit {

struct TabularMdp {
  int states = 0;
  int actions = 0;
  std::vector<double> transition;  // [s][a][s'] flattened, s' fastest
  Eigen::MatrixXd reward;          // states x actions
  double gamma = 0.9;

  TabularMdp() = default;
  TabularMdp(int states_, int actions_, double gamma_);

  double& P(int s, int a, int s2) { return transition[index(s, a, s2)]; }
  double P(int s, int a, int s2) const { return transition[index(s, a, s2)]; }

  /// Throws InvalidInput on shape errors, rows not summing to 1 +- 1e-12,
  /// negative probabilities, non-finite rewards or gamma outside (0, 1).
  void validate() const;

 private:
  std::size_t index(int s, int a, int s2) const {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(actions) + static_cast<std::size_t>(a)) *
               static_cast<std::size_t>(states) +
           static_cast<std::size_t>(s2);
  }
};

/// Element g acts as s -> state_perm[g][s], a -> action_perm[g][a].
struct GroupAction {
  std::vector<std::vector<int>> state_perm;
  std::vector<std::vector<int>> action_perm;

  int size() const { return static_cast<int>(state_perm.size()); }

  /// Identity only.
  static GroupAction trivial(int states, int actions);

  /// Permutations, identity present, closed under composition.
  void validate(int states, int actions) const;
};

struct InvarianceReport {
  bool reward_invariant = false;
  bool transition_invariant = false;
  double reward_violation = 0.0;
  double transition_violation = 0.0;
};

/// max |R(g.s, g.a) - R(s, a)| and max |P(g.s' | g.s, g.a) - P(s' | s, a)|.
InvarianceReport verify_invariant_mdp(const TabularMdp& mdp, const GroupAction& group, double tolerance = 0.0);

struct ValueIterationResult {
  Eigen::MatrixXd Q;
  std::vector<int> policy;  // lowest-index maximiser
  int sweeps = 0;
  double residual = 0.0;     // |T Q - Q|_inf at exit
  std::vector<double> gaps;  // |Q_{k+1} - Q_k|_inf per sweep
};

/// Sweeps until the Bellman residual drops below tol.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, int max_sweeps = 1000000);

/// Exact Q^pi from (I - gamma P_pi) V = R_pi.
Eigen::MatrixXd policy_evaluation(const TabularMdp& mdp, const std::vector<int>& policy);

/// Actions within tie_tol of the row maximum.
std::vector<int> argmax_set(const Eigen::MatrixXd& q, int s, double tie_tol);

struct SymmetryReport {
  double q_gap = 0.0;
  double bound = 0.0;
  bool q_invariant = false;
  int argmax_mismatches = 0;     // states where argmax(g.s) != g.argmax(s) as sets
  int tie_broken_mismatches = 0;  // same check on the single lowest-index action
  bool argmax_equivariant = false;
};

/// Q gap against 2 tol / (1 - gamma) and argmax-set equivariance, with ties
/// resolved at twice that bound.
SymmetryReport check_symmetry_theorems(const TabularMdp& mdp, const GroupAction& group,
                                       const ValueIterationResult& result, double tol);

/// 5 x 5 grid, moves along +x, +y, -x, -y, goal at the centre (absorbing, no
/// reward once there). Reward is the probability of entering the goal. With
/// `slip` > 0 the move goes sideways with probability slip / 2 each way.
TabularMdp make_c4_gridworld(double gamma, double slip = 0.0);

/// Quarter turns about the centre; actions shift cyclically.
GroupAction c4_grid_action();

}  // namespace se3kit
