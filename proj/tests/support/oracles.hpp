#pragma once

// Second implementations used to cross-check the library. They share no code
// with the solvers: everything is recomputed from the raw agent specs and
// rule lists with ordered maps and dense linear algebra.

#include <map>
#include <vector>

#include "limdp/model.hpp"

namespace oracle {

using limdp::JointAction;
using limdp::JointState;
using limdp::ScenarioModel;

std::vector<JointState> all_states(const ScenarioModel& model);
std::vector<JointAction> all_actions(const ScenarioModel& model);

/// Groups of the threshold graph found by breadth-first search.
std::vector<std::vector<int>> bfs_groups(const ScenarioModel& model, const JointState& s, double visibility);

/// Per-agent convolution accumulated in an ordered map.
std::map<JointState, double> successors(const ScenarioModel& model, const JointState& s, const JointAction& a);

/// Local rewards plus every matching rule, evaluated from the rule list.
double reward(const ScenarioModel& model, const JointState& s, const JointAction& a);
/// Same, restricted to agents in `group`.
double group_reward(const ScenarioModel& model, const std::vector<int>& group, const JointState& s,
                    const JointAction& a);

double sup_reward(const ScenarioModel& model);

/// Explicit tabular MDP over all joint states.
struct Tabular {
  std::vector<JointState> states;
  std::map<JointState, int> index;
  std::vector<JointAction> actions;
  std::vector<std::vector<double>> r;                             // [s][a]
  std::vector<std::vector<std::vector<std::pair<int, double>>>> p;  // [s][a] -> (s', prob)
  double gamma = 0;
};
Tabular tabulate(const ScenarioModel& model);

/// Howard policy iteration with dense LU solves; returns V* and a policy.
std::vector<double> policy_iteration(const Tabular& mdp, std::vector<int>* policy = nullptr);
/// V^pi by a dense linear solve.
std::vector<double> evaluate(const Tabular& mdp, const std::vector<int>& policy);

/// Closed-loop expectimax over the full action tree: max over a of q_tree.
double v_tree(const Tabular& mdp, int s, int depth);
double q_tree(const Tabular& mdp, int s, int a, int depth);

/// Z-sequence fold C(T) = Z(0) ∩ ... ∩ Z(T), on explicit member lists.
std::vector<std::vector<int>> intersect_groups(const std::vector<std::vector<int>>& a,
                                               const std::vector<std::vector<int>>& b);
bool finer(const std::vector<std::vector<int>>& a, const std::vector<std::vector<int>>& b);

}  // namespace oracle
