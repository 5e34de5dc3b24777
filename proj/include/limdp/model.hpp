#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "limdp/metric_space.hpp"

namespace limdp {

inline constexpr std::size_t kDefaultStateBudget = 5'000'000;
inline constexpr int kMaxAgents = 32;

/// Position plus internal state of one agent.
struct AgentState {
  int location = 0;
  int internal = 0;
  auto operator<=>(const AgentState&) const = default;
};

struct JointState {
  std::vector<AgentState> agents;
  auto operator<=>(const JointState&) const = default;
};

/// One action index per agent, in agent order.
using JointAction = std::vector<int>;

struct Outcome {
  int state = 0;  ///< local state index of the successor
  double probability = 0;
};

/// Local dynamics of a single agent.
///
/// `states` enumerates the agent's local state space; it defaults to the full
/// product of locations and internal states but may be restricted to a set
/// closed under the transitions. Transition and reward tables are indexed by
/// `state * actions.size() + action`.
struct AgentSpec {
  std::string name;
  std::vector<std::string> internal_states{"-"};
  std::vector<std::string> actions;
  std::vector<AgentState> states;
  std::vector<std::vector<Outcome>> transitions;
  std::vector<double> rewards;
  int start = 0;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  std::size_t slot(int state, int action) const {
    return static_cast<std::size_t>(state) * actions.size() + static_cast<std::size_t>(action);
  }
};

/// Interdependent reward r̄_{j,k} for ordered pairs whose distance lies in
/// [distance_min, distance_max] and whose internal states and actions match.
/// The band is clipped to the model's dependence radius when compiled.
struct PairwiseRewardRule {
  std::optional<std::pair<int, int>> pair;  ///< nullopt applies to all ordered pairs
  double distance_min = 0;
  double distance_max = 0;
  std::optional<std::vector<std::string>> internal_j;
  std::optional<std::vector<std::string>> internal_k;
  std::optional<std::vector<std::string>> action_j;
  std::optional<std::vector<std::string>> action_k;
  double value = 0;
};

/// A complete Locally Interdependent Multi-Agent MDP instance.
///
/// Construction resolves all references and compiles reward tables; it throws
/// InvalidModelError only for structural defects (dangling indices, missing
/// table entries). Semantic constraints such as V > R or the unit motion bound
/// are reported by validate_model() so malformed models can still be inspected.
/// Immutable after construction.
class ScenarioModel {
 public:
  ScenarioModel(std::string name, MetricSpace space, std::vector<AgentSpec> agents,
                std::vector<PairwiseRewardRule> rules, double dependence_radius, double visibility,
                double gamma, std::size_t state_budget = kDefaultStateBudget);

  const std::string& name() const { return name_; }
  const std::string& description() const { return description_; }
  void set_description(std::string text) { description_ = std::move(text); }

  const MetricSpace& space() const { return space_; }
  int num_agents() const { return static_cast<int>(agents_.size()); }
  const AgentSpec& agent(int k) const { return agents_.at(k); }
  const std::vector<AgentSpec>& agents() const { return agents_; }
  const std::vector<PairwiseRewardRule>& rules() const { return rules_; }

  double dependence_radius() const { return dependence_radius_; }
  double visibility() const { return visibility_; }
  double gamma() const { return gamma_; }
  std::size_t state_budget() const { return state_budget_; }

  /// Local state index of `state` for agent k, or -1 when it is not in S_k.
  int local_index(int k, AgentState state) const;
  const AgentState& local_state(int k, int index) const { return agents_[k].states[index]; }

  double local_distance(int j, int ls_j, int k, int ls_k) const {
    return space_.distance(agents_[j].states[ls_j].location, agents_[k].states[ls_k].location);
  }
  double local_reward(int k, int ls, int action) const { return agents_[k].rewards[agents_[k].slot(ls, action)]; }
  const std::vector<Outcome>& local_successors(int k, int ls, int action) const {
    return agents_[k].transitions[agents_[k].slot(ls, action)];
  }

  /// Ordered-pair interdependent reward r̄_{j,k}; exactly zero beyond R.
  double pair_reward(int j, int k, int ls_j, int a_j, int ls_k, int a_k) const;

  /// r̄_{j,k} + r̄_{k,j} for j < k, served from a precompiled table.
  double pair_sum(int j, int k, int ls_j, int a_j, int ls_k, int a_k) const {
    const auto& table = pair_tables_[static_cast<std::size_t>(j) * agents_.size() + k];
    if (table.empty()) return 0.0;
    const auto& aj = agents_[j];
    const auto& ak = agents_[k];
    return table[((static_cast<std::size_t>(ls_j) * aj.actions.size() + a_j) * ak.states.size() + ls_k) *
                     ak.actions.size() +
                 a_k];
  }
  bool pair_interacts(int j, int k) const {
    return !pair_tables_[static_cast<std::size_t>(j) * agents_.size() + k].empty();
  }

  /// Product of |S_k| over `members`, saturating at SIZE_MAX.
  std::size_t joint_size(std::span<const int> members) const;
  std::size_t joint_size() const;

  /// Cached sup |r(s,a)|; absent when the joint space exceeds the budget.
  std::optional<double> cached_sup_reward() const { return sup_reward_; }

  JointState start_state() const;

  /// Converts a joint state to per-agent local indices; throws InvalidStateError.
  std::vector<int> to_local(const JointState& s) const;
  JointState from_local(std::span<const int> local) const;

 private:
  double compute_sup_reward() const;

  std::string name_;
  std::string description_;
  MetricSpace space_;
  std::vector<AgentSpec> agents_;
  std::vector<PairwiseRewardRule> rules_;
  double dependence_radius_;
  double visibility_;
  double gamma_;
  std::size_t state_budget_;

  struct CompiledRule {
    double lo, hi, value;
    std::vector<char> internal_j, internal_k, action_j, action_k;  // empty = any
  };
  std::vector<std::vector<CompiledRule>> ordered_rules_;  // [j * n + k]
  std::vector<std::vector<double>> pair_tables_;          // [j * n + k], j < k
  std::vector<std::vector<int>> lookup_;                  // [k][location * |Y_k| + internal]
  std::optional<double> sup_reward_;
};

/// Metric distance between the locations of two agent states.
double distance(const ScenarioModel& model, const AgentState& s_j, const AgentState& s_k);

/// r(s, a): local rewards plus the ordered-pair sum of interdependent rewards.
double joint_reward(const ScenarioModel& model, const JointState& s, const JointAction& a);

/// r_g(s_g, a_g): rewards internal to the agent subset `group`.
double group_reward(const ScenarioModel& model, std::span<const int> group, const JointState& s,
                    const JointAction& a);

/// All successors with nonzero probability, as the product of the per-agent
/// distributions, in lexicographic order of local state indices.
std::vector<std::pair<JointState, double>> enumerate_successors(const ScenarioModel& model,
                                                                const JointState& s,
                                                                const JointAction& a);

/// Exact max |r(s,a)| over the joint space; EnumerationBudgetError when it is
/// too large to enumerate.
double sup_reward(const ScenarioModel& model);

/// The model restricted to `members`, keeping their specs and the rules
/// between them. Agent i of the result is members[i].
ScenarioModel submodel(const ScenarioModel& model, std::span<const int> members);

std::string format_agent_state(const ScenarioModel& model, int k, const AgentState& state);
std::string format_joint_state(const ScenarioModel& model, const JointState& s);
std::string format_joint_action(const ScenarioModel& model, const JointAction& a);

}  // namespace limdp
