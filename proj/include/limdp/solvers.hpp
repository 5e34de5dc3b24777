#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "limdp/joint_space.hpp"
#include "limdp/model.hpp"

namespace limdp {

inline constexpr double kDefaultEpsilon = 1e-6;
/// Maximizers within this margin of the best Q value count as ties.
inline constexpr double kTieTolerance = 1e-9;
/// Policy evaluation switches from a sparse direct solve to iteration above this size.
inline constexpr std::size_t kDirectSolveLimit = 20'000;

struct ValueTable {
  JointSpace space;
  std::vector<double> values;
  double residual = 0;
  double epsilon = 0;
  int sweeps = 0;
  std::vector<double> residuals;  ///< sup-norm change per sweep

  double at(std::span<const int> local) const { return values[space.state_index(local)]; }
  double at(const JointState& s) const;
};

struct PolicyTable {
  JointSpace space;
  std::vector<std::uint32_t> actions;  ///< joint action index per state
  std::size_t near_ties = 0;           ///< states with a second maximizer within kTieTolerance

  JointAction at(const JointState& s) const;
};

struct Solution {
  ValueTable values;
  PolicyTable policy;
};

/// Index of the lexicographically least action whose Q is within kTieTolerance of the maximum.
std::size_t greedy_index(std::span<const double> q, bool* near_tie = nullptr);

/// Jacobi value iteration on the product MDP of `members` (all agents when
/// empty). Stops once the residual is at most epsilon (1 - gamma) / gamma.
Solution value_iteration(const ScenarioModel& model, double epsilon = kDefaultEpsilon);
Solution value_iteration(const ScenarioModel& model, std::vector<int> members, double epsilon = kDefaultEpsilon);

/// Q(s, .) for one state of `space` given a value table over the same space.
std::vector<double> q_values(const JointSpace& space, std::span<const double> values, std::size_t state);

using JointPolicy = std::function<JointAction(const JointState&)>;

/// V^pi on the full joint space. Exact sparse LU solve up to kDirectSolveLimit
/// states, fixed-policy iteration otherwise.
ValueTable evaluate_policy(const ScenarioModel& model, const JointPolicy& policy, double epsilon = kDefaultEpsilon);
ValueTable evaluate_policy(const ScenarioModel& model, const PolicyTable& policy, double epsilon = kDefaultEpsilon);
/// Same, from a joint action index per state of JointSpace::all(model).
ValueTable evaluate_action_table(const ScenarioModel& model, std::span<const std::uint32_t> actions,
                                 double epsilon = kDefaultEpsilon);

/// Backward induction with `horizon` reward steps: values[horizon] is zero and
/// policies[h] is greedy for values[h].
struct FiniteHorizonTables {
  JointSpace space;
  int horizon = 0;
  std::vector<std::vector<double>> values;         ///< h = 0..horizon
  std::vector<std::vector<std::uint32_t>> policies;  ///< h = 0..horizon-1

  /// Q_h(s, .) = r(s, .) + gamma * E[V_{h+1}(s')].
  std::vector<double> q(int h, std::size_t state) const;
};

FiniteHorizonTables finite_horizon_dp(const ScenarioModel& model, int horizon);
FiniteHorizonTables finite_horizon_dp(const ScenarioModel& model, std::vector<int> members, int horizon);

/// Values of the Cutoff Multi-Agent MDP at atom states (s_g, {g}) for one subset g.
struct AtomTable {
  JointSpace space;
  std::vector<char> is_atom;
  std::vector<double> values;          ///< NaN outside atoms
  std::vector<std::uint32_t> policy;   ///< greedy joint action index at atoms
  double residual = 0;
  int sweeps = 0;
  std::size_t num_atoms = 0;
  std::size_t near_ties = 0;
};

/// Lazily solves atom tables subset by subset; each subset's Bellman system
/// uses the already solved tables of its proper subsets for successor states
/// that split. Each table is solved to epsilon / 2^n so that every V^C((s, C))
/// is within epsilon. Visibility defaults to the model's V.
class CutoffSolver {
 public:
  explicit CutoffSolver(const ScenarioModel& model, double epsilon = kDefaultEpsilon,
                        std::optional<double> visibility = std::nullopt);

  const ScenarioModel& model() const { return *model_; }
  double visibility() const { return visibility_; }
  double epsilon() const { return epsilon_; }

  const AtomTable& table(std::uint32_t mask);
  /// Solves every non-empty subset of the agents.
  void solve_all();
  bool solved(std::uint32_t mask) const { return tables_.count(mask) != 0; }

  /// V^C((s_g, {g})) from full-model local indices; s_g must be an atom.
  double atom_value(std::uint32_t mask, std::span<const int> full_local);
  /// V^C((s, C)) = sum over blocks of C of the block-restricted atom values.
  double value(std::span<const int> full_local, std::span<const std::uint32_t> blocks);
  /// Group action at the atom (g, s_g), in member order.
  std::vector<int> atom_action(std::uint32_t mask, std::span<const int> full_local);

  /// Visibility components of s_g restricted to the members of `mask`.
  std::vector<std::uint32_t> components(std::uint32_t mask, std::span<const int> full_local) const;

 private:
  const AtomTable& solve(std::uint32_t mask);

  const ScenarioModel* model_;
  double epsilon_;
  double visibility_;
  std::map<std::uint32_t, std::unique_ptr<AtomTable>> tables_;
};

/// Convenience: every subset solved.
std::unique_ptr<CutoffSolver> cutoff_solve(const ScenarioModel& model, double epsilon = kDefaultEpsilon);

/// Finite-horizon backward recursion of the Cutoff Multi-Agent MDP restricted
/// to atoms, solved lazily per subset.
class CutoffHorizonSolver {
 public:
  CutoffHorizonSolver(const ScenarioModel& model, int horizon, std::optional<double> visibility = std::nullopt);

  int horizon() const { return horizon_; }
  const ScenarioModel& model() const { return *model_; }

  struct Tables {
    JointSpace space;
    std::vector<char> is_atom;
    std::vector<std::vector<double>> values;  ///< h = 0..horizon, NaN outside atoms
  };
  const Tables& table(std::uint32_t mask);

  /// Q_h^C((s_g, {g}), a_g) for every group action, in member-order action index.
  std::vector<double> atom_q(std::uint32_t mask, int h, std::span<const int> full_local);
  /// Q_0^C((s, Z(s)), a) for a full joint action.
  double joint_q0(std::span<const int> full_local, std::span<const int> actions);

  std::vector<std::uint32_t> components(std::uint32_t mask, std::span<const int> full_local) const;

 private:
  const Tables& solve(std::uint32_t mask);
  double successor_value(std::uint32_t mask, int h, const JointSpace& space, std::size_t succ,
                         std::vector<int>& scratch);

  const ScenarioModel* model_;
  int horizon_;
  double visibility_;
  std::map<std::uint32_t, std::unique_ptr<Tables>> tables_;
};

/// CSV export with columns state,value,action (atom tables add subset first).
void write_csv(std::ostream& os, const ValueTable& values, const PolicyTable* policy);
void write_atom_csv(std::ostream& os, CutoffSolver& solver);

}  // namespace limdp
