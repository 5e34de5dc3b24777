#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "limdp/model.hpp"
#include "limdp/partition.hpp"
#include "limdp/solvers.hpp"

namespace limdp {

enum class PolicyKind { JointOptimal, Amalgam, Cutoff, FirstStepFiniteHorizon, External };

const char* to_string(PolicyKind kind);
/// Accepts optimal, amalgam, cutoff, fsfho.
std::optional<PolicyKind> parse_policy_kind(const std::string& name);

/// Extension point for externally supplied group policies: receives the sorted
/// member indices and their states, returns one action per member.
using ExternalGroupPolicy =
    std::function<std::vector<int>(std::span<const int> members, std::span<const AgentState> group_state)>;

struct PolicyOptions {
  double epsilon = kDefaultEpsilon;
  std::optional<int> group_cap;
  std::optional<double> visibility;  ///< V' with R < V' <= V
  std::optional<int> horizon;        ///< reward steps for FSFHO; defaults to c + 1
  ExternalGroupPolicy external;
};

/// λ, χ, φ and the joint optimal reference behind one action query.
/// Per-subset tables are solved on first use and cached.
class GroupDecentralizedPolicy {
 public:
  GroupDecentralizedPolicy(const ScenarioModel& model, PolicyKind kind, PolicyOptions options = {});

  PolicyKind kind() const { return kind_; }
  const ScenarioModel& model() const { return *model_; }
  double visibility() const { return visibility_; }
  int dependence_horizon() const { return c_; }
  /// Reward steps of the finite-horizon problem behind φ.
  int horizon() const { return horizon_; }
  std::optional<int> group_cap() const { return options_.group_cap; }

  JointAction action(const JointState& s);
  JointAction operator()(const JointState& s) { return action(s); }
  JointAction action_local(std::span<const int> local);

  /// Groups the policy decentralizes over at s (visibility partition under V').
  Partition groups(const JointState& s) const;

  /// Subsets whose tables have been solved.
  std::vector<std::uint32_t> cached_subsets() const;

 private:
  std::vector<int> group_action(std::uint32_t mask, std::span<const int> local);

  const ScenarioModel* model_;
  PolicyKind kind_;
  PolicyOptions options_;
  double visibility_;
  int c_;
  int horizon_;
  std::mutex mutex_;
  std::optional<Solution> joint_;
  std::map<std::uint32_t, Solution> amalgam_;
  std::unique_ptr<CutoffSolver> cutoff_;
  std::unique_ptr<CutoffHorizonSolver> fsfho_;
};

/// Largest integer V' <= V with V' > R whose visibility groups at s all have at
/// most L agents; nullopt when no such V' exists. Integer metrics only.
std::optional<double> effective_visibility(const ScenarioModel& model, const JointState& s, int L);

/// Upper bound on max_s |V*(s) - V^pi(s)| for the given policy kind.
double theorem_bound(PolicyKind kind, double gamma, int c, double r_tilde);
/// Lower bound 1/2 gamma^{c+2} / (1 - gamma) r~ on the best group decentralized policy.
double lower_bound_value(double gamma, int c, double r_tilde);

struct GapRow {
  std::string state;
  double v_star = 0;
  double v_pi = 0;
  double gap = 0;
};

struct GapReport {
  PolicyKind kind = PolicyKind::Amalgam;
  int c = 0;
  double r_tilde = 0;
  double bound = 0;
  double tolerance = 0;
  double max_gap = 0;
  std::string worst_state;
  bool passed = true;
  std::vector<GapRow> rows;
};

/// Exact V^pi against V* on the full joint space, with the matching theorem bound.
GapReport policy_gap_report(const ScenarioModel& model, PolicyKind kind, const PolicyOptions& options = {},
                            bool keep_rows = true);
/// Same, reusing a previously computed V*.
GapReport policy_gap_report(const ScenarioModel& model, PolicyKind kind, const PolicyOptions& options,
                            const ValueTable& v_star, bool keep_rows = true);

void write_gap_csv(std::ostream& os, const GapReport& report);

}  // namespace limdp
