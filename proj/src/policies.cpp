#include "limdp/policies.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "limdp/error.hpp"

namespace limdp {

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::JointOptimal:
      return "optimal";
    case PolicyKind::Amalgam:
      return "amalgam";
    case PolicyKind::Cutoff:
      return "cutoff";
    case PolicyKind::FirstStepFiniteHorizon:
      return "fsfho";
    case PolicyKind::External:
      return "external";
  }
  return "unknown";
}

std::optional<PolicyKind> parse_policy_kind(const std::string& name) {
  if (name == "optimal") return PolicyKind::JointOptimal;
  if (name == "amalgam") return PolicyKind::Amalgam;
  if (name == "cutoff") return PolicyKind::Cutoff;
  if (name == "fsfho") return PolicyKind::FirstStepFiniteHorizon;
  return std::nullopt;
}

GroupDecentralizedPolicy::GroupDecentralizedPolicy(const ScenarioModel& model, PolicyKind kind, PolicyOptions options)
    : model_(&model), kind_(kind), options_(std::move(options)) {
  visibility_ = options_.visibility.value_or(model.visibility());
  if (options_.visibility && !(*options_.visibility <= model.visibility()))
    throw InvalidModelError("visibility override must not exceed the model's V");
  c_ = limdp::dependence_horizon(visibility_, model.dependence_radius());
  horizon_ = options_.horizon.value_or(c_ + 1);
  if (horizon_ < 0) throw InvalidModelError("horizon must be non-negative");
  if (options_.group_cap && *options_.group_cap < 1) throw InvalidModelError("group cap must be at least 1");
  if (kind_ == PolicyKind::External && !options_.external)
    throw PolicyError("external policy kind requires a group policy callback");
}

Partition GroupDecentralizedPolicy::groups(const JointState& s) const {
  return visibility_partition(*model_, s, visibility_);
}

JointAction GroupDecentralizedPolicy::action(const JointState& s) { return action_local(model_->to_local(s)); }

JointAction GroupDecentralizedPolicy::action_local(std::span<const int> local) {
  std::lock_guard lock(mutex_);
  const int n = model_->num_agents();
  JointAction out(n, 0);
  if (kind_ == PolicyKind::JointOptimal) {
    if (!joint_) joint_ = value_iteration(*model_, options_.epsilon);
    const auto& space = joint_->policy.space;
    const auto actions = space.decode_action(joint_->policy.actions[space.state_index(local)]);
    std::copy(actions.begin(), actions.end(), out.begin());
    return out;
  }
  const auto partition = visibility_partition_local(*model_, local, visibility_);
  for (auto z : partition.masks()) {
    if (options_.group_cap && std::popcount(z) > *options_.group_cap) {
      std::string members;
      for (int k : mask_members(z)) members += (members.empty() ? "" : ",") + std::to_string(k);
      throw GroupCapExceededError("visibility group {" + members + "} has " + std::to_string(std::popcount(z)) +
                                  " agents, above the cap of " + std::to_string(*options_.group_cap));
    }
    const auto members = mask_members(z);
    const auto actions = group_action(z, local);
    for (std::size_t i = 0; i < members.size(); ++i) out[members[i]] = actions[i];
  }
  return out;
}

std::vector<int> GroupDecentralizedPolicy::group_action(std::uint32_t mask, std::span<const int> local) {
  const auto members = mask_members(mask);
  switch (kind_) {
    case PolicyKind::Amalgam: {
      auto it = amalgam_.find(mask);
      if (it == amalgam_.end()) it = amalgam_.emplace(mask, value_iteration(*model_, members, options_.epsilon)).first;
      const auto& space = it->second.policy.space;
      return space.decode_action(it->second.policy.actions[space.project(local)]);
    }
    case PolicyKind::Cutoff: {
      if (!cutoff_) cutoff_ = std::make_unique<CutoffSolver>(*model_, options_.epsilon, visibility_);
      return cutoff_->atom_action(mask, local);
    }
    case PolicyKind::FirstStepFiniteHorizon: {
      if (!fsfho_) fsfho_ = std::make_unique<CutoffHorizonSolver>(*model_, horizon_, visibility_);
      if (horizon_ == 0) return std::vector<int>(members.size(), 0);
      const auto q = fsfho_->atom_q(mask, 0, local);
      return fsfho_->table(mask).space.decode_action(greedy_index(q));
    }
    case PolicyKind::External: {
      std::vector<AgentState> states;
      for (int k : members) states.push_back(model_->local_state(k, local[k]));
      auto actions = options_.external(members, states);
      if (actions.size() != members.size()) throw PolicyError("external policy returned the wrong number of actions");
      for (std::size_t i = 0; i < members.size(); ++i)
        if (actions[i] < 0 || actions[i] >= model_->agent(members[i]).num_actions())
          throw PolicyError("external policy returned an invalid action");
      return actions;
    }
    case PolicyKind::JointOptimal:
      break;
  }
  throw PolicyError("unsupported policy kind");
}

std::vector<std::uint32_t> GroupDecentralizedPolicy::cached_subsets() const {
  std::vector<std::uint32_t> out;
  for (const auto& [mask, solution] : amalgam_) out.push_back(mask);
  return out;
}

std::optional<double> effective_visibility(const ScenarioModel& model, const JointState& s, int L) {
  if (L < 1) throw InvalidModelError("group size limit must be at least 1");
  if (!model.space().integer_valued()) throw InvalidModelError("effective visibility requires an integer metric");
  const auto local = model.to_local(s);
  for (double v = std::floor(model.visibility()); v > model.dependence_radius(); v -= 1) {
    const auto p = visibility_partition_local(model, local, v);
    bool fits = true;
    for (auto m : p.masks()) fits = fits && std::popcount(m) <= L;
    if (fits) return v;
  }
  return std::nullopt;
}

double theorem_bound(PolicyKind kind, double gamma, int c, double r_tilde) {
  const double tail = std::pow(gamma, c + 1) * r_tilde;
  switch (kind) {
    case PolicyKind::Amalgam:
      return 2 / ((1 - gamma) * (1 - gamma)) * tail;
    case PolicyKind::Cutoff:
      return (2 - gamma) / ((1 - gamma) * (1 - gamma)) * tail;
    case PolicyKind::FirstStepFiniteHorizon:
      return 2 / (1 - gamma) * tail;
    case PolicyKind::JointOptimal:
      return 0;
    case PolicyKind::External:
      break;
  }
  throw PolicyError("no theorem bound exists for external policies");
}

double lower_bound_value(double gamma, int c, double r_tilde) {
  return 0.5 * std::pow(gamma, c + 2) / (1 - gamma) * r_tilde;
}

GapReport policy_gap_report(const ScenarioModel& model, PolicyKind kind, const PolicyOptions& options,
                            bool keep_rows) {
  const auto v_star = value_iteration(model, options.epsilon).values;
  return policy_gap_report(model, kind, options, v_star, keep_rows);
}

GapReport policy_gap_report(const ScenarioModel& model, PolicyKind kind, const PolicyOptions& options,
                            const ValueTable& v_star, bool keep_rows) {
  GroupDecentralizedPolicy policy(model, kind, options);
  const auto v_pi = evaluate_policy(model, [&](const JointState& s) { return policy.action(s); }, options.epsilon);
  GapReport report;
  report.kind = kind;
  report.c = policy.dependence_horizon();
  report.r_tilde = sup_reward(model);
  report.bound = theorem_bound(kind, model.gamma(), report.c, report.r_tilde);
  report.tolerance = 3 * options.epsilon;
  const auto& space = v_pi.space;
  for (std::size_t s = 0; s < space.num_states(); ++s) {
    const double gap = std::abs(v_star.values[s] - v_pi.values[s]);
    if (gap > report.max_gap || report.worst_state.empty()) {
      report.max_gap = gap;
      report.worst_state = format_joint_state(model, space.joint_state(s));
    }
    if (keep_rows)
      report.rows.push_back({format_joint_state(model, space.joint_state(s)), v_star.values[s], v_pi.values[s], gap});
  }
  report.passed = report.max_gap <= report.bound + report.tolerance;
  return report;
}

void write_gap_csv(std::ostream& os, const GapReport& report) {
  os << "state,v_star,v_pi,gap,bound,pass\n";
  os << std::fixed << std::setprecision(6);
  for (const auto& row : report.rows)
    os << row.state << "," << row.v_star << "," << row.v_pi << "," << row.gap << "," << report.bound << ","
       << (row.gap <= report.bound + report.tolerance ? "true" : "false") << "\n";
}

}  // namespace limdp
