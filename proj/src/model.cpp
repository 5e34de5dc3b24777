#include "limdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "limdp/error.hpp"

namespace limdp {

namespace {

std::vector<char> resolve_names(const std::optional<std::vector<std::string>>& names,
                                const std::vector<std::string>& universe) {
  if (!names) return {};
  std::vector<char> mask(universe.size(), 0);
  for (const auto& n : *names) {
    auto it = std::find(universe.begin(), universe.end(), n);
    if (it != universe.end()) mask[it - universe.begin()] = 1;
  }
  return mask;
}

bool matches(const std::vector<char>& mask, int index) { return mask.empty() || mask[index] != 0; }

// Odometer over mixed radices; returns false after the last combination.
bool next_digits(std::vector<int>& digits, std::span<const int> radices) {
  for (int i = static_cast<int>(digits.size()) - 1; i >= 0; --i) {
    if (++digits[i] < radices[i]) return true;
    digits[i] = 0;
  }
  return false;
}

}  // namespace

ScenarioModel::ScenarioModel(std::string name, MetricSpace space, std::vector<AgentSpec> agents,
                             std::vector<PairwiseRewardRule> rules, double dependence_radius,
                             double visibility, double gamma, std::size_t state_budget)
    : name_(std::move(name)),
      space_(std::move(space)),
      agents_(std::move(agents)),
      rules_(std::move(rules)),
      dependence_radius_(dependence_radius),
      visibility_(visibility),
      gamma_(gamma),
      state_budget_(state_budget) {
  const int n = num_agents();
  if (n == 0) throw InvalidModelError("model has no agents");
  if (n > kMaxAgents) throw InvalidModelError("at most 32 agents are supported");
  if (space_.size() == 0) throw InvalidModelError("metric space has no locations");
  if (!std::isfinite(dependence_radius_) || dependence_radius_ < 0)
    throw InvalidModelError("dependence radius R must be finite and non-negative");
  if (!std::isfinite(visibility_) || !std::isfinite(gamma_))
    throw InvalidModelError("visibility and gamma must be finite");

  lookup_.resize(n);
  for (int k = 0; k < n; ++k) {
    auto& spec = agents_[k];
    const std::string who = "agent " + std::to_string(k);
    if (spec.actions.empty()) throw InvalidModelError(who + " has no actions");
    if (spec.internal_states.empty()) throw InvalidModelError(who + " has no internal states");
    if (spec.states.empty()) {
      for (int loc = 0; loc < space_.size(); ++loc)
        for (int y = 0; y < static_cast<int>(spec.internal_states.size()); ++y) spec.states.push_back({loc, y});
    }
    auto& table = lookup_[k];
    table.assign(static_cast<std::size_t>(space_.size()) * spec.internal_states.size(), -1);
    for (int i = 0; i < spec.num_states(); ++i) {
      const auto& st = spec.states[i];
      if (!space_.contains(st.location) || st.internal < 0 ||
          st.internal >= static_cast<int>(spec.internal_states.size()))
        throw InvalidModelError(who + " declares a state outside the model");
      auto& entry = table[static_cast<std::size_t>(st.location) * spec.internal_states.size() + st.internal];
      if (entry != -1) throw InvalidModelError(who + " declares a duplicate state");
      entry = i;
    }
    const std::size_t slots = static_cast<std::size_t>(spec.num_states()) * spec.actions.size();
    if (spec.transitions.size() != slots)
      throw InvalidModelError(who + " transition table does not cover every (state, action)");
    if (spec.rewards.empty()) spec.rewards.assign(slots, 0.0);
    if (spec.rewards.size() != slots)
      throw InvalidModelError(who + " reward table does not cover every (state, action)");
    for (auto& outcomes : spec.transitions) {
      if (outcomes.empty()) throw InvalidModelError(who + " has an empty transition distribution");
      for (const auto& o : outcomes)
        if (o.state < 0 || o.state >= spec.num_states() || !(o.probability >= 0))
          throw InvalidModelError(who + " transition references an unknown state or negative probability");
      std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.state < b.state; });
      std::vector<Outcome> merged;
      for (const auto& o : outcomes) {
        if (!merged.empty() && merged.back().state == o.state)
          merged.back().probability += o.probability;
        else
          merged.push_back(o);
      }
      std::erase_if(merged, [](const Outcome& o) { return o.probability == 0.0; });
      if (merged.empty()) throw InvalidModelError(who + " has a transition distribution with zero mass");
      outcomes = std::move(merged);
    }
    if (spec.start < 0 || spec.start >= spec.num_states()) throw InvalidModelError(who + " start state is invalid");
  }

  ordered_rules_.assign(static_cast<std::size_t>(n) * n, {});
  for (const auto& rule : rules_) {
    if (rule.pair) {
      auto [j, k] = *rule.pair;
      if (j < 0 || k < 0 || j >= n || k >= n || j == k)
        throw InvalidModelError("pairwise rule names an invalid agent pair");
    }
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (j == k) continue;
        if (rule.pair && *rule.pair != std::pair{j, k}) continue;
        CompiledRule c;
        c.lo = rule.distance_min;
        c.hi = std::min(rule.distance_max, dependence_radius_);
        c.value = rule.value;
        c.internal_j = resolve_names(rule.internal_j, agents_[j].internal_states);
        c.internal_k = resolve_names(rule.internal_k, agents_[k].internal_states);
        c.action_j = resolve_names(rule.action_j, agents_[j].actions);
        c.action_k = resolve_names(rule.action_k, agents_[k].actions);
        if (c.lo <= c.hi && c.value != 0.0) ordered_rules_[static_cast<std::size_t>(j) * n + k].push_back(std::move(c));
      }
    }
  }

  pair_tables_.assign(static_cast<std::size_t>(n) * n, {});
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      if (ordered_rules_[static_cast<std::size_t>(j) * n + k].empty() &&
          ordered_rules_[static_cast<std::size_t>(k) * n + j].empty())
        continue;
      const auto& aj = agents_[j];
      const auto& ak = agents_[k];
      auto& table = pair_tables_[static_cast<std::size_t>(j) * n + k];
      table.resize(static_cast<std::size_t>(aj.num_states()) * aj.actions.size() * ak.num_states() * ak.actions.size());
      std::size_t idx = 0;
      for (int sj = 0; sj < aj.num_states(); ++sj)
        for (int a = 0; a < aj.num_actions(); ++a)
          for (int sk = 0; sk < ak.num_states(); ++sk)
            for (int b = 0; b < ak.num_actions(); ++b)
              table[idx++] = pair_reward(j, k, sj, a, sk, b) + pair_reward(k, j, sk, b, sj, a);
    }
  }

  if (joint_size() <= state_budget_) sup_reward_ = compute_sup_reward();
}

int ScenarioModel::local_index(int k, AgentState state) const {
  if (k < 0 || k >= num_agents()) return -1;
  const auto& spec = agents_[k];
  if (!space_.contains(state.location) || state.internal < 0 ||
      state.internal >= static_cast<int>(spec.internal_states.size()))
    return -1;
  return lookup_[k][static_cast<std::size_t>(state.location) * spec.internal_states.size() + state.internal];
}

double ScenarioModel::pair_reward(int j, int k, int ls_j, int a_j, int ls_k, int a_k) const {
  const auto& rules = ordered_rules_[static_cast<std::size_t>(j) * agents_.size() + k];
  if (rules.empty()) return 0.0;
  const double d = local_distance(j, ls_j, k, ls_k);
  if (d > dependence_radius_) return 0.0;
  const int yj = agents_[j].states[ls_j].internal;
  const int yk = agents_[k].states[ls_k].internal;
  double total = 0;
  for (const auto& r : rules) {
    if (d < r.lo || d > r.hi) continue;
    if (!matches(r.internal_j, yj) || !matches(r.internal_k, yk)) continue;
    if (!matches(r.action_j, a_j) || !matches(r.action_k, a_k)) continue;
    total += r.value;
  }
  return total;
}

std::size_t ScenarioModel::joint_size(std::span<const int> members) const {
  std::size_t total = 1;
  for (int k : members) {
    const auto s = static_cast<std::size_t>(agents_.at(k).num_states());
    if (total > std::numeric_limits<std::size_t>::max() / s) return std::numeric_limits<std::size_t>::max();
    total *= s;
  }
  return total;
}

std::size_t ScenarioModel::joint_size() const {
  std::vector<int> all(agents_.size());
  for (int k = 0; k < num_agents(); ++k) all[k] = k;
  return joint_size(all);
}

JointState ScenarioModel::start_state() const {
  JointState s;
  for (const auto& a : agents_) s.agents.push_back(a.states[a.start]);
  return s;
}

std::vector<int> ScenarioModel::to_local(const JointState& s) const {
  if (static_cast<int>(s.agents.size()) != num_agents())
    throw InvalidStateError("joint state has " + std::to_string(s.agents.size()) + " agents, model has " +
                            std::to_string(num_agents()));
  std::vector<int> local(s.agents.size());
  for (int k = 0; k < num_agents(); ++k) {
    local[k] = local_index(k, s.agents[k]);
    if (local[k] < 0) throw InvalidStateError("agent " + std::to_string(k) + " state is not in its state space");
  }
  return local;
}

JointState ScenarioModel::from_local(std::span<const int> local) const {
  JointState s;
  s.agents.reserve(local.size());
  for (std::size_t k = 0; k < local.size(); ++k) s.agents.push_back(agents_[k].states[local[k]]);
  return s;
}

double ScenarioModel::compute_sup_reward() const {
  // max r and min r split over components of the interaction graph.
  const int n = num_agents();
  std::vector<int> component(n, -1);
  double hi = 0, lo = 0;
  for (int root = 0; root < n; ++root) {
    if (component[root] >= 0) continue;
    std::vector<int> members{root};
    component[root] = root;
    for (std::size_t i = 0; i < members.size(); ++i)
      for (int k = 0; k < n; ++k)
        if (component[k] < 0 && pair_interacts(std::min(members[i], k), std::max(members[i], k))) {
          component[k] = root;
          members.push_back(k);
        }
    std::sort(members.begin(), members.end());
    const int m = static_cast<int>(members.size());
    std::vector<int> state_radix(m), action_radix(m), ls(m, 0);
    for (int i = 0; i < m; ++i) {
      state_radix[i] = agents_[members[i]].num_states();
      action_radix[i] = agents_[members[i]].num_actions();
    }
    double best = -std::numeric_limits<double>::infinity(), worst = std::numeric_limits<double>::infinity();
    do {
      std::vector<int> a(m, 0);
      do {
        double r = 0;
        for (int i = 0; i < m; ++i) r += local_reward(members[i], ls[i], a[i]);
        for (int i = 0; i < m; ++i)
          for (int j = i + 1; j < m; ++j) r += pair_sum(members[i], members[j], ls[i], a[i], ls[j], a[j]);
        best = std::max(best, r);
        worst = std::min(worst, r);
      } while (next_digits(a, action_radix));
    } while (next_digits(ls, state_radix));
    hi += best;
    lo += worst;
  }
  return std::max(std::abs(hi), std::abs(lo));
}

double distance(const ScenarioModel& model, const AgentState& s_j, const AgentState& s_k) {
  const auto& space = model.space();
  if (!space.contains(s_j.location) || !space.contains(s_k.location))
    throw InvalidStateError("location is not in the metric space");
  return space.distance(s_j.location, s_k.location);
}

namespace {

void check_action(const ScenarioModel& model, const JointAction& a) {
  if (static_cast<int>(a.size()) != model.num_agents()) throw InvalidStateError("joint action has wrong arity");
  for (int k = 0; k < model.num_agents(); ++k)
    if (a[k] < 0 || a[k] >= model.agent(k).num_actions())
      throw InvalidStateError("action index out of range for agent " + std::to_string(k));
}

}  // namespace

double joint_reward(const ScenarioModel& model, const JointState& s, const JointAction& a) {
  std::vector<int> all(model.num_agents());
  for (int k = 0; k < model.num_agents(); ++k) all[k] = k;
  return group_reward(model, all, s, a);
}

double group_reward(const ScenarioModel& model, std::span<const int> group, const JointState& s,
                    const JointAction& a) {
  const auto ls = model.to_local(s);
  check_action(model, a);
  double r = 0;
  for (int k : group) r += model.local_reward(k, ls[k], a[k]);
  for (std::size_t x = 0; x < group.size(); ++x) {
    for (std::size_t y = x + 1; y < group.size(); ++y) {
      const int j = std::min(group[x], group[y]);
      const int k = std::max(group[x], group[y]);
      r += model.pair_sum(j, k, ls[j], a[j], ls[k], a[k]);
    }
  }
  return r;
}

std::vector<std::pair<JointState, double>> enumerate_successors(const ScenarioModel& model,
                                                                const JointState& s,
                                                                const JointAction& a) {
  const auto ls = model.to_local(s);
  check_action(model, a);
  std::vector<std::pair<std::vector<int>, double>> partial{{{}, 1.0}};
  for (int k = 0; k < model.num_agents(); ++k) {
    std::vector<std::pair<std::vector<int>, double>> next;
    for (const auto& [prefix, p] : partial) {
      for (const auto& o : model.local_successors(k, ls[k], a[k])) {
        auto extended = prefix;
        extended.push_back(o.state);
        next.emplace_back(std::move(extended), p * o.probability);
      }
    }
    partial = std::move(next);
  }
  std::vector<std::pair<JointState, double>> out;
  out.reserve(partial.size());
  for (const auto& [local, p] : partial) out.emplace_back(model.from_local(local), p);
  return out;
}

double sup_reward(const ScenarioModel& model) {
  if (auto cached = model.cached_sup_reward()) return *cached;
  throw EnumerationBudgetError("joint state space of '" + model.name() + "' exceeds the enumeration budget of " +
                               std::to_string(model.state_budget()) + " states");
}

ScenarioModel submodel(const ScenarioModel& model, std::span<const int> members) {
  std::vector<AgentSpec> specs;
  std::vector<int> remap(model.num_agents(), -1);
  for (std::size_t i = 0; i < members.size(); ++i) {
    specs.push_back(model.agent(members[i]));
    remap.at(members[i]) = static_cast<int>(i);
  }
  std::vector<PairwiseRewardRule> rules;
  for (auto rule : model.rules()) {
    if (rule.pair) {
      const int j = remap[rule.pair->first];
      const int k = remap[rule.pair->second];
      if (j < 0 || k < 0) continue;
      rule.pair = std::pair{j, k};
    }
    rules.push_back(std::move(rule));
  }
  std::ostringstream name;
  name << model.name() << "[";
  for (std::size_t i = 0; i < members.size(); ++i) name << (i ? "," : "") << members[i];
  name << "]";
  return ScenarioModel(name.str(), model.space(), std::move(specs), std::move(rules), model.dependence_radius(),
                       model.visibility(), model.gamma(), model.state_budget());
}

std::string format_agent_state(const ScenarioModel& model, int k, const AgentState& state) {
  const auto& space = model.space();
  std::string out;
  if (space.is_grid())
    out = std::to_string(state.location % space.width()) + ":" + std::to_string(state.location / space.width());
  else
    out = space.name(state.location);
  const auto& spec = model.agent(k);
  if (spec.internal_states.size() > 1) out += "@" + spec.internal_states.at(state.internal);
  return out;
}

std::string format_joint_state(const ScenarioModel& model, const JointState& s) {
  std::string out;
  for (std::size_t k = 0; k < s.agents.size(); ++k) {
    if (k) out += "|";
    out += format_agent_state(model, static_cast<int>(k), s.agents[k]);
  }
  return out;
}

std::string format_joint_action(const ScenarioModel& model, const JointAction& a) {
  std::string out;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k) out += "|";
    out += model.agent(static_cast<int>(k)).actions.at(a[k]);
  }
  return out;
}

}  // namespace limdp
