#include "limdp/solvers.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "limdp/error.hpp"
#include "limdp/partition.hpp"

namespace limdp {

namespace {

void check_gamma(const ScenarioModel& model) {
  if (!(model.gamma() > 0 && model.gamma() < 1)) throw InvalidModelError("gamma must lie in (0, 1)");
}

double stop_threshold(double gamma, double epsilon) { return epsilon * (1 - gamma) / gamma; }

std::vector<int> sorted_members(std::vector<int> members, const ScenarioModel& model) {
  if (members.empty())
    for (int k = 0; k < model.num_agents(); ++k) members.push_back(k);
  std::sort(members.begin(), members.end());
  return members;
}

// Q(s, .) given a continuation table indexed like `space`.
void fill_q(const JointSpace& space, std::span<const int> local, std::span<const double> next, double gamma,
            std::vector<int>& actions, std::vector<double>& q) {
  q.resize(space.num_actions());
  for (std::size_t ai = 0; ai < space.num_actions(); ++ai) {
    space.decode_action(ai, actions);
    double expected = 0;
    space.for_each_successor(local, actions, [&](std::size_t succ, double p) { expected += p * next[succ]; });
    q[ai] = space.reward(local, actions) + gamma * expected;
  }
}

std::string member_state(const JointSpace& space, std::span<const int> local) {
  std::string out;
  for (int i = 0; i < space.arity(); ++i) {
    if (i) out += "|";
    const int k = space.members()[i];
    out += format_agent_state(space.model(), k, space.model().local_state(k, local[i]));
  }
  return out;
}

std::string member_action(const JointSpace& space, std::size_t index) {
  const auto actions = space.decode_action(index);
  std::string out;
  for (int i = 0; i < space.arity(); ++i) {
    if (i) out += "|";
    out += space.model().agent(space.members()[i]).actions[actions[i]];
  }
  return out;
}

}  // namespace

double ValueTable::at(const JointState& s) const {
  const auto local = space.model().to_local(s);
  return values[space.project(local)];
}

JointAction PolicyTable::at(const JointState& s) const {
  const auto local = space.model().to_local(s);
  const auto group = space.decode_action(actions[space.project(local)]);
  JointAction out(space.model().num_agents(), 0);
  for (int i = 0; i < space.arity(); ++i) out[space.members()[i]] = group[i];
  return out;
}

std::size_t greedy_index(std::span<const double> q, bool* near_tie) {
  const double best = *std::max_element(q.begin(), q.end());
  std::size_t chosen = q.size();
  int count = 0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] >= best - kTieTolerance) {
      if (chosen == q.size()) chosen = i;
      ++count;
    }
  if (near_tie) *near_tie = count > 1;
  return chosen;
}

Solution value_iteration(const ScenarioModel& model, double epsilon) { return value_iteration(model, {}, epsilon); }

Solution value_iteration(const ScenarioModel& model, std::vector<int> members, double epsilon) {
  check_gamma(model);
  if (!(epsilon > 0)) throw InvalidModelError("epsilon must be positive");
  const JointSpace space(model, sorted_members(std::move(members), model));
  const double gamma = model.gamma();
  const std::size_t ns = space.num_states(), na = space.num_actions();

  // Rewards are cached when the (state, action) table is small.
  std::vector<double> rewards;
  std::vector<int> local(space.arity()), actions(space.arity());
  const bool cache = ns * na <= 4'000'000;
  if (cache) {
    rewards.resize(ns * na);
    for (std::size_t s = 0; s < ns; ++s) {
      space.decode_state(s, local);
      for (std::size_t a = 0; a < na; ++a) {
        space.decode_action(a, actions);
        rewards[s * na + a] = space.reward(local, actions);
      }
    }
  }

  Solution out;
  out.values.space = space;
  out.values.epsilon = epsilon;
  std::vector<double> v(ns, 0.0), next(ns);
  const double threshold = stop_threshold(gamma, epsilon);
  while (true) {
    double residual = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      space.decode_state(s, local);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < na; ++a) {
        space.decode_action(a, actions);
        double expected = 0;
        space.for_each_successor(local, actions, [&](std::size_t succ, double p) { expected += p * v[succ]; });
        const double r = cache ? rewards[s * na + a] : space.reward(local, actions);
        best = std::max(best, r + gamma * expected);
      }
      next[s] = best;
      residual = std::max(residual, std::abs(best - v[s]));
    }
    v.swap(next);
    ++out.values.sweeps;
    out.values.residuals.push_back(residual);
    out.values.residual = residual;
    if (residual <= threshold) break;
  }
  out.values.values = std::move(v);

  out.policy.space = space;
  out.policy.actions.resize(ns);
  std::vector<double> q;
  for (std::size_t s = 0; s < ns; ++s) {
    space.decode_state(s, local);
    fill_q(space, local, out.values.values, gamma, actions, q);
    bool tie = false;
    out.policy.actions[s] = static_cast<std::uint32_t>(greedy_index(q, &tie));
    out.policy.near_ties += tie;
  }
  return out;
}

std::vector<double> q_values(const JointSpace& space, std::span<const double> values, std::size_t state) {
  std::vector<int> local = space.decode_state(state), actions(space.arity());
  std::vector<double> q;
  fill_q(space, local, values, space.model().gamma(), actions, q);
  return q;
}

ValueTable evaluate_action_table(const ScenarioModel& model, std::span<const std::uint32_t> table, double epsilon) {
  check_gamma(model);
  const JointSpace space = JointSpace::all(model);
  const std::size_t ns = space.num_states();
  if (table.size() != ns) throw PolicyError("policy table does not cover every joint state");
  const double gamma = model.gamma();
  std::vector<int> local(space.arity()), actions(space.arity());
  std::vector<double> reward(ns);
  std::vector<std::vector<std::pair<std::size_t, double>>> rows(ns);
  for (std::size_t s = 0; s < ns; ++s) {
    if (table[s] >= space.num_actions()) throw PolicyError("policy action index out of range");
    space.decode_state(s, local);
    space.decode_action(table[s], actions);
    reward[s] = space.reward(local, actions);
    space.for_each_successor(local, actions, [&](std::size_t succ, double p) { rows[s].emplace_back(succ, p); });
  }

  ValueTable out;
  out.space = space;
  out.epsilon = epsilon;
  if (ns <= kDirectSolveLimit) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t s = 0; s < ns; ++s) {
      triplets.emplace_back(static_cast<int>(s), static_cast<int>(s), 1.0);
      for (auto [succ, p] : rows[s]) triplets.emplace_back(static_cast<int>(s), static_cast<int>(succ), -gamma * p);
    }
    Eigen::SparseMatrix<double> a(static_cast<int>(ns), static_cast<int>(ns));
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) throw Error("sparse factorization of I - gamma P failed");
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(reward.data(), static_cast<int>(ns));
    Eigen::VectorXd x = lu.solve(b);
    out.values.assign(x.data(), x.data() + ns);
    return out;
  }

  std::vector<double> v(ns, 0.0), next(ns);
  const double threshold = stop_threshold(gamma, epsilon);
  while (true) {
    double residual = 0;
    for (std::size_t s = 0; s < ns; ++s) {
      double expected = 0;
      for (auto [succ, p] : rows[s]) expected += p * v[succ];
      next[s] = reward[s] + gamma * expected;
      residual = std::max(residual, std::abs(next[s] - v[s]));
    }
    v.swap(next);
    ++out.sweeps;
    out.residuals.push_back(residual);
    out.residual = residual;
    if (residual <= threshold) break;
  }
  out.values = std::move(v);
  return out;
}

ValueTable evaluate_policy(const ScenarioModel& model, const JointPolicy& policy, double epsilon) {
  const JointSpace space = JointSpace::all(model);
  std::vector<std::uint32_t> table(space.num_states());
  for (std::size_t s = 0; s < space.num_states(); ++s) {
    const auto state = space.joint_state(s);
    const auto action = policy(state);
    if (static_cast<int>(action.size()) != model.num_agents())
      throw PolicyError("policy returned an action of the wrong arity at " + format_joint_state(model, state));
    for (int k = 0; k < model.num_agents(); ++k)
      if (action[k] < 0 || action[k] >= model.agent(k).num_actions())
        throw PolicyError("policy returned an invalid action at " + format_joint_state(model, state));
    table[s] = static_cast<std::uint32_t>(space.action_index(action));
  }
  return evaluate_action_table(model, table, epsilon);
}

ValueTable evaluate_policy(const ScenarioModel& model, const PolicyTable& policy, double epsilon) {
  if (policy.space.arity() != model.num_agents()) throw PolicyError("policy table does not cover every agent");
  return evaluate_action_table(model, policy.actions, epsilon);
}

std::vector<double> FiniteHorizonTables::q(int h, std::size_t state) const {
  if (h < 0 || h >= horizon) throw InvalidStateError("finite-horizon step out of range");
  return q_values(space, values[h + 1], state);
}

FiniteHorizonTables finite_horizon_dp(const ScenarioModel& model, int horizon) {
  return finite_horizon_dp(model, {}, horizon);
}

FiniteHorizonTables finite_horizon_dp(const ScenarioModel& model, std::vector<int> members, int horizon) {
  if (horizon < 0) throw InvalidModelError("horizon must be non-negative");
  FiniteHorizonTables out;
  out.space = JointSpace(model, sorted_members(std::move(members), model));
  out.horizon = horizon;
  const auto& space = out.space;
  const std::size_t ns = space.num_states();
  out.values.assign(horizon + 1, std::vector<double>(ns, 0.0));
  out.policies.assign(horizon, std::vector<std::uint32_t>(ns, 0));
  std::vector<int> local(space.arity()), actions(space.arity());
  std::vector<double> q;
  for (int h = horizon - 1; h >= 0; --h) {
    for (std::size_t s = 0; s < ns; ++s) {
      space.decode_state(s, local);
      fill_q(space, local, out.values[h + 1], model.gamma(), actions, q);
      const auto best = greedy_index(q);
      out.policies[h][s] = static_cast<std::uint32_t>(best);
      out.values[h][s] = *std::max_element(q.begin(), q.end());
    }
  }
  return out;
}

// Cutoff atoms

namespace {

// Components of the members of `space` at state `local` (member order), as agent masks.
std::vector<std::uint32_t> member_components(const JointSpace& space, std::span<const int> local, double visibility) {
  const auto& model = space.model();
  const auto& members = space.members();
  auto positions = threshold_components(
      space.arity(), [&](int i, int j) { return model.local_distance(members[i], local[i], members[j], local[j]); },
      visibility);
  std::vector<std::uint32_t> out;
  for (auto m : positions) {
    std::uint32_t agents = 0;
    for (int i : mask_members(m)) agents |= 1u << members[i];
    out.push_back(agents);
  }
  return out;
}

std::vector<std::uint32_t> full_components(const ScenarioModel& model, std::uint32_t mask,
                                           std::span<const int> full_local, double visibility) {
  const auto members = mask_members(mask);
  auto positions = threshold_components(
      static_cast<int>(members.size()),
      [&](int i, int j) {
        return model.local_distance(members[i], full_local[members[i]], members[j], full_local[members[j]]);
      },
      visibility);
  std::vector<std::uint32_t> out;
  for (auto m : positions) {
    std::uint32_t agents = 0;
    for (int i : mask_members(m)) agents |= 1u << members[i];
    out.push_back(agents);
  }
  return out;
}

void scatter(const JointSpace& space, std::span<const int> local, std::vector<int>& full_local) {
  for (int i = 0; i < space.arity(); ++i) full_local[space.members()[i]] = local[i];
}

}  // namespace

CutoffSolver::CutoffSolver(const ScenarioModel& model, double epsilon, std::optional<double> visibility)
    : model_(&model), epsilon_(epsilon), visibility_(visibility.value_or(model.visibility())) {
  check_gamma(model);
  if (!(epsilon > 0)) throw InvalidModelError("epsilon must be positive");
}

const AtomTable& CutoffSolver::table(std::uint32_t mask) {
  if (auto it = tables_.find(mask); it != tables_.end()) return *it->second;
  return solve(mask);
}

void CutoffSolver::solve_all() {
  const int n = model_->num_agents();
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < (1u << n); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
  for (auto m : masks) table(m);
}

std::vector<std::uint32_t> CutoffSolver::components(std::uint32_t mask, std::span<const int> full_local) const {
  return full_components(*model_, mask, full_local, visibility_);
}

const AtomTable& CutoffSolver::solve(std::uint32_t mask) {
  if (mask == 0 || (model_->num_agents() < 32 && mask >> model_->num_agents()))
    throw InvalidStateError("agent subset outside the model");
  auto table = std::make_unique<AtomTable>();
  table->space = JointSpace(*model_, mask_members(mask));
  const auto& space = table->space;
  const std::size_t ns = space.num_states();
  const double gamma = model_->gamma();
  table->is_atom.assign(ns, 0);
  table->values.assign(ns, 0.0);
  table->policy.assign(ns, 0);

  std::vector<int> local(space.arity()), actions(space.arity()), full_local(model_->num_agents(), 0);
  std::vector<std::size_t> atoms;
  for (std::size_t s = 0; s < ns; ++s) {
    space.decode_state(s, local);
    const auto comps = member_components(space, local, visibility_);
    if (comps.size() == 1) {
      table->is_atom[s] = 1;
      atoms.push_back(s);
      continue;
    }
    scatter(space, local, full_local);
    double sum = 0;
    for (auto c : comps) {
      const auto& sub = this->table(c);
      sum += sub.values[sub.space.project(full_local)];
    }
    table->values[s] = sum;
  }
  table->num_atoms = atoms.size();

  std::vector<double> next = table->values;
  const double threshold = stop_threshold(gamma, std::ldexp(epsilon_, -model_->num_agents()));
  while (!atoms.empty()) {
    double residual = 0;
    for (auto s : atoms) {
      space.decode_state(s, local);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < space.num_actions(); ++a) {
        space.decode_action(a, actions);
        double expected = 0;
        space.for_each_successor(local, actions,
                                 [&](std::size_t succ, double p) { expected += p * table->values[succ]; });
        best = std::max(best, space.reward(local, actions) + gamma * expected);
      }
      next[s] = best;
      residual = std::max(residual, std::abs(best - table->values[s]));
    }
    for (auto s : atoms) table->values[s] = next[s];
    ++table->sweeps;
    table->residual = residual;
    if (residual <= threshold) break;
  }

  std::vector<double> q;
  for (auto s : atoms) {
    space.decode_state(s, local);
    fill_q(space, local, table->values, gamma, actions, q);
    bool tie = false;
    table->policy[s] = static_cast<std::uint32_t>(greedy_index(q, &tie));
    table->near_ties += tie;
  }
  auto& slot = tables_[mask];
  slot = std::move(table);
  return *slot;
}

double CutoffSolver::atom_value(std::uint32_t mask, std::span<const int> full_local) {
  const auto& t = table(mask);
  const auto s = t.space.project(full_local);
  if (!t.is_atom[s]) throw InvalidStateError("group state is not an atom of the cutoff model");
  return t.values[s];
}

double CutoffSolver::value(std::span<const int> full_local, std::span<const std::uint32_t> blocks) {
  double sum = 0;
  for (auto b : blocks) sum += atom_value(b, full_local);
  return sum;
}

std::vector<int> CutoffSolver::atom_action(std::uint32_t mask, std::span<const int> full_local) {
  const auto& t = table(mask);
  const auto s = t.space.project(full_local);
  if (!t.is_atom[s]) throw InvalidStateError("group state is not an atom of the cutoff model");
  return t.space.decode_action(t.policy[s]);
}

std::unique_ptr<CutoffSolver> cutoff_solve(const ScenarioModel& model, double epsilon) {
  auto solver = std::make_unique<CutoffSolver>(model, epsilon);
  solver->solve_all();
  return solver;
}

CutoffHorizonSolver::CutoffHorizonSolver(const ScenarioModel& model, int horizon, std::optional<double> visibility)
    : model_(&model), horizon_(horizon), visibility_(visibility.value_or(model.visibility())) {
  check_gamma(model);
  if (horizon < 0) throw InvalidModelError("horizon must be non-negative");
}

std::vector<std::uint32_t> CutoffHorizonSolver::components(std::uint32_t mask,
                                                           std::span<const int> full_local) const {
  return full_components(*model_, mask, full_local, visibility_);
}

const CutoffHorizonSolver::Tables& CutoffHorizonSolver::table(std::uint32_t mask) {
  if (auto it = tables_.find(mask); it != tables_.end()) return *it->second;
  return solve(mask);
}

const CutoffHorizonSolver::Tables& CutoffHorizonSolver::solve(std::uint32_t mask) {
  if (mask == 0 || (model_->num_agents() < 32 && mask >> model_->num_agents()))
    throw InvalidStateError("agent subset outside the model");
  auto t = std::make_unique<Tables>();
  t->space = JointSpace(*model_, mask_members(mask));
  const auto& space = t->space;
  const std::size_t ns = space.num_states();
  t->is_atom.assign(ns, 0);
  t->values.assign(horizon_ + 1, std::vector<double>(ns, 0.0));

  std::vector<int> local(space.arity()), actions(space.arity()), full_local(model_->num_agents(), 0);
  struct Split {
    std::size_t state;
    std::vector<std::pair<const Tables*, std::size_t>> parts;
  };
  std::vector<std::size_t> atoms;
  std::vector<Split> splits;
  for (std::size_t s = 0; s < ns; ++s) {
    space.decode_state(s, local);
    const auto comps = member_components(space, local, visibility_);
    if (comps.size() == 1) {
      t->is_atom[s] = 1;
      atoms.push_back(s);
      continue;
    }
    scatter(space, local, full_local);
    Split split{s, {}};
    for (auto c : comps) {
      const auto& sub = table(c);
      split.parts.emplace_back(&sub, sub.space.project(full_local));
    }
    splits.push_back(std::move(split));
  }

  std::vector<double> q;
  for (int h = horizon_ - 1; h >= 0; --h) {
    for (const auto& split : splits) {
      double sum = 0;
      for (auto [sub, index] : split.parts) sum += sub->values[h].at(index);
      t->values[h][split.state] = sum;
    }
    for (auto s : atoms) {
      space.decode_state(s, local);
      fill_q(space, local, t->values[h + 1], model_->gamma(), actions, q);
      t->values[h][s] = *std::max_element(q.begin(), q.end());
    }
  }
  auto& slot = tables_[mask];
  slot = std::move(t);
  return *slot;
}

std::vector<double> CutoffHorizonSolver::atom_q(std::uint32_t mask, int h, std::span<const int> full_local) {
  if (h < 0 || h >= horizon_) throw InvalidStateError("finite-horizon step out of range");
  const auto& t = table(mask);
  const auto s = t.space.project(full_local);
  if (!t.is_atom[s]) throw InvalidStateError("group state is not an atom of the cutoff model");
  return q_values(t.space, t.values[h + 1], s);
}

double CutoffHorizonSolver::joint_q0(std::span<const int> full_local, std::span<const int> actions) {
  if (horizon_ == 0) return 0.0;
  std::uint32_t all = 0;
  for (int k = 0; k < model_->num_agents(); ++k) all |= 1u << k;
  double total = 0;
  for (auto z : components(all, full_local)) {
    const auto members = mask_members(z);
    const auto& t = table(z);
    std::vector<int> group_actions;
    for (int k : members) group_actions.push_back(actions[k]);
    total += atom_q(z, 0, full_local)[t.space.action_index(group_actions)];
  }
  return total;
}

void write_csv(std::ostream& os, const ValueTable& values, const PolicyTable* policy) {
  os << "state,value,action\n";
  os << std::fixed << std::setprecision(6);
  const auto& space = values.space;
  std::vector<int> local(space.arity());
  for (std::size_t s = 0; s < space.num_states(); ++s) {
    space.decode_state(s, local);
    os << member_state(space, local) << "," << values.values[s] << ",";
    if (policy) os << member_action(space, policy->actions[s]);
    os << "\n";
  }
}

void write_atom_csv(std::ostream& os, CutoffSolver& solver) {
  os << "subset,state,value,action\n";
  os << std::fixed << std::setprecision(6);
  solver.solve_all();
  const int n = solver.model().num_agents();
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < (1u << n); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](std::uint32_t a, std::uint32_t b) { return std::popcount(a) < std::popcount(b); });
  for (auto m : masks) {
    const auto& t = solver.table(m);
    std::string subset;
    for (int k : mask_members(m)) subset += (subset.empty() ? "" : "+") + std::to_string(k);
    std::vector<int> local(t.space.arity());
    for (std::size_t s = 0; s < t.space.num_states(); ++s) {
      if (!t.is_atom[s]) continue;
      t.space.decode_state(s, local);
      os << subset << "," << member_state(t.space, local) << "," << t.values[s] << ","
         << member_action(t.space, t.policy[s]) << "\n";
    }
  }
}

}  // namespace limdp
