#include "limdp/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include "json.hpp"
#include <ostream>
#include <sstream>

#include "limdp/error.hpp"

namespace limdp {

int default_rollout_horizon(const ScenarioModel& model, double epsilon) {
  const double r_tilde = sup_reward(model);
  const double gamma = model.gamma();
  if (r_tilde == 0) return 1;
  const double t = std::ceil(std::log(epsilon * (1 - gamma) / r_tilde) / std::log(gamma));
  return std::max(1, static_cast<int>(t));
}

SuccessorSampler::SuccessorSampler(std::uint64_t seed) : rng_(seed) {}

std::size_t SuccessorSampler::pick(const std::vector<std::pair<JointState, double>>& successors) {
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  double cumulative = 0;
  for (std::size_t i = 0; i < successors.size(); ++i) {
    cumulative += successors[i].second;
    if (u < cumulative) return i;
  }
  return successors.size() - 1;
}

namespace {

JointAction checked_action(const ScenarioModel& model, const JointPolicy& policy, const JointState& s) {
  auto a = policy(s);
  if (static_cast<int>(a.size()) != model.num_agents()) throw PolicyError("policy returned an action of wrong arity");
  for (int k = 0; k < model.num_agents(); ++k)
    if (a[k] < 0 || a[k] >= model.agent(k).num_actions()) throw PolicyError("policy returned an invalid action");
  return a;
}

// Visibility refinement applied block by block.
Partition refine_blocks(const ScenarioModel& model, const Partition& c, const JointState& s) {
  const auto local = model.to_local(s);
  std::vector<std::uint32_t> masks;
  for (auto block : c.masks()) {
    const auto members = mask_members(block);
    auto comps = threshold_components(
        static_cast<int>(members.size()),
        [&](int i, int j) {
          return model.local_distance(members[i], local[members[i]], members[j], local[members[j]]);
        },
        model.visibility());
    for (auto m : comps) {
      std::uint32_t agents = 0;
      for (int i : mask_members(m)) agents |= 1u << members[i];
      masks.push_back(agents);
    }
  }
  return Partition::from_masks(model.num_agents(), std::move(masks));
}

double block_reward(const ScenarioModel& model, const Partition& c, const JointState& s, const JointAction& a) {
  double r = 0;
  for (auto block : c.masks()) r += group_reward(model, mask_members(block), s, a);
  return r;
}

Trajectory run(const ScenarioModel& model, const JointPolicy& policy, const JointState& s0, int T, std::uint64_t seed,
               bool cutoff) {
  if (T < 1) throw InvalidModelError("rollout length must be at least 1");
  model.to_local(s0);
  Trajectory out;
  out.seed = seed;
  out.horizon = T;
  SuccessorSampler sampler(seed);
  JointState s = s0;
  Partition c = visibility_partition(model, s);
  double discount = 1;
  for (int t = 0; t < T; ++t) {
    TrajectoryStep step;
    step.t = t;
    step.state = s;
    step.z = visibility_partition(model, s);
    if (t > 0) c = cutoff ? refine_blocks(model, c, s) : intersect(step.z, c);
    step.c = c;
    step.action = checked_action(model, policy, s);
    step.reward = cutoff ? block_reward(model, c, s, step.action) : joint_reward(model, s, step.action);
    out.discounted_return += discount * step.reward;
    discount *= model.gamma();
    const auto successors = enumerate_successors(model, s, step.action);
    const auto& chosen = successors[sampler.pick(successors)];
    if (!(chosen.second > 0)) throw Error("sampled a successor with zero probability");
    out.steps.push_back(std::move(step));
    s = chosen.first;
  }
  out.final_state = s;
  return out;
}

}  // namespace

Trajectory rollout(const ScenarioModel& model, const JointPolicy& policy, const JointState& s0, int T,
                   std::uint64_t seed) {
  return run(model, policy, s0, T, seed, false);
}

Trajectory cutoff_rollout(const ScenarioModel& model, const JointPolicy& policy, const JointState& s0, int T,
                          std::uint64_t seed) {
  return run(model, policy, s0, T, seed, true);
}

std::vector<DtlViolation> check_dependence_time(const ScenarioModel& model, const Trajectory& trajectory,
                                                double tolerance) {
  std::vector<DtlViolation> out;
  const int c = dependence_horizon(model);
  const int len = static_cast<int>(trajectory.steps.size());
  for (int T = 0; T < len; ++T) {
    const auto& z = trajectory.steps[T].z;
    for (int delta = 0; delta <= c && T + delta < len; ++delta) {
      const auto& step = trajectory.steps[T + delta];
      double decomposed = 0;
      for (auto m : z.masks()) decomposed += group_reward(model, mask_members(m), step.state, step.action);
      if (std::abs(decomposed - step.reward) > tolerance) out.push_back({T, delta, step.reward, decomposed});
    }
  }
  return out;
}

std::vector<int> detect_stopping_times(const std::vector<Partition>& trace, StoppingVariant variant) {
  std::vector<int> out;
  for (std::size_t t = 1; t < trace.size(); ++t) {
    const bool stop =
        variant == StoppingVariant::Amalgam ? trace[t] != trace[t - 1] : !is_finer(trace[t], trace[t - 1]);
    if (stop) out.push_back(static_cast<int>(t));
  }
  return out;
}

std::vector<int> detect_stopping_times(const Trajectory& trajectory, StoppingVariant variant) {
  std::vector<Partition> trace;
  for (const auto& step : trajectory.steps) trace.push_back(step.z);
  return detect_stopping_times(trace, variant);
}

namespace {

std::vector<int> locations(const Trajectory& trajectory, int k) {
  std::vector<int> out;
  for (const auto& step : trajectory.steps) out.push_back(step.state.agents[k].location);
  if (!trajectory.final_state.agents.empty()) out.push_back(trajectory.final_state.agents[k].location);
  return out;
}

}  // namespace

std::vector<JitterEntry> detect_jitter(const Trajectory& trajectory, int window) {
  if (window < 2) throw InvalidModelError("jitter window must be at least 2");
  std::vector<JitterEntry> out;
  if (trajectory.steps.empty()) return out;
  const int n = static_cast<int>(trajectory.steps.front().state.agents.size());
  for (int k = 0; k < n; ++k) {
    const auto loc = locations(trajectory, k);
    const int len = static_cast<int>(loc.size());
    int t = 0;
    while (t + 1 < len) {
      if (loc[t] == loc[t + 1]) {
        ++t;
        continue;
      }
      int end = t + 1;
      while (end + 1 < len && loc[end + 1] == loc[end - 1]) ++end;
      const int run = end - t + 1;
      const int repetitions = run / 2;
      if (repetitions >= window) out.push_back({k, t, repetitions, loc[t], loc[t + 1]});
      t = std::max(t + 1, end);
    }
  }
  return out;
}

std::vector<int> count_backtracks(const Trajectory& trajectory) {
  std::vector<int> out;
  if (trajectory.steps.empty()) return out;
  const int n = static_cast<int>(trajectory.steps.front().state.agents.size());
  for (int k = 0; k < n; ++k) {
    const auto loc = locations(trajectory, k);
    int count = 0;
    for (std::size_t t = 2; t < loc.size(); ++t)
      if (loc[t] == loc[t - 2] && loc[t] != loc[t - 1]) ++count;
    out.push_back(count);
  }
  return out;
}

namespace {

nlohmann::json partition_json(const Partition& p) { return p.groups(); }

nlohmann::json state_json(const ScenarioModel& model, const JointState& s) {
  auto out = nlohmann::json::array();
  for (int k = 0; k < model.num_agents(); ++k) out.push_back(format_agent_state(model, k, s.agents[k]));
  return out;
}

nlohmann::json action_json(const ScenarioModel& model, const JointAction& a) {
  auto out = nlohmann::json::array();
  for (int k = 0; k < model.num_agents(); ++k) out.push_back(model.agent(k).actions[a[k]]);
  return out;
}

}  // namespace

void write_jsonl(std::ostream& os, const ScenarioModel& model, const Trajectory& trajectory) {
  for (const auto& step : trajectory.steps) {
    nlohmann::ordered_json line;
    line["t"] = step.t;
    line["state"] = state_json(model, step.state);
    line["action"] = action_json(model, step.action);
    line["reward"] = step.reward;
    line["Z"] = partition_json(step.z);
    line["C"] = partition_json(step.c);
    os << line.dump() << "\n";
  }
}

namespace {

char agent_glyph(int k) {
  if (k < 10) return static_cast<char>('0' + k);
  return static_cast<char>('A' + (k - 10) % 26);
}

}  // namespace

void write_ascii(std::ostream& os, const ScenarioModel& model, const Trajectory& trajectory) {
  const auto& space = model.space();
  auto frame = [&](int t, const JointState& s, const JointAction* a, double reward) {
    os << "t=" << t;
    if (a) os << " action=" << format_joint_action(model, *a) << " reward=" << std::setprecision(6) << reward;
    os << "\n";
    if (space.is_grid()) {
      std::vector<std::string> rows(space.height(), std::string(space.width(), '.'));
      for (int k = 0; k < model.num_agents(); ++k) {
        const auto loc = s.agents[k].location;
        char& cell = rows[loc / space.width()][loc % space.width()];
        cell = cell == '.' ? agent_glyph(k) : '*';
      }
      for (auto it = rows.rbegin(); it != rows.rend(); ++it) os << *it << "\n";
    } else {
      for (int k = 0; k < model.num_agents(); ++k)
        os << "  " << agent_glyph(k) << " @ " << format_agent_state(model, k, s.agents[k]) << "\n";
    }
    os << "\n";
  };
  for (const auto& step : trajectory.steps) frame(step.t, step.state, &step.action, step.reward);
  if (!trajectory.final_state.agents.empty())
    frame(static_cast<int>(trajectory.steps.size()), trajectory.final_state, nullptr, 0);
}

void write_svg(std::ostream& os, const ScenarioModel& model, const Trajectory& trajectory) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  const auto& space = model.space();
  const double cell = 24;
  double max_x = 0, max_y = 0;
  for (int loc = 0; loc < space.size(); ++loc) {
    auto [x, y] = space.coords(loc);
    max_x = std::max(max_x, x);
    max_y = std::max(max_y, y);
  }
  const double width = (max_x + 2) * cell, height = (max_y + 2) * cell;
  auto px = [&](int loc) {
    auto [x, y] = space.coords(loc);
    return std::pair{(x + 1) * cell, height - (y + 1) * cell};
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  for (int loc = 0; loc < space.size(); ++loc) {
    auto [x, y] = px(loc);
    os << "  <circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"2\" fill=\"#bbbbbb\"/>\n";
  }
  for (int k = 0; k < model.num_agents(); ++k) {
    os << "  <polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << colors[k % 8] << "\" points=\"";
    auto loc = locations(trajectory, k);
    for (std::size_t i = 0; i < loc.size(); ++i) {
      auto [x, y] = px(loc[i]);
      os << (i ? " " : "") << x << "," << y;
    }
    os << "\"/>\n";
    if (!loc.empty()) {
      auto [x, y] = px(loc.front());
      os << "  <circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"5\" fill=\"" << colors[k % 8] << "\"/>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace limdp
