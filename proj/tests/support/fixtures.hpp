#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "limdp/model.hpp"
#include "limdp/scenarios.hpp"

namespace fixtures {

using namespace limdp;

using Transition = std::function<std::vector<std::pair<AgentState, double>>(const AgentState&, int)>;
using LocalReward = std::function<double(const AgentState&, int)>;

inline AgentSpec make_agent(const std::string& name, std::vector<AgentState> states, std::vector<std::string> actions,
                            const Transition& step, const LocalReward& reward, AgentState start,
                            std::vector<std::string> internal = {"-"}) {
  AgentSpec spec;
  spec.name = name;
  spec.internal_states = std::move(internal);
  spec.actions = std::move(actions);
  spec.states = std::move(states);
  std::map<AgentState, int> index;
  for (int i = 0; i < spec.num_states(); ++i) index[spec.states[i]] = i;
  for (const auto& s : spec.states)
    for (int a = 0; a < spec.num_actions(); ++a) {
      std::vector<Outcome> out;
      for (const auto& [t, p] : step(s, a)) out.push_back({index.at(t), p});
      spec.transitions.push_back(out);
      spec.rewards.push_back(reward(s, a));
    }
  spec.start = index.at(start);
  return spec;
}

inline std::vector<AgentState> line_states(int width) {
  std::vector<AgentState> out;
  for (int x = 0; x < width; ++x) out.push_back({x, 0});
  return out;
}

/// Agent on a 1-D line with actions left, stay, right and a per-cell reward.
inline AgentSpec line_walker(const std::string& name, int width, int start, std::vector<double> cell_reward = {}) {
  return make_agent(
      name, line_states(width), {"left", "stay", "right"},
      [width](const AgentState& s, int a) {
        return std::vector<std::pair<AgentState, double>>{{{std::clamp(s.location + a - 1, 0, width - 1), 0}, 1.0}};
      },
      [cell_reward](const AgentState& s, int) {
        return cell_reward.empty() ? 0.0 : cell_reward[s.location];
      },
      {start, 0});
}

inline PairwiseRewardRule band(double lo, double hi, double value) {
  PairwiseRewardRule r;
  r.distance_min = lo;
  r.distance_max = hi;
  r.value = value;
  return r;
}

inline RandomInstanceSpec small_spec(int agents, std::uint64_t seed, bool stochastic = true, double R = 1,
                                     double V = 2, double gamma = 0.9, int locations = 5) {
  RandomInstanceSpec spec;
  spec.n_agents = agents;
  spec.n_locations = locations;
  spec.stochastic = stochastic;
  spec.R = R;
  spec.V = V;
  spec.gamma = gamma;
  spec.seed = seed;
  spec.metric = static_cast<RandomMetric>(seed % 3);
  return spec;
}

}  // namespace fixtures
