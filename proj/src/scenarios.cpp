#include "limdp/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"
#include "limdp/error.hpp"
#include "limdp/partition.hpp"
#include "limdp/rollout.hpp"
#include "limdp/scenario_json.hpp"
#include "limdp/validate.hpp"

namespace limdp {

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"bullseye", "two agents on a line around a +100 target, -500 proximity penalty within R=20, V=45 by default"},
      {"aisle_walk", "two agents walking a forced-forward aisle, +20 together within R=1, +120 side rewards, V=2"},
      {"highway", "mover plus static obstacle, -500 within R=3, +100 goal, -25 highway shortcut, V=5"},
      {"lane_merge", "four agents on two merging lanes, -500 within 1, +10 at distance 2, +100 in the last 7 cells"},
      {"bullseye_many", "eight agents, two targets on a grid, -500 within R=1, -10 move-away, V=3"},
      {"penalty_jitter", "three-cell corridor, overlap -500, +100 left, +10 right, V=1"},
      {"lower_bound", "two-agent construction M(l) with V=2l+1 certifying the lower bound"},
  };
  return entries;
}

ScenarioModel build_scenario(const std::string& name, const ScenarioParams& params) {
  if (name == "bullseye") return bullseye(params.visibility.value_or(45));
  if (name == "aisle_walk") return aisle_walk();
  if (name == "highway") return highway();
  if (name == "lane_merge") return lane_merge();
  if (name == "bullseye_many") return bullseye_many();
  if (name == "penalty_jitter") return penalty_jitter();
  if (name == "lower_bound") return lower_bound(params.ell, params.gamma, params.r_tilde);
  throw InvalidModelError("unknown catalog scenario '" + name + "'");
}

namespace {

struct GraphBuilder {
  std::vector<std::string> nodes;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::pair<double, double>> coords;
  std::map<std::string, int> index;

  int add(const std::string& name, double x, double y) {
    index[name] = static_cast<int>(nodes.size());
    nodes.push_back(name);
    coords.emplace_back(x, y);
    return index[name];
  }
  int operator[](const std::string& name) const { return index.at(name); }
  void link(const std::string& a, const std::string& b) { edges.emplace_back(index.at(a), index.at(b)); }
  MetricSpace build() const {
    auto space = MetricSpace::graph(nodes, edges);
    space.set_coords(coords);
    return space;
  }
};

using Step = std::function<AgentState(const AgentState&, int action)>;
using Reward = std::function<double(const AgentState&, int action)>;

AgentSpec deterministic_agent(std::string name, std::vector<std::string> internal, std::vector<std::string> actions,
                              std::vector<AgentState> states, const Step& step, const Reward& reward,
                              AgentState start) {
  AgentSpec spec;
  spec.name = std::move(name);
  spec.internal_states = std::move(internal);
  spec.actions = std::move(actions);
  spec.states = std::move(states);
  std::map<AgentState, int> index;
  for (int i = 0; i < spec.num_states(); ++i) index[spec.states[i]] = i;
  for (int s = 0; s < spec.num_states(); ++s)
    for (int a = 0; a < spec.num_actions(); ++a) {
      const auto next = step(spec.states[s], a);
      spec.transitions.push_back({{index.at(next), 1.0}});
      spec.rewards.push_back(reward(spec.states[s], a));
    }
  spec.start = index.at(start);
  return spec;
}

PairwiseRewardRule active_pairs(double lo, double hi, double value) {
  PairwiseRewardRule rule;
  rule.distance_min = lo;
  rule.distance_max = hi;
  rule.internal_j = std::vector<std::string>{"active"};
  rule.internal_k = std::vector<std::string>{"active"};
  rule.value = value;
  return rule;
}

PairwiseRewardRule all_pairs(double lo, double hi, double value) {
  PairwiseRewardRule rule;
  rule.distance_min = lo;
  rule.distance_max = hi;
  rule.value = value;
  return rule;
}

constexpr int kActive = 0;
constexpr int kDone = 1;

}  // namespace

ScenarioModel bullseye(double visibility) {
  // Cells 0..width-1 on a line; the target sits 24 cells right of agent 0 and
  // 25 cells left of agent 1.
  constexpr int margin = 10;
  constexpr int target = margin + 24;
  constexpr int width = target + 25 + margin + 1;
  auto space = MetricSpace::grid(width, 1);
  std::vector<AgentState> states;
  for (int x = 0; x < width; ++x) states.push_back({x, kActive});
  states.push_back({target, kDone});
  const std::vector<std::string> actions{"left", "stay", "right"};
  Step step = [&](const AgentState& s, int a) -> AgentState {
    if (s.internal == kDone || s.location == target) return {target, kDone};
    const int x = std::clamp(s.location + (a - 1), 0, width - 1);
    return {x, kActive};
  };
  Reward reward = [&](const AgentState& s, int a) -> double {
    if (s.internal == kDone) return 0;
    if (s.location == target) return 100;
    const int x = std::clamp(s.location + (a - 1), 0, width - 1);
    return std::abs(x - target) > std::abs(s.location - target) ? -2 : 0;
  };
  std::vector<AgentSpec> agents{
      deterministic_agent("left", {"active", "done"}, actions, states, step, reward, {target - 24, kActive}),
      deterministic_agent("right", {"active", "done"}, actions, states, step, reward, {target + 25, kActive})};
  ScenarioModel model("bullseye", std::move(space), std::move(agents), {active_pairs(0, 20, -500)}, 20, visibility, 0.9);
  model.set_description(
      "Line of " + std::to_string(width) + " cells, target at x=" + std::to_string(target) +
      ". An active agent on the target collects +100 and turns done; done agents stay on the target with zero "
      "reward and no pairwise interaction. Moving to a cell farther from the target costs -2. Each ordered pair of "
      "active agents within distance 20 pays -500, so a close pair costs -1000 per step.");
  return model;
}

ScenarioModel aisle_walk() {
  // Rows 0..4. The aisle has two columns a and b; side lanes l and r span rows
  // 1..4 and are entered from row 0 and left from row 3. Row 4 is absorbing.
  constexpr int top = 4;
  GraphBuilder g;
  for (int r = 0; r <= top; ++r) {
    g.add("a" + std::to_string(r), 1, r);
    g.add("b" + std::to_string(r), 2, r);
  }
  for (int r = 1; r <= top; ++r) {
    g.add("l" + std::to_string(r), 0, r);
    g.add("r" + std::to_string(r), 3, r);
  }
  for (int r = 0; r <= top; ++r) {
    g.link("a" + std::to_string(r), "b" + std::to_string(r));
    if (r < top) {
      g.link("a" + std::to_string(r), "a" + std::to_string(r + 1));
      g.link("b" + std::to_string(r), "b" + std::to_string(r + 1));
    }
  }
  for (int r = 1; r < top; ++r) {
    g.link("l" + std::to_string(r), "l" + std::to_string(r + 1));
    g.link("r" + std::to_string(r), "r" + std::to_string(r + 1));
  }
  g.link("a0", "l1");
  g.link("b0", "r1");
  g.link("l3", "a" + std::to_string(top));
  g.link("r3", "b" + std::to_string(top));
  auto space = g.build();

  auto forward = [&](const std::string& name) -> std::string {
    const char lane = name[0];
    const int r = std::stoi(name.substr(1));
    return std::string(1, lane) + std::to_string(std::min(r + 1, top));
  };
  Step step = [&](const AgentState& s, int a) -> AgentState {
    const auto& name = space.name(s.location);
    std::string next = forward(name);
    if (a == 1) {
      if (name == "a0") next = "l1";
      if (name == "b0") next = "r1";
      if (name == "l3") next = "a" + std::to_string(top);
      if (name == "r3") next = "b" + std::to_string(top);
    }
    return {g[next], 0};
  };
  Reward reward = [&](const AgentState& s, int) -> double {
    const auto& name = space.name(s.location);
    return name == "l2" || name == "r2" ? 120 : 0;
  };
  std::vector<AgentState> states;
  for (int i = 0; i < space.size(); ++i) states.push_back({i, 0});
  const std::vector<std::string> actions{"forward", "switch"};
  std::vector<AgentSpec> agents{
      deterministic_agent("left", {"-"}, actions, states, step, reward, {g["a0"], 0}),
      deterministic_agent("right", {"-"}, actions, states, step, reward, {g["b0"], 0})};
  ScenarioModel model("aisle_walk", std::move(space), std::move(agents), {all_pairs(0, 1, 20)}, 1, 2, 0.9);
  model.set_description(
      "Forced-forward aisle of rows 0..4 with columns a, b and side lanes l, r. 'switch' leaves the aisle at row 0 "
      "and rejoins it from row 3; otherwise it acts as 'forward'. Side cells l2 and r2 pay +120. Row 4 is absorbing. "
      "Each ordered pair within distance 1 earns +20.");
  return model;
}

ScenarioModel highway() {
  // A 15-step path p0..p14 -> goal with the obstacle at p8, a bypass b1..b10
  // from p4 to p12, and a highway node next to the start linked to the goal.
  constexpr int path_len = 15;
  constexpr int obstacle = 8;
  constexpr int branch = 4;
  constexpr int rejoin = 12;
  constexpr int bypass_len = 10;
  GraphBuilder g;
  const double xy[][2] = {{1, 0}, {2, 0}, {3, 0}, {4, 0}, {5, 0}, {6, 0}, {6, 1}, {6, 2},
                          {6, 3}, {6, 4}, {6, 5}, {6, 6}, {5, 6}, {4, 6}, {3, 6}};
  for (int i = 0; i < path_len; ++i) g.add("p" + std::to_string(i), xy[i][0], xy[i][1]);
  g.add("goal", 2, 6);
  g.add("highway", 0, 0);
  const double bxy[][2] = {{5, -1}, {6, -1}, {7, -1}, {8, 0}, {8, 2}, {8, 4}, {8, 6}, {7, 7}, {6, 7}, {5, 7}};
  for (int j = 1; j <= bypass_len; ++j) g.add("b" + std::to_string(j), bxy[j - 1][0], bxy[j - 1][1]);
  for (int i = 0; i + 1 < path_len; ++i) g.link("p" + std::to_string(i), "p" + std::to_string(i + 1));
  g.link("p" + std::to_string(path_len - 1), "goal");
  g.link("p0", "highway");
  g.link("highway", "goal");
  g.link("p" + std::to_string(branch), "b1");
  for (int j = 1; j < bypass_len; ++j) g.link("b" + std::to_string(j), "b" + std::to_string(j + 1));
  g.link("b" + std::to_string(bypass_len), "p" + std::to_string(rejoin));
  auto space = g.build();

  // Actions: forward, back, detour, stay.
  auto target = [&](const std::string& name, int a) -> std::string {
    if (a == 3) return name;
    if (name == "highway") return a == 0 ? "goal" : a == 1 ? "p0" : name;
    if (name[0] == 'p') {
      const int i = std::stoi(name.substr(1));
      if (a == 0) return i + 1 == path_len ? "goal" : "p" + std::to_string(i + 1);
      if (a == 1) return i == 0 ? "highway" : "p" + std::to_string(i - 1);
      return i == branch ? "b1" : name;
    }
    if (name[0] == 'b') {
      const int j = std::stoi(name.substr(1));
      if (a == 0) return j == bypass_len ? "p" + std::to_string(rejoin) : "b" + std::to_string(j + 1);
      if (a == 1) return j == 1 ? "p" + std::to_string(branch) : "b" + std::to_string(j - 1);
      return name;
    }
    return name;
  };
  Step step = [&](const AgentState& s, int a) -> AgentState {
    if (s.internal == kDone) return s;
    const auto next = target(space.name(s.location), a);
    return {g[next], next == "goal" ? kDone : kActive};
  };
  Reward reward = [&](const AgentState& s, int a) -> double {
    if (s.internal == kDone) return 0;
    const auto& name = space.name(s.location);
    const auto next = target(name, a);
    double r = next == "goal" ? 100 : 0;
    if (name == "highway" && next == "goal") r -= 25;
    return r;
  };
  std::vector<AgentState> states;
  for (int i = 0; i < space.size(); ++i)
    if (space.name(i) != "goal") states.push_back({i, kActive});
  states.push_back({g["goal"], kDone});
  AgentSpec mover = deterministic_agent("mover", {"active", "done"}, {"forward", "back", "detour", "stay"}, states,
                                        step, reward, {g["p0"], kActive});
  AgentSpec block = deterministic_agent(
      "obstacle", {"active"}, {"X"}, {{g["p" + std::to_string(obstacle)], kActive}},
      [](const AgentState& s, int) { return s; }, [](const AgentState&, int) { return 0.0; },
      {g["p" + std::to_string(obstacle)], kActive});
  ScenarioModel model("highway", std::move(space), {mover, block}, {active_pairs(0, 3, -500)}, 3, 5, 0.98);
  model.set_description(
      "Shortest-path graph. The mover starts at p0; the long way p0..p14 -> goal passes the static obstacle at p8, "
      "the bypass b1..b10 leaves p4 and rejoins at p12, and the highway node next to p0 reaches the goal in one "
      "step for -25. Entering the goal pays +100 and makes the mover done. Each ordered pair of active agents "
      "within distance 3 pays -500.");
  return model;
}

ScenarioModel lane_merge() {
  // Two lanes of length 5 feed a junction followed by a merged lane m1..m8;
  // the last 7 merged cells pay +100 per step.
  constexpr int lane_len = 5;
  constexpr int merged_len = 8;
  constexpr int reward_cells = 7;
  GraphBuilder g;
  for (int i = lane_len; i >= 1; --i) {
    g.add("u" + std::to_string(i), -i, i);
    g.add("d" + std::to_string(i), -i, -i);
  }
  g.add("j", 0, 0);
  for (int i = 1; i <= merged_len; ++i) g.add("m" + std::to_string(i), i, 0);
  for (const char* lane : {"u", "d"}) {
    for (int i = lane_len; i > 1; --i) g.link(lane + std::to_string(i), lane + std::to_string(i - 1));
    g.link(std::string(lane) + "1", "j");
  }
  g.link("j", "m1");
  for (int i = 1; i < merged_len; ++i) g.link("m" + std::to_string(i), "m" + std::to_string(i + 1));
  auto space = g.build();

  auto next_of = [&](const std::string& name) -> std::string {
    if (name == "j") return "m1";
    const int i = std::stoi(name.substr(1));
    if (name[0] == 'm') return i == merged_len ? name : "m" + std::to_string(i + 1);
    return i == 1 ? "j" : std::string(1, name[0]) + std::to_string(i - 1);
  };
  Step step = [&](const AgentState& s, int a) -> AgentState {
    const auto& name = space.name(s.location);
    return {a == 0 ? g[next_of(name)] : s.location, 0};
  };
  Reward reward = [&](const AgentState& s, int) -> double {
    const auto& name = space.name(s.location);
    if (name[0] != 'm') return 0;
    return std::stoi(name.substr(1)) > merged_len - reward_cells ? 100 : 0;
  };
  auto lane_states = [&](char lane) {
    std::vector<AgentState> states;
    for (int i = lane_len; i >= 1; --i) states.push_back({g[std::string(1, lane) + std::to_string(i)], 0});
    states.push_back({g["j"], 0});
    for (int i = 1; i <= merged_len; ++i) states.push_back({g["m" + std::to_string(i)], 0});
    return states;
  };
  const std::vector<std::string> actions{"forward", "stay"};
  std::vector<AgentSpec> agents{
      deterministic_agent("up_near", {"-"}, actions, lane_states('u'), step, reward, {g["u2"], 0}),
      deterministic_agent("up_far", {"-"}, actions, lane_states('u'), step, reward, {g["u4"], 0}),
      deterministic_agent("down_near", {"-"}, actions, lane_states('d'), step, reward, {g["d3"], 0}),
      deterministic_agent("down_far", {"-"}, actions, lane_states('d'), step, reward, {g["d5"], 0})};
  ScenarioModel model("lane_merge", std::move(space), std::move(agents),
                      {all_pairs(0, 1, -500), all_pairs(2, 2, 10)}, 2, 4, 0.9);
  model.set_description(
      "Lanes u5..u1 and d5..d1 merge at junction j into m1..m8; agents may only move forward or stay. Cells "
      "m2..m8 pay +100 per step. Each ordered pair within distance 1 pays -500 and each ordered pair at distance "
      "exactly 2 earns +10.");
  return model;
}

ScenarioModel bullseye_many() {
  // Two targets on a Manhattan grid graph. Each agent approaches its target
  // along its own three-cell-wide arm (north, east, south or west) and, once it
  // has collected the target reward, leaves through a private exit chain.
  constexpr int arm = 10;
  constexpr int exit_len = 4;
  constexpr int width = 4 * arm + 5;
  constexpr int height = 2 * arm + 1;
  const int target_x[2] = {arm + 1, 3 * arm + 3};
  const int target_y = arm;
  const int start_dist[8] = {1, 3, 6, 10, 10, 1, 3, 6};
  const int ax[4] = {0, 1, 0, -1};
  const int ay[4] = {-1, 0, 1, 0};

  GraphBuilder g;
  auto cell_name = [](int x, int y) { return std::to_string(x) + "_" + std::to_string(y); };
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) g.add(cell_name(x, y), x, y);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width) g.link(cell_name(x, y), cell_name(x + 1, y));
      if (y + 1 < height) g.link(cell_name(x, y), cell_name(x, y + 1));
    }
  std::vector<std::vector<int>> exits(8);
  for (int k = 0; k < 8; ++k) {
    const int room = k / 4, dir = k % 4;
    std::string prev = cell_name(target_x[room], target_y);
    for (int i = 1; i <= exit_len; ++i) {
      const std::string node = "exit" + std::to_string(k) + "_" + std::to_string(i);
      exits[k].push_back(g.add(node, target_x[room] + 0.3 * (ax[dir] - ay[dir]) * i,
                               target_y + 0.3 * (ay[dir] + ax[dir]) * i));
      g.link(prev, node);
      prev = node;
    }
  }
  auto space = g.build();

  const int dx[] = {0, 0, 0, -1, 1};
  const int dy[] = {0, -1, 1, 0, 0};
  std::vector<AgentSpec> agents;
  for (int k = 0; k < 8; ++k) {
    const int room = k / 4, dir = k % 4, tx = target_x[room];
    const int target = g[cell_name(tx, target_y)];
    auto in_arm = [&](int x, int y) {
      if (x == tx && y == target_y) return true;
      const int along = (x - tx) * ax[dir] + (y - target_y) * ay[dir];
      const int across = (x - tx) * ay[dir] - (y - target_y) * ax[dir];
      return along >= 1 && along <= arm && std::abs(across) <= 1;
    };
    auto to_target = [&](int x, int y) { return std::abs(x - tx) + std::abs(y - target_y); };
    std::vector<AgentState> states;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if (in_arm(x, y)) states.push_back({g[cell_name(x, y)], kActive});
    for (int node : exits[k]) states.push_back({node, kDone});
    auto move = [&](const AgentState& s, int a) {
      const int x = s.location % width, y = s.location / width;
      const int nx = x + dx[a], ny = y + dy[a];
      return in_arm(nx, ny) ? std::pair{nx, ny} : std::pair{x, y};
    };
    const auto& chain = exits[k];
    Step step = [&](const AgentState& s, int a) -> AgentState {
      if (s.internal == kDone) {
        const auto it = std::find(chain.begin(), chain.end(), s.location);
        return {it + 1 == chain.end() ? *it : *(it + 1), kDone};
      }
      if (s.location == target) return {chain.front(), kDone};
      const auto [nx, ny] = move(s, a);
      return {g[cell_name(nx, ny)], kActive};
    };
    Reward reward = [&](const AgentState& s, int a) -> double {
      if (s.internal == kDone) return 0;
      if (s.location == target) return 100;
      const auto [nx, ny] = move(s, a);
      return to_target(nx, ny) > to_target(s.location % width, s.location / width) ? -10 : 0;
    };
    const int sx = tx + ax[dir] * start_dist[k];
    const int sy = target_y + ay[dir] * start_dist[k];
    agents.push_back(deterministic_agent("agent" + std::to_string(k), {"active", "done"},
                                         {"stay", "up", "down", "left", "right"}, states, step, reward,
                                         {g[cell_name(sx, sy)], kActive}));
  }
  ScenarioModel model("bullseye_many", std::move(space), std::move(agents), {active_pairs(0, 1, -500)}, 1, 3, 0.9);
  model.set_description(
      "45x21 Manhattan grid graph with targets at 11_10 and 33_10. Agents 0-3 approach the left target and 4-7 the "
      "right one, each confined to its own three-cell-wide arm (north, east, south, west) and starting on the arm "
      "axis at distances 1, 3, 6, 10 and 10, 1, 3, 6. An active agent on its target collects +100, turns done and "
      "walks a private four-node exit chain. Moving farther from the target costs -10. Each ordered pair of active "
      "agents within distance 1 pays -500. Under the Amalgam policy no visibility group exceeds three agents.");
  return model;
}

ScenarioModel penalty_jitter() {
  auto space = MetricSpace::grid(3, 1);
  std::vector<AgentState> states{{0, 0}, {1, 0}, {2, 0}};
  Step step = [](const AgentState& s, int a) -> AgentState { return {std::clamp(s.location + a - 1, 0, 2), 0}; };
  Reward reward = [](const AgentState& s, int) -> double { return s.location == 0 ? 100 : s.location == 2 ? 10 : 0; };
  const std::vector<std::string> actions{"left", "stay", "right"};
  std::vector<AgentSpec> agents{deterministic_agent("left", {"-"}, actions, states, step, reward, {0, 0}),
                                deterministic_agent("right", {"-"}, actions, states, step, reward, {2, 0})};
  ScenarioModel model("penalty_jitter", std::move(space), std::move(agents), {all_pairs(0, 0, -500)}, 0, 1, 0.9);
  model.set_description(
      "Three-cell corridor. Standing on the left cell pays +100 per step and on the right cell +10. Each ordered "
      "pair on the same cell pays -500.");
  return model;
}

ScenarioModel lower_bound(int ell, double gamma, double r_tilde) {
  if (ell < 0) throw InvalidModelError("lower bound construction needs l >= 0");
  if (!(gamma > 0 && gamma < 1)) throw InvalidModelError("gamma must lie in (0, 1)");
  if (!(r_tilde > 0)) throw InvalidModelError("r~ must be positive");
  GraphBuilder g;
  g.add("S2", -3, 0);
  g.add("S1", -2, 0);
  for (int i = 1; i <= ell; ++i) g.add("L" + std::to_string(i), -2 + i, i);
  g.add("S5", 0, ell + 1);
  g.add("S6", 0, ell + 2);
  for (int i = ell; i >= 1; --i) g.add("Q" + std::to_string(i), 2 - i, i);
  g.add("S4", 1, 0);
  g.add("S3", 2, 0);
  auto left_chain = [&](int i) { return i == 0 ? std::string("S1") : i == ell + 1 ? "S5" : "L" + std::to_string(i); };
  auto right_chain = [&](int i) { return i == ell + 1 ? std::string("S5") : "Q" + std::to_string(i); };
  g.link("S2", "S1");
  for (int i = 0; i <= ell; ++i) g.link(left_chain(i), left_chain(i + 1));
  g.link("S3", "S4");
  g.link("S3", right_chain(1));
  g.link("S4", right_chain(1));
  for (int i = 1; i <= ell; ++i) g.link(right_chain(i), right_chain(i + 1));
  g.link("S5", "S6");
  auto space = g.build();

  auto successor = [&](const std::string& name, int a) -> std::string {
    if (name == "S2") return "S1";
    if (name == "S5") return "S6";
    if (name == "S6") return "S5";
    if (name == "S3") return a == 0 ? right_chain(1) : "S4";
    if (name == "S4") return right_chain(1);
    if (name == "S1") return left_chain(1);
    const int i = std::stoi(name.substr(1));
    return name[0] == 'L' ? left_chain(i + 1) : right_chain(i + 1);
  };
  auto states_of = [&](std::vector<std::string> names) {
    std::vector<AgentState> out;
    for (const auto& n : names) out.push_back({g[n], 0});
    return out;
  };
  std::vector<std::string> left_names{"S2", "S1"}, right_names{"S3", "S4"};
  for (int i = 1; i <= ell; ++i) {
    left_names.push_back("L" + std::to_string(i));
    right_names.push_back("Q" + std::to_string(i));
  }
  for (const char* n : {"S5", "S6"}) {
    left_names.push_back(n);
    right_names.push_back(n);
  }
  Step step = [&](const AgentState& s, int a) -> AgentState { return {g[successor(space.name(s.location), a)], 0}; };
  Reward zero = [](const AgentState&, int) { return 0.0; };
  std::vector<AgentSpec> agents{
      deterministic_agent("chain", {"-"}, {"X"}, states_of(left_names), step, zero, {g["S1"], 0}),
      deterministic_agent("chooser", {"-"}, {"a0", "a1"}, states_of(right_names), step, zero, {g["S3"], 0})};
  ScenarioModel model("lower_bound_l" + std::to_string(ell), std::move(space), std::move(agents),
                      {all_pairs(0, 0, -r_tilde / 2)}, 0, 2 * ell + 1, gamma);
  model.set_description(
      "Deterministic two-agent construction M(l). The chain agent walks S2 -> S1 -> L1..Ll -> S5; the chooser at S3 "
      "takes a0 into Q1..Ql -> S5 or a1 through S4 first. S5 and S6 alternate forever. Overlap pays -r~ in total, "
      "split as -r~/2 on each ordered pair.");
  return model;
}

JointState lower_bound_start(const ScenarioModel& model, bool from_s2) {
  const auto& space = model.space();
  return JointState{{{*space.find(from_s2 ? "S2" : "S1"), 0}, {*space.find("S3"), 0}}};
}

LowerBoundReport lower_bound_report(int ell, double gamma, double r_tilde, double epsilon) {
  const auto model = lower_bound(ell, gamma, r_tilde);
  LowerBoundReport report;
  report.ell = ell;
  report.gamma = gamma;
  report.r_tilde = r_tilde;
  report.c = dependence_horizon(model);
  report.bound = lower_bound_value(gamma, report.c, r_tilde);
  report.p0_formula = std::pow(gamma, ell + 1) / (1 - gamma) * r_tilde;

  const auto s1 = lower_bound_start(model, false);
  const auto s2 = lower_bound_start(model, true);
  const auto optimal = value_iteration(model, epsilon);
  report.v_star_s1 = optimal.values.at(s1);
  report.v_star_s2 = optimal.values.at(s2);
  // Every state other than S3 has a single effective action, so the
  // decentralized policy class reduces to the chooser's action at S3.
  auto choice = [&](int a) {
    return evaluate_policy(model, [a](const JointState&) { return JointAction{0, a}; }, epsilon);
  };
  const auto a0 = choice(0);
  const auto a1 = choice(1);
  report.v_a0_s1 = a0.at(s1);
  report.v_a0_s2 = a0.at(s2);
  report.v_a1_s1 = a1.at(s1);
  report.v_a1_s2 = a1.at(s2);

  // Gap at each start is affine in p0 because S3 is visited only at t = 0.
  auto gap1 = [&](double p0) { return std::abs(report.v_star_s1 - (p0 * report.v_a0_s1 + (1 - p0) * report.v_a1_s1)); };
  auto gap2 = [&](double p0) { return std::abs(report.v_star_s2 - (p0 * report.v_a0_s2 + (1 - p0) * report.v_a1_s2)); };
  auto worst = [&](double p0) { return std::max(gap1(p0), gap2(p0)); };
  report.certified_gap = std::min(worst(0), worst(1));
  double best = report.certified_gap;
  const double d1 = gap1(1) - gap1(0), d2 = gap2(1) - gap2(0);
  if (d1 != d2) {
    const double p = (gap2(0) - gap1(0)) / (d1 - d2);
    if (p > 0 && p < 1) best = std::min(best, worst(p));
  }
  report.mixed_certified_gap = best;
  report.passed = report.mixed_certified_gap >= report.bound - 3 * epsilon &&
                  std::abs(report.v_star_s1) <= 2 * epsilon && std::abs(report.v_star_s2) <= 2 * epsilon;
  return report;
}

RandomInstanceSpec parse_instance_spec(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed campaign spec: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("campaign spec must be an object");
  RandomInstanceSpec spec;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "n_agents")
        spec.n_agents = value.get<int>();
      else if (key == "n_locations")
        spec.n_locations = value.get<int>();
      else if (key == "metric") {
        const auto m = value.get<std::string>();
        if (m == "grid")
          spec.metric = RandomMetric::Grid;
        else if (m == "graph")
          spec.metric = RandomMetric::Graph;
        else if (m == "table")
          spec.metric = RandomMetric::Table;
        else
          throw ParseError("campaign spec metric must be grid, graph or table");
      } else if (key == "reward_bound")
        spec.reward_bound = value.get<int>();
      else if (key == "stochastic")
        spec.stochastic = value.get<bool>();
      else if (key == "R")
        spec.R = value.get<double>();
      else if (key == "V")
        spec.V = value.get<double>();
      else if (key == "gamma")
        spec.gamma = value.is_string() ? std::stod(value.get<std::string>()) : value.get<double>();
      else if (key == "seed")
        spec.seed = value.get<std::uint64_t>();
      else
        throw ParseError("unknown key '" + key + "' in campaign spec");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("campaign spec key '" + key + "' has the wrong type");
    }
  }
  return spec;
}

ScenarioModel random_instance(const RandomInstanceSpec& spec, std::uint64_t instance_seed) {
  if (spec.n_agents < 1 || spec.n_agents > 3) throw InvalidModelError("random instances use 1 to 3 agents");
  if (spec.n_locations < 1 || spec.n_locations > 12) throw InvalidModelError("random instances use 1 to 12 locations");
  if (!(spec.V > spec.R)) throw InvalidModelError("random instance spec needs V > R");
  if (spec.R < 0 || spec.R != std::floor(spec.R) || spec.V != std::floor(spec.V))
    throw InvalidModelError("random instance radii must be non-negative integers");
  if (!(spec.gamma > 0 && spec.gamma < 1)) throw InvalidModelError("gamma must lie in (0, 1)");
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(instance_seed), static_cast<std::uint32_t>(instance_seed >> 32)};
  std::mt19937_64 rng(seq);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  MetricSpace space;
  const int n = spec.n_locations;
  if (spec.metric == RandomMetric::Grid) {
    const int w = uniform(1, std::min(n, 4));
    space = MetricSpace::grid(w, std::max(1, n / w), coin(0.5) ? MetricKind::Manhattan : MetricKind::Chebyshev);
  } else {
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back("n" + std::to_string(i));
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i < n; ++i) edges.emplace_back(uniform(0, i - 1), i);
    const int extra = uniform(0, n / 3);
    for (int e = 0; e < extra; ++e) {
      const int a = uniform(0, n - 1), b = uniform(0, n - 1);
      if (a != b) edges.emplace_back(a, b);
    }
    space = MetricSpace::graph(names, edges);
    if (spec.metric == RandomMetric::Table) {
      std::vector<std::vector<double>> table(n, std::vector<double>(n));
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) table[a][b] = space.distance(a, b);
      space = MetricSpace::table(names, table);
    }
  }
  const int locations = space.size();
  std::vector<std::vector<int>> near(locations);
  for (int a = 0; a < locations; ++a)
    for (int b = 0; b < locations; ++b)
      if (space.distance(a, b) <= 1) near[a].push_back(b);

  std::vector<AgentSpec> agents;
  for (int k = 0; k < spec.n_agents; ++k) {
    AgentSpec a;
    a.name = "agent" + std::to_string(k);
    a.internal_states = coin(0.4) ? std::vector<std::string>{"y0", "y1"} : std::vector<std::string>{"y0"};
    const int num_actions = uniform(2, 3);
    for (int i = 0; i < num_actions; ++i) a.actions.push_back("a" + std::to_string(i));
    const int ny = static_cast<int>(a.internal_states.size());
    for (int loc = 0; loc < locations; ++loc)
      for (int y = 0; y < ny; ++y) a.states.push_back({loc, y});
    for (int s = 0; s < a.num_states(); ++s) {
      for (int act = 0; act < num_actions; ++act) {
        const auto& options = near[a.states[s].location];
        auto pick = [&] { return options[uniform(0, static_cast<int>(options.size()) - 1)] * ny + uniform(0, ny - 1); };
        std::vector<Outcome> outcomes;
        if (spec.stochastic && coin(0.5)) {
          // Probabilities are multiples of 1/8 so they sum to 1 exactly.
          const int parts = uniform(2, 3);
          int remaining = 8;
          for (int p = 0; p < parts; ++p) {
            const int share = p + 1 == parts ? remaining : uniform(1, remaining - (parts - p - 1));
            remaining -= share;
            outcomes.push_back({pick(), share / 8.0});
          }
        } else {
          outcomes.push_back({pick(), 1.0});
        }
        a.transitions.push_back(outcomes);
        a.rewards.push_back(coin(0.3) ? uniform(-spec.reward_bound, spec.reward_bound) : 0);
      }
    }
    a.start = uniform(0, a.num_states() - 1);
    agents.push_back(std::move(a));
  }

  std::vector<PairwiseRewardRule> rules;
  if (spec.n_agents > 1) {
    const int count = uniform(1, 3);
    for (int r = 0; r < count; ++r) {
      PairwiseRewardRule rule;
      if (coin(0.5)) {
        const int j = uniform(0, spec.n_agents - 1);
        int k = uniform(0, spec.n_agents - 2);
        if (k >= j) ++k;
        rule.pair = std::pair{j, k};
      }
      const int R = static_cast<int>(spec.R);
      rule.distance_min = uniform(0, R);
      rule.distance_max = uniform(static_cast<int>(rule.distance_min), R);
      if (coin(0.3) && rule.pair && agents[rule.pair->first].internal_states.size() > 1)
        rule.internal_j = std::vector<std::string>{"y1"};
      if (coin(0.3) && rule.pair) rule.action_k = std::vector<std::string>{"a0"};
      do rule.value = uniform(-spec.reward_bound, spec.reward_bound);
      while (rule.value == 0 && spec.reward_bound > 0);
      rules.push_back(rule);
    }
  }
  ScenarioModel model("random_" + std::to_string(spec.seed) + "_" + std::to_string(instance_seed), std::move(space),
                      std::move(agents), std::move(rules), spec.R, spec.V, spec.gamma);
  return model;
}

AugmentedCutoffValues solve_augmented_cutoff(const ScenarioModel& model, double epsilon) {
  const auto space = JointSpace::all(model);
  const int n = model.num_agents();
  using Key = std::pair<std::size_t, std::vector<std::uint32_t>>;
  std::map<Key, int> index;
  AugmentedCutoffValues out;
  std::vector<std::size_t> state_of;
  auto intern = [&](std::size_t s, std::vector<std::uint32_t> blocks) {
    Key key{s, blocks};
    auto [it, inserted] = index.emplace(key, static_cast<int>(state_of.size()));
    if (inserted) {
      state_of.push_back(s);
      out.states.push_back(space.decode_state(s));
      out.blocks.push_back(std::move(blocks));
    }
    return it->second;
  };
  auto refine = [&](const std::vector<std::uint32_t>& blocks, std::span<const int> local) {
    std::vector<std::uint32_t> next;
    for (auto b : blocks) {
      const auto members = mask_members(b);
      for (auto m : threshold_components(
               static_cast<int>(members.size()),
               [&](int i, int j) { return model.local_distance(members[i], local[members[i]], members[j], local[members[j]]); },
               model.visibility())) {
        std::uint32_t agents = 0;
        for (int i : mask_members(m)) agents |= 1u << members[i];
        next.push_back(agents);
      }
    }
    std::sort(next.begin(), next.end());
    return next;
  };
  std::uint32_t all = n == 32 ? ~0u : (1u << n) - 1;
  for (std::size_t s = 0; s < space.num_states(); ++s) intern(s, refine({all}, space.decode_state(s)));

  struct Edge {
    int to;
    double p;
  };
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<std::vector<Edge>>> edges;
  std::vector<int> actions(n);
  for (std::size_t i = 0; i < state_of.size(); ++i) {
    const auto local = out.states[i];
    const auto blocks = out.blocks[i];
    std::vector<double> r(space.num_actions());
    std::vector<std::vector<Edge>> e(space.num_actions());
    for (std::size_t a = 0; a < space.num_actions(); ++a) {
      space.decode_action(a, actions);
      for (auto b : blocks) {
        JointSpace block(model, mask_members(b));
        std::vector<int> bl, ba;
        for (int k : block.members()) {
          bl.push_back(local[k]);
          ba.push_back(actions[k]);
        }
        r[a] += block.reward(bl, ba);
      }
      space.for_each_successor(local, actions, [&](std::size_t succ, double p) {
        const auto next_local = space.decode_state(succ);
        e[a].push_back({intern(succ, refine(blocks, next_local)), p});
      });
    }
    rewards.push_back(std::move(r));
    edges.push_back(std::move(e));
  }

  const double gamma = model.gamma();
  const double threshold = epsilon * (1 - gamma) / gamma;
  std::vector<double> v(state_of.size(), 0.0), next(state_of.size());
  while (true) {
    double residual = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < rewards[i].size(); ++a) {
        double expected = 0;
        for (const auto& e : edges[i][a]) expected += e.p * v[e.to];
        best = std::max(best, rewards[i][a] + gamma * expected);
      }
      next[i] = best;
      residual = std::max(residual, std::abs(best - v[i]));
    }
    v.swap(next);
    if (residual <= threshold) break;
  }
  out.values = std::move(v);
  return out;
}

namespace {

double margin(const GapReport& r) { return r.bound + r.tolerance - r.max_gap; }

}  // namespace

CampaignReport run_campaign(const RandomInstanceSpec& spec, int count, double epsilon, int trajectories_per_instance) {
  CampaignReport report;
  report.spec = spec;
  if (!(spec.V > spec.R)) {
    report.rejected = "V must be strictly greater than R";
    return report;
  }
  bool first = true;
  for (int i = 0; i < count; ++i) {
    CampaignRow row;
    row.index = i;
    row.seed = static_cast<std::uint64_t>(i);
    ScenarioModel model = random_instance(spec, row.seed);
    row.c = dependence_horizon(model);
    row.joint_states = model.joint_size();
    row.validation_violations = validate_model(model).size();

    PolicyOptions options;
    options.epsilon = epsilon;
    GroupDecentralizedPolicy amalgam(model, PolicyKind::Amalgam, options);
    std::mt19937_64 action_rng(row.seed ^ 0x9e3779b97f4a7c15ull);
    for (int t = 0; t < trajectories_per_instance; ++t) {
      JointPolicy random_policy = [&](const JointState&) {
        JointAction a(model.num_agents());
        for (int k = 0; k < model.num_agents(); ++k)
          a[k] = std::uniform_int_distribution<int>(0, model.agent(k).num_actions() - 1)(action_rng);
        return a;
      };
      JointPolicy amalgam_policy = [&](const JointState& s) { return amalgam.action(s); };
      const auto traj = rollout(model, t % 2 ? amalgam_policy : random_policy, model.start_state(), 30,
                                spec.seed * 1000 + static_cast<std::uint64_t>(i * 16 + t));
      row.dtl_violations += check_dependence_time(model, traj).size();
    }

    CutoffSolver cutoff(model, epsilon);
    const auto augmented = solve_augmented_cutoff(model, epsilon);
    for (std::size_t s = 0; s < augmented.values.size(); ++s)
      row.cutoff_decomposition_error =
          std::max(row.cutoff_decomposition_error,
                   std::abs(augmented.values[s] - cutoff.value(augmented.states[s], augmented.blocks[s])));

    const int horizon = row.c + 1;
    const auto joint = finite_horizon_dp(model, horizon);
    CutoffHorizonSolver cutoff_h(model, horizon);
    for (std::size_t s = 0; s < joint.space.num_states(); ++s) {
      const auto q = joint.q(0, s);
      const auto local = joint.space.decode_state(s);
      for (std::size_t a = 0; a < q.size(); ++a)
        row.q0_error = std::max(row.q0_error, std::abs(q[a] - cutoff_h.joint_q0(local, joint.space.decode_action(a))));
    }

    const auto v_star = value_iteration(model, epsilon).values;
    row.amalgam = policy_gap_report(model, PolicyKind::Amalgam, options, v_star, false);
    row.cutoff = policy_gap_report(model, PolicyKind::Cutoff, options, v_star, false);
    row.fsfho = policy_gap_report(model, PolicyKind::FirstStepFiniteHorizon, options, v_star, false);
    row.passed = row.validation_violations == 0 && row.dtl_violations == 0 &&
                 row.cutoff_decomposition_error <= 2 * epsilon && row.q0_error <= 1e-9 && row.amalgam.passed &&
                 row.cutoff.passed && row.fsfho.passed;
    report.failures += !row.passed;
    if (first) {
      report.worst_amalgam_margin = margin(row.amalgam);
      report.worst_cutoff_margin = margin(row.cutoff);
      report.worst_fsfho_margin = margin(row.fsfho);
      first = false;
    }
    report.worst_amalgam_margin = std::min(report.worst_amalgam_margin, margin(row.amalgam));
    report.worst_cutoff_margin = std::min(report.worst_cutoff_margin, margin(row.cutoff));
    report.worst_fsfho_margin = std::min(report.worst_fsfho_margin, margin(row.fsfho));
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_campaign_csv(std::ostream& os, const CampaignReport& report) {
  os << "instance,seed,c,joint_states,validation_violations,dtl_violations,cutoff_decomposition_error,q0_error,"
        "amalgam_gap,amalgam_bound,cutoff_gap,cutoff_bound,fsfho_gap,fsfho_bound,pass\n";
  os << std::fixed << std::setprecision(6);
  for (const auto& row : report.rows) {
    os << row.index << "," << row.seed << "," << row.c << "," << row.joint_states << "," << row.validation_violations
       << "," << row.dtl_violations << "," << row.cutoff_decomposition_error << "," << row.q0_error << ","
       << row.amalgam.max_gap << "," << row.amalgam.bound << "," << row.cutoff.max_gap << "," << row.cutoff.bound
       << "," << row.fsfho.max_gap << "," << row.fsfho.bound << "," << (row.passed ? "true" : "false") << "\n";
  }
}

}  // namespace limdp
