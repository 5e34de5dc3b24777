#include "limdp/scenario_json.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "limdp/error.hpp"

namespace limdp {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ParseError("unknown key '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + " is missing required key '" + key + "'");
  return *it;
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + " must be a number");
  return v.get<double>();
}

double integral(const json& v, const std::string& where) {
  const double d = number(v, where);
  if (!std::isfinite(d) || d != std::floor(d)) throw ParseError(where + " must be an integer");
  return d;
}

std::string string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + " must be a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + " must be an array of strings");
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : v) {
    out.push_back(string(e, where));
    if (!seen.insert(out.back()).second) throw ParseError(where + " repeats '" + out.back() + "'");
  }
  return out;
}

MetricSpace parse_space(const json& j) {
  const std::string where = "metric_space";
  const auto kind = string(require(j, "kind", where), where + ".kind");
  if (kind == "grid") {
    check_keys(j, where, {"kind", "width", "height", "metric"});
    const int w = static_cast<int>(integral(require(j, "width", where), where + ".width"));
    const int h = static_cast<int>(integral(require(j, "height", where), where + ".height"));
    MetricKind metric = MetricKind::Manhattan;
    if (j.contains("metric")) {
      const auto name = string(j["metric"], where + ".metric");
      if (name == "manhattan")
        metric = MetricKind::Manhattan;
      else if (name == "chebyshev")
        metric = MetricKind::Chebyshev;
      else
        throw ParseError("grid metric must be 'manhattan' or 'chebyshev', got '" + name + "'");
    }
    return MetricSpace::grid(w, h, metric);
  }
  if (kind == "graph" || kind == "table") {
    if (kind == "graph")
      check_keys(j, where, {"kind", "nodes", "edges", "coords"});
    else
      check_keys(j, where, {"kind", "nodes", "distances", "coords"});
    auto nodes = string_list(require(j, "nodes", where), where + ".nodes");
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < nodes.size(); ++i) index[nodes[i]] = static_cast<int>(i);
    auto node = [&](const json& v, const std::string& w) {
      const auto name = string(v, w);
      auto it = index.find(name);
      if (it == index.end()) throw ParseError(w + " references unknown node '" + name + "'");
      return it->second;
    };
    MetricSpace space;
    if (kind == "graph") {
      const auto& edges = require(j, "edges", where);
      if (!edges.is_array()) throw ParseError(where + ".edges must be an array");
      std::vector<std::pair<int, int>> list;
      for (const auto& e : edges) {
        if (!e.is_array() || e.size() != 2) throw ParseError(where + ".edges entries must be [node, node]");
        list.emplace_back(node(e[0], where + ".edges"), node(e[1], where + ".edges"));
      }
      space = MetricSpace::graph(std::move(nodes), std::move(list));
    } else {
      const auto& rows = require(j, "distances", where);
      if (!rows.is_array()) throw ParseError(where + ".distances must be an array of rows");
      std::vector<std::vector<double>> table;
      for (const auto& row : rows) {
        if (!row.is_array()) throw ParseError(where + ".distances must be an array of rows");
        std::vector<double> r;
        for (const auto& d : row) r.push_back(integral(d, where + ".distances"));
        table.push_back(std::move(r));
      }
      space = MetricSpace::table(std::move(nodes), std::move(table));
    }
    if (j.contains("coords")) {
      const auto& c = j["coords"];
      if (!c.is_object()) throw ParseError(where + ".coords must map node names to [x, y]");
      std::vector<std::pair<double, double>> coords(space.size(), {0.0, 0.0});
      std::vector<char> seen(space.size(), 0);
      for (const auto& [name, xy] : c.items()) {
        const int i = node(json(name), where + ".coords");
        if (!xy.is_array() || xy.size() != 2) throw ParseError(where + ".coords values must be [x, y]");
        coords[i] = {number(xy[0], where + ".coords"), number(xy[1], where + ".coords")};
        seen[i] = 1;
      }
      for (char s : seen)
        if (!s) throw ParseError(where + ".coords must cover every node");
      space.set_coords(std::move(coords));
    }
    return space;
  }
  throw ParseError("metric_space.kind must be 'grid', 'graph' or 'table', got '" + kind + "'");
}

int parse_location(const MetricSpace& space, const json& v, const std::string& where) {
  if (space.is_grid()) {
    if (!v.is_array() || v.size() != 2) throw ParseError(where + " must be a grid cell [x, y]");
    const int x = static_cast<int>(integral(v[0], where));
    const int y = static_cast<int>(integral(v[1], where));
    auto cell = space.cell(x, y);
    if (!cell) throw ParseError(where + " is outside the grid");
    return *cell;
  }
  const auto name = string(v, where);
  auto loc = space.find(name);
  if (!loc) throw ParseError(where + " references unknown node '" + name + "'");
  return *loc;
}

json emit_location(const MetricSpace& space, int loc) {
  if (space.is_grid()) return json::array({loc % space.width(), loc / space.width()});
  return space.name(loc);
}

struct AgentContext {
  const MetricSpace& space;
  const std::vector<std::string>& internal;
  std::string where;

  AgentState state(const json& v, const std::string& w) const {
    check_keys(v, w, {"loc", "y"});
    AgentState s;
    s.location = parse_location(space, require(v, "loc", w), w + ".loc");
    if (v.contains("y")) {
      const auto name = string(v["y"], w + ".y");
      auto it = std::find(internal.begin(), internal.end(), name);
      if (it == internal.end()) throw ParseError(w + ".y references unknown internal state '" + name + "'");
      s.internal = static_cast<int>(it - internal.begin());
    } else if (internal.size() != 1) {
      throw ParseError(w + " must name its internal state 'y'");
    }
    return s;
  }
};

AgentSpec parse_agent(const MetricSpace& space, const json& j, int k) {
  const std::string where = "agents[" + std::to_string(k) + "]";
  check_keys(j, where, {"name", "internal_states", "actions", "states", "transitions", "local_rewards", "start"});
  AgentSpec spec;
  spec.name = j.contains("name") ? string(j["name"], where + ".name") : "agent" + std::to_string(k);
  if (j.contains("internal_states")) spec.internal_states = string_list(j["internal_states"], where + ".internal_states");
  if (spec.internal_states.empty()) throw ParseError(where + ".internal_states must not be empty");
  spec.actions = string_list(require(j, "actions", where), where + ".actions");
  if (spec.actions.empty()) throw ParseError(where + ".actions must not be empty");
  AgentContext ctx{space, spec.internal_states, where};

  if (j.contains("states")) {
    const auto& list = j["states"];
    if (!list.is_array()) throw ParseError(where + ".states must be an array");
    for (const auto& s : list) spec.states.push_back(ctx.state(s, where + ".states"));
  } else {
    for (int loc = 0; loc < space.size(); ++loc)
      for (int y = 0; y < static_cast<int>(spec.internal_states.size()); ++y) spec.states.push_back({loc, y});
  }
  std::map<AgentState, int> index;
  for (int i = 0; i < spec.num_states(); ++i)
    if (!index.emplace(spec.states[i], i).second) throw ParseError(where + ".states lists a state twice");
  auto state_index = [&](const json& v, const std::string& w) {
    const auto s = ctx.state(v, w);
    auto it = index.find(s);
    if (it == index.end()) throw ParseError(w + " is not in the agent's state space");
    return it->second;
  };
  auto action_index = [&](const json& v, const std::string& w) -> int {
    const auto name = string(v, w);
    if (name == "*") return -1;
    auto it = std::find(spec.actions.begin(), spec.actions.end(), name);
    if (it == spec.actions.end()) throw ParseError(w + " references unknown action '" + name + "'");
    return static_cast<int>(it - spec.actions.begin());
  };

  const std::size_t slots = static_cast<std::size_t>(spec.num_states()) * spec.actions.size();
  spec.transitions.assign(slots, {});
  std::vector<int> specificity(slots, 0);  // 0 unset, 1 wildcard, 2 explicit
  const auto& transitions = require(j, "transitions", where);
  if (!transitions.is_array()) throw ParseError(where + ".transitions must be an array");
  for (std::size_t t = 0; t < transitions.size(); ++t) {
    const std::string w = where + ".transitions[" + std::to_string(t) + "]";
    const auto& entry = transitions[t];
    check_keys(entry, w, {"from", "action", "to"});
    const int from = state_index(require(entry, "from", w), w + ".from");
    const int action = entry.contains("action") ? action_index(entry["action"], w + ".action") : -1;
    const auto& to = require(entry, "to", w);
    if (!to.is_array() || to.empty()) throw ParseError(w + ".to must be a non-empty array");
    std::vector<Outcome> outcomes;
    for (const auto& o : to) {
      check_keys(o, w + ".to", {"loc", "y", "p"});
      json state = json::object();
      state["loc"] = require(o, "loc", w + ".to");
      if (o.contains("y")) state["y"] = o["y"];
      const double p = o.contains("p") ? number(o["p"], w + ".to.p") : 1.0;
      if (!(p >= 0 && p <= 1)) throw ParseError(w + ".to.p must lie in [0, 1]");
      outcomes.push_back({state_index(state, w + ".to"), p});
    }
    const int level = action < 0 ? 1 : 2;
    for (int a = 0; a < spec.num_actions(); ++a) {
      if (action >= 0 && a != action) continue;
      const auto slot = spec.slot(from, a);
      if (specificity[slot] == level) throw ParseError(w + " redefines a transition already given");
      if (specificity[slot] > level) continue;
      specificity[slot] = level;
      spec.transitions[slot] = outcomes;
    }
  }
  for (int s = 0; s < spec.num_states(); ++s)
    for (int a = 0; a < spec.num_actions(); ++a)
      if (!specificity[spec.slot(s, a)])
        throw ParseError(where + " has no transition for state " + std::to_string(s) + " action '" + spec.actions[a] +
                         "'");

  spec.rewards.assign(slots, 0.0);
  std::vector<int> reward_level(slots, 0);
  if (j.contains("local_rewards")) {
    const auto& rewards = j["local_rewards"];
    if (!rewards.is_array()) throw ParseError(where + ".local_rewards must be an array");
    for (std::size_t t = 0; t < rewards.size(); ++t) {
      const std::string w = where + ".local_rewards[" + std::to_string(t) + "]";
      const auto& entry = rewards[t];
      check_keys(entry, w, {"state", "action", "value"});
      const int s = state_index(require(entry, "state", w), w + ".state");
      const int action = entry.contains("action") ? action_index(entry["action"], w + ".action") : -1;
      const double value = number(require(entry, "value", w), w + ".value");
      const int level = action < 0 ? 1 : 2;
      for (int a = 0; a < spec.num_actions(); ++a) {
        if (action >= 0 && a != action) continue;
        const auto slot = spec.slot(s, a);
        if (reward_level[slot] == level) throw ParseError(w + " redefines a reward already given");
        if (reward_level[slot] > level) continue;
        reward_level[slot] = level;
        spec.rewards[slot] = value;
      }
    }
  }
  spec.start = state_index(require(j, "start", where), where + ".start");
  return spec;
}

PairwiseRewardRule parse_rule(const json& j, int i, int num_agents) {
  const std::string where = "pairwise_rules[" + std::to_string(i) + "]";
  check_keys(j, where, {"pair", "distance_min", "distance_max", "internal_match", "action_match", "value"});
  PairwiseRewardRule rule;
  const auto& pair = require(j, "pair", where);
  if (pair.is_string()) {
    if (pair.get<std::string>() != "all") throw ParseError(where + ".pair must be [j, k] or \"all\"");
  } else {
    if (!pair.is_array() || pair.size() != 2) throw ParseError(where + ".pair must be [j, k] or \"all\"");
    const int a = static_cast<int>(integral(pair[0], where + ".pair"));
    const int b = static_cast<int>(integral(pair[1], where + ".pair"));
    if (a < 0 || b < 0 || a >= num_agents || b >= num_agents || a == b)
      throw ParseError(where + ".pair must name two distinct agents");
    rule.pair = std::pair{a, b};
  }
  rule.distance_min = j.contains("distance_min") ? integral(j["distance_min"], where + ".distance_min") : 0;
  rule.distance_max = integral(require(j, "distance_max", where), where + ".distance_max");
  if (rule.distance_min < 0 || rule.distance_min > rule.distance_max)
    throw ParseError(where + " needs 0 <= distance_min <= distance_max");
  auto matches = [&](const char* key, std::optional<std::vector<std::string>>& mj,
                     std::optional<std::vector<std::string>>& mk) {
    if (!j.contains(key)) return;
    const auto& m = j[key];
    check_keys(m, where + "." + key, {"j", "k"});
    if (m.contains("j")) mj = string_list(m["j"], where + "." + key + ".j");
    if (m.contains("k")) mk = string_list(m["k"], where + "." + key + ".k");
  };
  matches("internal_match", rule.internal_j, rule.internal_k);
  matches("action_match", rule.action_j, rule.action_k);
  rule.value = number(require(j, "value", where), where + ".value");
  return rule;
}

double parse_gamma(const json& v) {
  if (v.is_number()) return v.get<double>();
  const auto text = string(v, "gamma");
  double value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ParseError("gamma must be a decimal string, got '" + text + "'");
  return value;
}

}  // namespace

std::string format_gamma(double gamma) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, gamma);
  return std::string(buf, ptr);
}

ScenarioModel parse_scenario(const std::string& text, std::size_t state_budget) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  check_keys(doc, "scenario", {"name", "description", "metric_space", "agents", "pairwise_rules", "R", "V", "gamma"});
  auto space = parse_space(require(doc, "metric_space", "scenario"));
  const auto& agents_json = require(doc, "agents", "scenario");
  if (!agents_json.is_array() || agents_json.empty()) throw ParseError("agents must be a non-empty array");
  std::vector<AgentSpec> agents;
  for (std::size_t k = 0; k < agents_json.size(); ++k)
    agents.push_back(parse_agent(space, agents_json[k], static_cast<int>(k)));
  std::vector<PairwiseRewardRule> rules;
  if (doc.contains("pairwise_rules")) {
    const auto& list = doc["pairwise_rules"];
    if (!list.is_array()) throw ParseError("pairwise_rules must be an array");
    for (std::size_t i = 0; i < list.size(); ++i)
      rules.push_back(parse_rule(list[i], static_cast<int>(i), static_cast<int>(agents.size())));
  }
  const double R = integral(require(doc, "R", "scenario"), "R");
  const double V = integral(require(doc, "V", "scenario"), "V");
  const double gamma = parse_gamma(require(doc, "gamma", "scenario"));
  const std::string name = doc.contains("name") ? string(doc["name"], "name") : "scenario";
  ScenarioModel model(name, std::move(space), std::move(agents), std::move(rules), R, V, gamma, state_budget);
  if (doc.contains("description")) model.set_description(string(doc["description"], "description"));
  return model;
}

ScenarioModel load_scenario(const std::filesystem::path& path, std::size_t state_budget) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), state_budget);
}

namespace {

ordered_json emit_state(const ScenarioModel& model, int k, const AgentState& s) {
  ordered_json out;
  out["loc"] = emit_location(model.space(), s.location);
  if (model.agent(k).internal_states.size() > 1) out["y"] = model.agent(k).internal_states[s.internal];
  return out;
}

bool full_product(const MetricSpace& space, const AgentSpec& spec) {
  if (spec.states.size() != static_cast<std::size_t>(space.size()) * spec.internal_states.size()) return false;
  std::size_t i = 0;
  for (int loc = 0; loc < space.size(); ++loc)
    for (int y = 0; y < static_cast<int>(spec.internal_states.size()); ++y, ++i)
      if (spec.states[i].location != loc || spec.states[i].internal != y) return false;
  return true;
}

}  // namespace

std::string emit_scenario(const ScenarioModel& model) {
  ordered_json doc;
  doc["name"] = model.name();
  if (!model.description().empty()) doc["description"] = model.description();
  const auto& space = model.space();
  ordered_json ms;
  if (space.is_grid()) {
    ms["kind"] = "grid";
    ms["width"] = space.width();
    ms["height"] = space.height();
    ms["metric"] = to_string(space.metric());
  } else {
    ms["kind"] = space.metric() == MetricKind::Table ? "table" : "graph";
    ordered_json nodes = ordered_json::array();
    for (int i = 0; i < space.size(); ++i) nodes.push_back(space.name(i));
    ms["nodes"] = nodes;
    if (space.metric() == MetricKind::Table) {
      ordered_json rows = ordered_json::array();
      for (int a = 0; a < space.size(); ++a) {
        ordered_json row = ordered_json::array();
        for (int b = 0; b < space.size(); ++b) row.push_back(static_cast<long long>(space.distance(a, b)));
        rows.push_back(row);
      }
      ms["distances"] = rows;
    } else {
      ordered_json edges = ordered_json::array();
      for (auto [a, b] : space.edges()) edges.push_back({space.name(a), space.name(b)});
      ms["edges"] = edges;
    }
    if (space.has_explicit_coords()) {
      ordered_json coords;
      for (int i = 0; i < space.size(); ++i) {
        auto [x, y] = space.coords(i);
        coords[space.name(i)] = {x, y};
      }
      ms["coords"] = coords;
    }
  }
  doc["metric_space"] = ms;

  ordered_json agents = ordered_json::array();
  for (int k = 0; k < model.num_agents(); ++k) {
    const auto& spec = model.agent(k);
    ordered_json a;
    a["name"] = spec.name;
    a["internal_states"] = spec.internal_states;
    a["actions"] = spec.actions;
    if (!full_product(space, spec)) {
      ordered_json states = ordered_json::array();
      for (const auto& s : spec.states) states.push_back(emit_state(model, k, s));
      a["states"] = states;
    }
    ordered_json transitions = ordered_json::array();
    ordered_json rewards = ordered_json::array();
    auto outcomes_json = [&](const std::vector<Outcome>& outcomes) {
      ordered_json to = ordered_json::array();
      for (const auto& o : outcomes) {
        auto entry = emit_state(model, k, spec.states[o.state]);
        if (o.probability != 1.0) entry["p"] = o.probability;
        to.push_back(entry);
      }
      return to;
    };
    for (int s = 0; s < spec.num_states(); ++s) {
      bool uniform = true;
      bool uniform_reward = true;
      for (int a2 = 1; a2 < spec.num_actions(); ++a2) {
        const auto& x = spec.transitions[spec.slot(s, 0)];
        const auto& y = spec.transitions[spec.slot(s, a2)];
        uniform = uniform && x.size() == y.size() &&
                  std::equal(x.begin(), x.end(), y.begin(), [](const Outcome& p, const Outcome& q) {
                    return p.state == q.state && p.probability == q.probability;
                  });
        uniform_reward = uniform_reward && spec.rewards[spec.slot(s, 0)] == spec.rewards[spec.slot(s, a2)];
      }
      const auto from = emit_state(model, k, spec.states[s]);
      for (int act = 0; act < (uniform ? 1 : spec.num_actions()); ++act) {
        ordered_json t;
        t["from"] = from;
        t["action"] = uniform ? "*" : spec.actions[act];
        t["to"] = outcomes_json(spec.transitions[spec.slot(s, act)]);
        transitions.push_back(t);
      }
      for (int act = 0; act < (uniform_reward ? 1 : spec.num_actions()); ++act) {
        const double value = spec.rewards[spec.slot(s, act)];
        if (value == 0) continue;
        ordered_json r;
        r["state"] = from;
        r["action"] = uniform_reward ? "*" : spec.actions[act];
        r["value"] = value;
        rewards.push_back(r);
      }
    }
    a["transitions"] = transitions;
    a["local_rewards"] = rewards;
    a["start"] = emit_state(model, k, spec.states[spec.start]);
    agents.push_back(a);
  }
  doc["agents"] = agents;

  ordered_json rules = ordered_json::array();
  for (const auto& rule : model.rules()) {
    ordered_json r;
    if (rule.pair)
      r["pair"] = {rule.pair->first, rule.pair->second};
    else
      r["pair"] = "all";
    r["distance_min"] = static_cast<long long>(rule.distance_min);
    r["distance_max"] = static_cast<long long>(rule.distance_max);
    auto match = [&](const char* key, const std::optional<std::vector<std::string>>& mj,
                     const std::optional<std::vector<std::string>>& mk) {
      if (!mj && !mk) return;
      ordered_json m;
      if (mj) m["j"] = *mj;
      if (mk) m["k"] = *mk;
      r[key] = m;
    };
    match("internal_match", rule.internal_j, rule.internal_k);
    match("action_match", rule.action_j, rule.action_k);
    r["value"] = rule.value;
    rules.push_back(r);
  }
  doc["pairwise_rules"] = rules;
  doc["R"] = static_cast<long long>(model.dependence_radius());
  doc["V"] = static_cast<long long>(model.visibility());
  doc["gamma"] = format_gamma(model.gamma());
  return doc.dump(2) + "\n";
}

}  // namespace limdp
