// Acceptance suite: one PASS/FAIL line per criterion. Exit status is non-zero
// when any hard criterion fails; soft caption targets only report misses.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "limdp/partition.hpp"
#include "limdp/policies.hpp"
#include "limdp/rollout.hpp"
#include "limdp/scenarios.hpp"
#include "limdp/solvers.hpp"
#include "limdp/validate.hpp"

using namespace limdp;
namespace fs = std::filesystem;

namespace {

constexpr double kEpsilon = 1e-6;

struct Outcome {
  bool pass = true;
  std::string detail;
  bool soft = false;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const char* status = out.pass ? "PASS" : (out.soft ? "MISS" : "FAIL");
  if (!out.pass && !out.soft) ++failures;
  std::printf("%s criterion %d %s: %s [%.1fs]\n", status, id, title.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

RandomInstanceSpec instance_spec(int i, int agents, int locations, double R, double V, double gamma) {
  RandomInstanceSpec spec;
  spec.n_agents = agents;
  spec.n_locations = locations;
  spec.metric = static_cast<RandomMetric>(i % 3);
  spec.reward_bound = 5;
  spec.stochastic = i % 2 == 0;
  spec.R = R;
  spec.V = V;
  spec.gamma = gamma;
  spec.seed = 1000 + static_cast<std::uint64_t>(i);
  return spec;
}

JointPolicy hashed_policy(const ScenarioModel& model, std::uint64_t salt) {
  return [&model, salt](const JointState& s) {
    JointAction a(model.num_agents());
    const auto h = std::hash<std::string>{}(format_joint_state(model, s));
    for (int k = 0; k < model.num_agents(); ++k)
      a[k] = static_cast<int>((h ^ (salt * 0x9e3779b97f4a7c15ull + 31 * k)) % model.agent(k).num_actions());
    return a;
  };
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

double policy_return(const ScenarioModel& model, PolicyKind kind) {
  GroupDecentralizedPolicy policy(model, kind);
  return rollout(model, [&](const JointState& s) { return policy.action(s); }, model.start_state(),
                 default_rollout_horizon(model), 0)
      .discounted_return;
}

Outcome dependence_time() {
  const int instances = 200, per_instance = 5;
  std::size_t violations = 0, trajectories = 0, split = 0;
  for (int i = 0; i < instances; ++i) {
    const int agents = 2 + i % 2;
    const double R = i % 3 == 0 ? 0 : 1 + i % 2;
    const double V = R + 1 + i % 3;
    const auto model = random_instance(instance_spec(i, agents, 8 + i % 5, R, V, 0.9), i);
    GroupDecentralizedPolicy amalgam(model, PolicyKind::Amalgam);
    for (int j = 0; j < per_instance; ++j) {
      const JointPolicy policy = j % 2 ? JointPolicy([&](const JointState& s) { return amalgam.action(s); })
                                       : hashed_policy(model, j);
      const auto t = rollout(model, policy, model.start_state(), 40, 7919u * i + j);
      violations += check_dependence_time(model, t, 1e-12).size();
      for (const auto& step : t.steps) split += step.z.size() > 1;
      ++trajectories;
    }
  }
  return {violations == 0, std::to_string(trajectories) + " trajectories over " + std::to_string(instances) +
                               " instances (" + std::to_string(split) + " steps with split Z), " +
                               std::to_string(violations) + " violations"};
}

Outcome cutoff_decomposition() {
  const int instances = 100;
  double worst = 0;
  std::size_t states = 0, split = 0;
  for (int i = 0; i < instances; ++i) {
    const int agents = 2 + i % 2;
    const double R = i % 4 == 0 ? 0 : 1;
    const auto model =
        random_instance(instance_spec(i, agents, agents == 3 ? 4 + i % 3 : 5 + i % 8, R, R + 1 + i % 3, 0.9), i);
    CutoffSolver solver(model, kEpsilon);
    const auto augmented = solve_augmented_cutoff(model, kEpsilon);
    for (std::size_t k = 0; k < augmented.values.size(); ++k) {
      worst = std::max(worst, std::abs(augmented.values[k] - solver.value(augmented.states[k], augmented.blocks[k])));
      if (augmented.blocks[k].size() > 1) ++split;
    }
    states += augmented.values.size();
  }
  return {worst <= 2 * kEpsilon, std::to_string(instances) + " instances, " + std::to_string(states) +
                                     " reachable (s, C) states (" + std::to_string(split) + " with split C), max error " + sci(worst) + " (limit 2e-6)"};
}

Outcome first_step_equivalence() {
  const int instances = 100;
  double worst = 0;
  int per_c[4] = {};
  std::size_t states = 0, split = 0;
  for (int i = 0; i < instances; ++i) {
    const int c = i % 4;
    const double R = (i / 4) % 2;
    auto spec = instance_spec(i, i % 3 == 0 ? 3 : 2, 8 + i % 5, R, R + 2 * c + 1, i % 2 ? 0.5 : 0.9);
    if (c >= 2) spec.metric = RandomMetric::Grid;
    const auto model = random_instance(spec, i);
    if (dependence_horizon(model) != c) return {false, "instance " + std::to_string(i) + " has the wrong horizon"};
    ++per_c[c];
    const auto joint = finite_horizon_dp(model, c + 1);
    CutoffHorizonSolver cutoff(model, c + 1);
    std::vector<int> local(joint.space.arity()), actions(joint.space.arity());
    for (std::size_t s = 0; s < joint.space.num_states(); ++s) {
      joint.space.decode_state(s, local);
      ++states;
      if (!visibility_partition_local(model, local, model.visibility()).is_trivial()) ++split;
      const auto q = joint.q(0, s);
      for (std::size_t a = 0; a < q.size(); ++a) {
        joint.space.decode_action(a, actions);
        worst = std::max(worst, std::abs(cutoff.joint_q0(local, actions) - q[a]));
      }
    }
  }
  return {worst <= 1e-9, std::to_string(instances) + " instances (c=0..3: " + std::to_string(per_c[0]) + "/" +
                             std::to_string(per_c[1]) + "/" + std::to_string(per_c[2]) + "/" +
                             std::to_string(per_c[3]) + "), " + std::to_string(states) + " states of which " +
                             std::to_string(split) + " split, max |Q0* - Q0^C| " + sci(worst)};
}

Outcome upper_bounds() {
  const int instances = 200;
  int violations = 0;
  double margin[3] = {INFINITY, INFINITY, INFINITY};
  const PolicyKind kinds[] = {PolicyKind::Amalgam, PolicyKind::Cutoff, PolicyKind::FirstStepFiniteHorizon};
  PolicyOptions options;
  options.epsilon = kEpsilon;
  for (int i = 0; i < instances; ++i) {
    const int agents = 2 + i % 2;
    const double R = i % 3 == 0 ? 0 : 1;
    const double gamma = i % 2 ? 0.5 : 0.9;
    const auto model = random_instance(
        instance_spec(i, agents, agents == 3 ? 4 + i % 3 : 5 + i % 8, R, R + 1 + (i / 2) % 4, gamma), i);
    const auto v_star = value_iteration(model, kEpsilon).values;
    for (int k = 0; k < 3; ++k) {
      const auto r = policy_gap_report(model, kinds[k], options, v_star, false);
      if (!r.passed) ++violations;
      margin[k] = std::min(margin[k], r.bound + r.tolerance - r.max_gap);
    }
  }
  return {violations == 0, std::to_string(instances) + " instances x 3 policies, " + std::to_string(violations) +
                               " violations, smallest slack amalgam " + fmt(margin[0]) + " cutoff " +
                               fmt(margin[1]) + " fsfho " + fmt(margin[2])};
}

Outcome lower_bound_certificates() {
  int failed = 0, cases = 0;
  double worst_formula = 0;
  for (int ell = 0; ell <= 3; ++ell)
    for (double gamma : {0.5, 0.9, 0.99}) {
      const auto r = lower_bound_report(ell, gamma, 1, kEpsilon);
      ++cases;
      if (!r.passed) ++failed;
      const double formula = std::pow(gamma, ell + 1) / (1 - gamma);
      const double err = std::abs(std::abs(r.v_a0_s1) - formula);
      worst_formula = std::max(worst_formula, err);
      if (err > 1e-6) ++failed;
    }
  return {failed == 0, std::to_string(cases) + " (l, gamma) cases, " + std::to_string(failed) +
                           " failures, max |V(S1,S3)| formula error " + sci(worst_formula)};
}

Outcome group_locality() {
  const int target = 10000;
  int pairs = 0, violations = 0;
  std::mt19937_64 rng(2024);
  const PolicyKind kinds[] = {PolicyKind::Amalgam, PolicyKind::Cutoff, PolicyKind::FirstStepFiniteHorizon};
  for (int i = 0; pairs < target && i < 200; ++i) {
    const double R = i % 2;
    const auto model = random_instance(instance_spec(i, 3, 7 + i % 6, R, R + 1 + i % 2, 0.9), i);
    const auto space = JointSpace::all(model);
    for (auto kind : kinds) {
      GroupDecentralizedPolicy policy(model, kind);
      for (int trial = 0; trial < 150 && pairs < target; ++trial) {
        const auto s = space.joint_state(rng() % space.num_states());
        const auto zs = policy.groups(s);
        const auto mask = zs.masks()[rng() % zs.size()];
        if (std::popcount(mask) == model.num_agents()) continue;
        for (int tries = 0; tries < 30; ++tries) {
          auto t = s;
          const auto other = space.joint_state(rng() % space.num_states());
          for (int k = 0; k < model.num_agents(); ++k)
            if (!(mask >> k & 1)) t.agents[k] = other.agents[k];
          const auto zt = policy.groups(t);
          if (std::find(zt.masks().begin(), zt.masks().end(), mask) == zt.masks().end()) continue;
          const auto a = policy.action(s), b = policy.action(t);
          for (int k : mask_members(mask))
            if (a[k] != b[k]) {
              ++violations;
              break;
            }
          ++pairs;
          break;
        }
      }
    }
  }
  return {pairs >= target && violations == 0,
          std::to_string(pairs) + " permutation pairs across amalgam/cutoff/fsfho, " + std::to_string(violations) +
              " sub-action changes"};
}

Outcome hard_scenarios() {
  std::vector<std::string> problems;
  std::string detail;
  double gaps[3];
  const double radii[] = {25, 35, 45};
  for (int i = 0; i < 3; ++i) {
    const auto model = bullseye(radii[i]);
    const auto s0 = model.start_state();
    const double v_star = value_iteration(model, kEpsilon).values.at(s0);
    GroupDecentralizedPolicy amalgam(model, PolicyKind::Amalgam);
    const double v_pi =
        evaluate_policy(model, [&](const JointState& s) { return amalgam.action(s); }, kEpsilon).at(s0);
    gaps[i] = std::abs(v_star - v_pi);
  }
  detail += "bullseye amalgam gaps " + fmt(gaps[0], 4) + "/" + fmt(gaps[1], 4) + "/" + fmt(gaps[2], 7);
  if (!(gaps[1] <= gaps[0] + 2 * kEpsilon && gaps[2] <= gaps[1] + 2 * kEpsilon)) problems.push_back("gap increases");
  if (gaps[2] > 2 * kEpsilon) problems.push_back("V=45 gap above 2 eps");

  const auto aisle = aisle_walk();
  const double cutoff = policy_return(aisle, PolicyKind::Cutoff), amalgam = policy_return(aisle, PolicyKind::Amalgam);
  detail += "; aisle cutoff " + fmt(cutoff, 2) + " > amalgam " + fmt(amalgam, 2);
  if (!(cutoff > amalgam)) problems.push_back("aisle ordering");

  const auto corridor = penalty_jitter();
  for (auto kind : {PolicyKind::Amalgam, PolicyKind::Cutoff, PolicyKind::JointOptimal}) {
    GroupDecentralizedPolicy policy(corridor, kind);
    const auto t =
        rollout(corridor, [&](const JointState& s) { return policy.action(s); }, corridor.start_state(), 50, 0);
    const auto jitter = detect_jitter(t, 3);
    bool right = false;
    for (const auto& j : jitter) right = right || corridor.agent(j.agent).name == "right";
    if (kind == PolicyKind::JointOptimal) {
      if (!detect_jitter(t, 2).empty()) problems.push_back("optimal rollout jitters");
    } else if (!right || jitter.size() != 1) {
      problems.push_back(std::string("no right-agent jitter under ") + to_string(kind));
    }
  }
  detail += "; jitter flagged for right agent under amalgam and cutoff, optimal clean";
  std::string joined;
  for (const auto& p : problems) joined += (joined.empty() ? "" : ", ") + p;
  return {problems.empty(), problems.empty() ? detail : detail + " -- " + joined};
}

Outcome soft_scenarios() {
  struct Target {
    std::string label;
    std::function<double()> value;
    double expected;
  };
  const auto b25 = bullseye(25), b35 = bullseye(35), b45 = bullseye(45);
  const auto aisle = aisle_walk();
  const auto road = highway();
  const auto merge = lane_merge();
  const std::vector<Target> targets = {
      {"bullseye optimal", [&] { return policy_return(b45, PolicyKind::JointOptimal); }, 8.85},
      {"bullseye amalgam V=25", [&] { return policy_return(b25, PolicyKind::Amalgam); }, 6.74},
      {"bullseye amalgam V=35", [&] { return policy_return(b35, PolicyKind::Amalgam); }, 8.26},
      {"bullseye amalgam V=45", [&] { return policy_return(b45, PolicyKind::Amalgam); }, 8.85},
      {"bullseye cutoff V=25", [&] { return policy_return(b25, PolicyKind::Cutoff); }, -5.38},
      {"aisle optimal", [&] { return policy_return(aisle, PolicyKind::JointOptimal); }, 496.84},
      {"aisle amalgam", [&] { return policy_return(aisle, PolicyKind::Amalgam); }, 234.40},
      {"aisle cutoff", [&] { return policy_return(aisle, PolicyKind::Cutoff); }, 400},
      {"highway optimal", [&] { return policy_return(road, PolicyKind::JointOptimal); }, 73.5},
      {"highway amalgam", [&] { return policy_return(road, PolicyKind::Amalgam); }, 70.93},
      {"highway cutoff", [&] { return policy_return(road, PolicyKind::Cutoff); }, 0},
      {"lane merge optimal", [&] { return policy_return(merge, PolicyKind::JointOptimal); }, 2514.11},
      {"lane merge amalgam", [&] { return policy_return(merge, PolicyKind::Amalgam); }, 2514.11},
      {"lane merge cutoff", [&] { return policy_return(merge, PolicyKind::Cutoff); }, 2514.11},
  };
  int hits = 0;
  std::string misses;
  for (const auto& t : targets) {
    const double v = t.value();
    if (std::abs(v - t.expected) <= 0.01)
      ++hits;
    else
      misses += (misses.empty() ? "" : ", ") + t.label + " " + fmt(v, 2) + " vs " + fmt(t.expected, 2);
  }
  Outcome out{misses.empty(), std::to_string(hits) + "/" + std::to_string(targets.size()) +
                                  " caption values within 0.01" + (misses.empty() ? "" : "; misses: " + misses)};
  out.soft = true;
  return out;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Outcome cli_reproducibility() {
  const fs::path scenarios = LIMDP_SCENARIO_DIR;
  const auto tmp = fs::temp_directory_path() / "limdp_acceptance";
  fs::remove_all(tmp);
  const auto spec = tmp / "spec.json";
  fs::create_directories(tmp);
  std::ofstream(spec) << R"({"n_agents": 2, "n_locations": 5, "metric": "graph", "reward_bound": 5,
                            "stochastic": true, "R": 1, "V": 2, "gamma": "0.9", "seed": 7})";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve.csv", "solve " + (scenarios / "aisle_walk.json").string() + " --policy cutoff --out "},
      {"optimal.csv", "solve " + (scenarios / "penalty_jitter.json").string() + " --policy optimal --out "},
      {"rollout.jsonl",
       "rollout " + (scenarios / "highway.json").string() + " --policy amalgam --seed 5 --steps 60 --out "},
      {"bounds.csv", "verify bounds " + (scenarios / "penalty_jitter.json").string() + " --out "},
      {"campaign.csv", "campaign --spec " + spec.string() + " --count 5 --out "},
  };
  int mismatches = 0;
  for (int run = 0; run < 2; ++run) {
    fs::create_directories(tmp / std::to_string(run));
    for (const auto& [file, args] : commands) {
      const auto target = tmp / std::to_string(run) / file;
      const std::string command = std::string(LIMDP_CLI) + " " + args + target.string() + " > /dev/null 2>&1";
      if (std::system(command.c_str()) != 0) return {false, "command failed: " + args};
    }
  }
  for (const auto& [file, args] : commands) {
    const auto a = slurp(tmp / "0" / file), b = slurp(tmp / "1" / file);
    if (a.empty() || a != b) ++mismatches;
  }
  fs::remove_all(tmp);
  return {mismatches == 0, std::to_string(commands.size()) + " CLI outputs compared across two runs, " +
                               std::to_string(mismatches) + " differ"};
}

}  // namespace

int main() {
  report(1, "dependence time lemma", dependence_time);
  report(2, "cutoff value decomposition", cutoff_decomposition);
  report(3, "finite-horizon/cutoff first-step equivalence", first_step_equivalence);
  report(4, "upper bounds", upper_bounds);
  report(5, "lower bound", lower_bound_certificates);
  report(6, "group decentralization", group_locality);
  report(7, "scenario reproduction (hard targets)", hard_scenarios);
  report(8, "scenario reproduction (soft targets)", soft_scenarios);
  report(9, "CLI reproducibility", cli_reproducibility);
  std::printf("%s: %d hard criteria failed\n", failures ? "FAILED" : "ALL HARD CRITERIA PASSED", failures);
  return failures ? 1 : 0;
}
