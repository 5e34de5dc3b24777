#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "json.hpp"
#include "limdp/error.hpp"
#include "limdp/partition.hpp"
#include "limdp/policies.hpp"
#include "limdp/rollout.hpp"
#include "limdp/scenarios.hpp"
#include "oracles.hpp"

using namespace limdp;
using namespace fixtures;

namespace {

JointPolicy constant(int n, int a) {
  return [n, a](const JointState&) { return JointAction(n, a); };
}

JointPolicy hashed(const ScenarioModel& model, std::uint64_t salt) {
  return [&model, salt](const JointState& s) {
    JointAction a(model.num_agents());
    for (int k = 0; k < model.num_agents(); ++k) {
      const auto h = std::hash<std::string>{}(format_joint_state(model, s)) ^ (salt * 0x9e3779b97f4a7c15ull + k);
      a[k] = static_cast<int>(h % model.agent(k).num_actions());
    }
    return a;
  };
}

Trajectory from_trace(const std::vector<std::vector<int>>& locations) {
  Trajectory t;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    TrajectoryStep step;
    step.t = static_cast<int>(i);
    for (int loc : locations[i]) step.state.agents.push_back({loc, 0});
    t.steps.push_back(step);
  }
  return t;
}

}  // namespace

TEST(Rollout, DeterministicModelIgnoresSeed) {
  const auto model = random_instance(small_spec(3, 2, false), 1);
  const auto a = rollout(model, hashed(model, 1), model.start_state(), 40, 1);
  const auto b = rollout(model, hashed(model, 1), model.start_state(), 40, 987654321);
  ASSERT_EQ(a.steps.size(), 40u);
  for (int t = 0; t < 40; ++t) {
    ASSERT_EQ(a.steps[t].state, b.steps[t].state);
    ASSERT_EQ(a.steps[t].action, b.steps[t].action);
  }
  EXPECT_EQ(a.discounted_return, b.discounted_return);
}

TEST(Rollout, ReturnIsDiscountedRewardSum) {
  const auto model = random_instance(small_spec(2, 4), 3);
  const auto t = rollout(model, hashed(model, 2), model.start_state(), 25, 7);
  double expected = 0;
  for (const auto& step : t.steps) {
    ASSERT_EQ(step.reward, oracle::reward(model, step.state, step.action));
    expected += std::pow(model.gamma(), step.t) * step.reward;
  }
  EXPECT_NEAR(t.discounted_return, expected, 1e-9);
}

TEST(Rollout, TransitionsArePositiveProbability) {
  const auto model = random_instance(small_spec(3, 5), 3);
  const auto t = rollout(model, hashed(model, 3), model.start_state(), 60, 11);
  for (std::size_t i = 0; i + 1 < t.steps.size(); ++i) {
    const auto succ = oracle::successors(model, t.steps[i].state, t.steps[i].action);
    ASSERT_TRUE(succ.count(t.steps[i + 1].state));
  }
}

TEST(Rollout, TruncationWithinGeometricTail) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto model = random_instance(small_spec(2, seed, false), 2);
    const auto policy = hashed(model, seed);
    const auto v = evaluate_policy(model, policy, 1e-10);
    const double r_tilde = sup_reward(model);
    for (int T : {1, 5, 20}) {
      const auto t = rollout(model, policy, model.start_state(), T, 0);
      ASSERT_LE(std::abs(v.at(model.start_state()) - t.discounted_return),
                std::pow(model.gamma(), T) * r_tilde / (1 - model.gamma()) + 1e-9);
    }
    const auto full = rollout(model, policy, model.start_state(), default_rollout_horizon(model), 0);
    ASSERT_NEAR(full.discounted_return, v.at(model.start_state()), 2e-6);
  }
}

TEST(Rollout, MonteCarloMatchesExactEvaluation) {
  auto spec = small_spec(1, 3, true, 1, 2, 0.5, 6);
  const auto model = random_instance(spec, 5);
  const auto policy = hashed(model, 9);
  const double exact = evaluate_policy(model, policy, 1e-12).at(model.start_state());
  const int T = default_rollout_horizon(model, 1e-9);
  const int n = 100000;
  double sum = 0, sum_sq = 0;
  for (int seed = 0; seed < n; ++seed) {
    const double r = rollout(model, policy, model.start_state(), T, seed).discounted_return;
    sum += r;
    sum_sq += r * r;
  }
  const double mean = sum / n;
  const double se = std::sqrt(std::max(0.0, sum_sq / n - mean * mean) / n);
  ASSERT_GT(se, 0);
  EXPECT_LE(std::abs(mean - exact), 3 * se);
}

TEST(Rollout, BitReproducible) {
  const auto model = random_instance(small_spec(3, 1), 8);
  GroupDecentralizedPolicy p1(model, PolicyKind::Cutoff), p2(model, PolicyKind::Cutoff);
  const auto a = rollout(model, [&](const JointState& s) { return p1.action(s); }, model.start_state(), 50, 42);
  const auto b = rollout(model, [&](const JointState& s) { return p2.action(s); }, model.start_state(), 50, 42);
  EXPECT_EQ(std::memcmp(&a.discounted_return, &b.discounted_return, sizeof(double)), 0);
  std::ostringstream x, y;
  write_jsonl(x, model, a);
  write_jsonl(y, model, b);
  EXPECT_EQ(x.str(), y.str());
}

TEST(Rollout, RejectsBadInputs) {
  const auto model = random_instance(small_spec(2, 1), 1);
  EXPECT_THROW(rollout(model, constant(2, 0), model.start_state(), 0, 1), InvalidModelError);
  EXPECT_THROW(rollout(model, constant(1, 0), model.start_state(), 3, 1), PolicyError);
  EXPECT_THROW(rollout(model, constant(2, 7), model.start_state(), 3, 1), PolicyError);
  auto s = model.start_state();
  s.agents[0].location = 999;
  EXPECT_THROW(rollout(model, constant(2, 0), s, 3, 1), InvalidStateError);
}

TEST(Rollout, PartitionTraceMatchesOracleFold) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto model = random_instance(small_spec(3, seed), 4);
    const auto t = rollout(model, hashed(model, seed), model.start_state(), 30, seed);
    auto fold = oracle::bfs_groups(model, t.steps[0].state, model.visibility());
    for (const auto& step : t.steps) {
      const auto z = oracle::bfs_groups(model, step.state, model.visibility());
      fold = oracle::intersect_groups(fold, z);
      ASSERT_EQ(step.z.groups(), z);
      ASSERT_EQ(step.c.groups(), fold);
    }
  }
}

TEST(DependenceTime, RandomTrajectoriesDecomposeExactly) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const double V = 2 + static_cast<double>(seed % 4);
    const auto model = random_instance(small_spec(3, seed, true, 1, V, 0.9, 7), seed);
    for (std::uint64_t run = 0; run < 3; ++run) {
      const auto t = rollout(model, hashed(model, run), model.start_state(), 40, run);
      ASSERT_TRUE(check_dependence_time(model, t).empty()) << seed;
    }
  }
}

TEST(DependenceTime, ReportsTamperedRewards) {
  const auto model = random_instance(small_spec(2, 1), 2);
  auto t = rollout(model, hashed(model, 0), model.start_state(), 10, 3);
  t.steps[4].reward += 1;
  const auto violations = check_dependence_time(model, t);
  ASSERT_FALSE(violations.empty());
  for (const auto& v : violations) {
    EXPECT_EQ(v.T + v.delta, 4);
    EXPECT_EQ(v.reward - v.decomposed, 1);
  }
}

TEST(DependenceTime, RequiresVisibilityAboveRadius) {
  auto model = random_instance(small_spec(2, 1), 2);
  const auto t = rollout(model, hashed(model, 0), model.start_state(), 5, 3);
  const ScenarioModel broken("broken", model.space(), model.agents(), model.rules(), 2, 2, 0.9);
  EXPECT_THROW(check_dependence_time(broken, t), InvalidModelError);
}

TEST(StoppingTimes, Definitions) {
  const auto whole = Partition::whole(3), single = Partition::singletons(3);
  const auto pair = Partition::from_groups(3, {{0, 1}, {2}});
  EXPECT_TRUE(detect_stopping_times({whole, whole, whole}, StoppingVariant::Amalgam).empty());
  EXPECT_TRUE(detect_stopping_times({whole, pair, single}, StoppingVariant::Cutoff).empty());
  EXPECT_EQ(detect_stopping_times({whole, pair, single}, StoppingVariant::Amalgam), (std::vector<int>{1, 2}));
  EXPECT_EQ(detect_stopping_times({single, pair, pair, whole}, StoppingVariant::Cutoff), (std::vector<int>{1, 3}));
}

TEST(StoppingTimes, MatchDirectScan) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 4);
    std::vector<Partition> trace;
    std::vector<std::vector<std::vector<int>>> groups;
    for (int t = 0; t < 12; ++t) {
      std::vector<std::vector<int>> g;
      std::vector<int> label(n);
      for (int k = 0; k < n; ++k) label[k] = static_cast<int>(rng() % n);
      for (int l = 0; l < n; ++l) {
        std::vector<int> members;
        for (int k = 0; k < n; ++k)
          if (label[k] == l) members.push_back(k);
        if (!members.empty()) g.push_back(members);
      }
      trace.push_back(Partition::from_groups(n, g));
      groups.push_back(trace.back().groups());
    }
    std::vector<int> amalgam, cutoff;
    for (int t = 1; t < 12; ++t) {
      if (groups[t] != groups[t - 1]) amalgam.push_back(t);
      if (!oracle::finer(groups[t], groups[t - 1])) cutoff.push_back(t);
    }
    ASSERT_EQ(detect_stopping_times(trace, StoppingVariant::Amalgam), amalgam);
    ASSERT_EQ(detect_stopping_times(trace, StoppingVariant::Cutoff), cutoff);
  }
}

TEST(Jitter, StationaryAndForwardMotionAreClean) {
  EXPECT_TRUE(detect_jitter(from_trace({{1}, {1}, {1}, {1}, {1}, {1}}), 2).empty());
  EXPECT_TRUE(detect_jitter(from_trace({{0}, {1}, {2}, {3}, {4}, {5}}), 2).empty());
  EXPECT_THROW(detect_jitter(from_trace({{0}}), 1), InvalidModelError);
}

TEST(Jitter, PeriodTwoCycleReported) {
  const auto report = detect_jitter(from_trace({{0, 5}, {1, 5}, {2, 5}, {1, 5}, {2, 5}, {1, 5}, {2, 5}, {3, 5}}), 2);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].agent, 0);
  EXPECT_EQ(report[0].start, 1);
  EXPECT_EQ(report[0].repetitions, 3);
  EXPECT_EQ(report[0].location_a, 1);
  EXPECT_EQ(report[0].location_b, 2);
  EXPECT_TRUE(detect_jitter(from_trace({{0}, {1}, {2}, {1}, {2}, {3}}), 3).empty());
}

TEST(Jitter, PenaltyCorridorRightAgent) {
  const auto model = penalty_jitter();
  for (auto kind : {PolicyKind::Amalgam, PolicyKind::Cutoff}) {
    GroupDecentralizedPolicy policy(model, kind);
    const auto t = rollout(model, [&](const JointState& s) { return policy.action(s); }, model.start_state(), 50, 0);
    const auto report = detect_jitter(t, 5);
    ASSERT_EQ(report.size(), 1u) << to_string(kind);
    EXPECT_EQ(model.agent(report[0].agent).name, "right");
    EXPECT_GT(count_backtracks(t)[report[0].agent], 10);
  }
  GroupDecentralizedPolicy optimal(model, PolicyKind::JointOptimal);
  const auto t = rollout(model, [&](const JointState& s) { return optimal.action(s); }, model.start_state(), 50, 0);
  EXPECT_TRUE(detect_jitter(t, 2).empty());
}

TEST(Backtracks, CountsReturns) {
  EXPECT_EQ(count_backtracks(from_trace({{0}, {1}, {0}, {1}, {1}, {2}})), (std::vector<int>{2}));
}

TEST(CutoffRollout, SameStatesAndActionsAsJointRollout) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto model = random_instance(small_spec(3, seed, seed % 2), 7);
    const auto policy = hashed(model, seed);
    const auto a = rollout(model, policy, model.start_state(), 40, seed);
    const auto b = cutoff_rollout(model, policy, model.start_state(), 40, seed);
    for (int t = 0; t < 40; ++t) {
      ASSERT_EQ(a.steps[t].state, b.steps[t].state);
      ASSERT_EQ(a.steps[t].action, b.steps[t].action);
      ASSERT_TRUE(is_finer(b.steps[t].c, a.steps[t].z));
      if (t > 0) {
        ASSERT_TRUE(is_finer(b.steps[t].c, b.steps[t - 1].c));
      }
      double block = 0;
      for (const auto& g : b.steps[t].c.groups()) block += oracle::group_reward(model, g, b.steps[t].state, b.steps[t].action);
      ASSERT_EQ(b.steps[t].reward, block);
    }
  }
}

TEST(Export, JsonLinesFields) {
  const auto model = penalty_jitter();
  const auto t = rollout(model, constant(2, 1), model.start_state(), 3, 0);
  std::ostringstream os;
  write_jsonl(os, model, t);
  std::istringstream is(os.str());
  std::string line;
  int count = 0;
  while (std::getline(is, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["t"], count);
    EXPECT_EQ(j["state"].size(), 2u);
    EXPECT_EQ(j["action"].size(), 2u);
    EXPECT_TRUE(j["reward"].is_number());
    EXPECT_TRUE(j["Z"].is_array());
    EXPECT_TRUE(j["C"].is_array());
    ++count;
  }
  EXPECT_EQ(count, 3);
}

TEST(Export, AsciiFramesAndSvgPaths) {
  const auto model = penalty_jitter();
  const auto t = rollout(model, constant(2, 1), model.start_state(), 4, 0);
  std::ostringstream ascii, svg;
  write_ascii(ascii, model, t);
  write_svg(svg, model, t);
  const auto text = ascii.str();
  std::size_t frames = 0;
  for (std::size_t pos = 0; (pos = text.find("t=", pos)) != std::string::npos; ++pos) ++frames;
  EXPECT_EQ(frames, 5u);
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = svg.str().find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  EXPECT_EQ(lines, 2u);
  EXPECT_EQ(svg.str().rfind("</svg>\n"), svg.str().size() - 7);
}

TEST(Horizon, DefaultTruncation) {
  const auto model = penalty_jitter();
  const double r = sup_reward(model);
  const int T = default_rollout_horizon(model);
  EXPECT_LE(std::pow(model.gamma(), T) * r / (1 - model.gamma()), 1e-6 * (1 + 1e-9));
  EXPECT_GT(std::pow(model.gamma(), T - 1) * r / (1 - model.gamma()), 1e-6);
}
