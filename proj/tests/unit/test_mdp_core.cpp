#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "limdp/error.hpp"
#include "limdp/joint_space.hpp"
#include "limdp/model.hpp"
#include "limdp/scenarios.hpp"
#include "limdp/validate.hpp"
#include "oracles.hpp"

using namespace limdp;
using namespace fixtures;

namespace {

ScenarioModel two_walkers(double R, double V, std::vector<PairwiseRewardRule> rules, std::vector<double> cells = {}) {
  return ScenarioModel("walkers", MetricSpace::grid(6, 1),
                       {line_walker("a", 6, 0, cells), line_walker("b", 6, 5, cells)}, std::move(rules), R, V, 0.9);
}

bool has_kind(const std::vector<Violation>& v, ViolationKind kind) {
  for (const auto& x : v)
    if (x.kind == kind) return true;
  return false;
}

}  // namespace

TEST(Distance, IdenticalLocationsAreZero) {
  const auto model = two_walkers(1, 2, {});
  EXPECT_EQ(distance(model, {3, 0}, {3, 0}), 0);
}

TEST(Distance, ManhattanAndChebyshevGrids) {
  const auto manhattan = MetricSpace::grid(4, 4);
  const auto chebyshev = MetricSpace::grid(4, 4, MetricKind::Chebyshev);
  EXPECT_EQ(manhattan.distance(*manhattan.cell(0, 0), *manhattan.cell(2, 3)), 5);
  EXPECT_EQ(chebyshev.distance(*chebyshev.cell(0, 0), *chebyshev.cell(2, 3)), 3);
}

TEST(Distance, GraphShortestPath) {
  const auto g = MetricSpace::graph({"a", "b", "c", "d"}, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
  EXPECT_EQ(g.distance(0, 2), 2);
  EXPECT_EQ(g.distance(0, 3), 1);
  EXPECT_TRUE(g.axiom_violations().empty());
}

TEST(Distance, TableAxiomsChecked) {
  const auto t = MetricSpace::table({"a", "b", "c"}, {{0, 1, 5}, {1, 0, 1}, {5, 1, 0}});
  const auto v = t.axiom_violations();
  ASSERT_FALSE(v.empty());
  EXPECT_NE(v.front().find("triangle"), std::string::npos);
  const auto asym = MetricSpace::table({"a", "b"}, {{0, 1}, {2, 0}});
  EXPECT_FALSE(asym.axiom_violations().empty());
}

TEST(Distance, RejectsUnknownLocation) {
  const auto model = two_walkers(1, 2, {});
  EXPECT_THROW(model.to_local(JointState{{{9, 0}, {0, 0}}}), InvalidStateError);
}

TEST(JointReward, PairTermsVanishBeyondR) {
  auto a = line_walker("a", 6, 0);
  auto b = line_walker("b", 6, 5);
  for (auto& r : a.rewards) r = 3;
  for (auto& r : b.rewards) r = -2;
  ScenarioModel model("m", MetricSpace::grid(6, 1), {a, b}, {band(0, 1, -100)}, 1, 2, 0.9);
  EXPECT_EQ(joint_reward(model, JointState{{{0, 0}, {5, 0}}}, {1, 1}), 1);
  EXPECT_EQ(joint_reward(model, JointState{{{2, 0}, {3, 0}}}, {1, 1}), 1 - 200);
}

TEST(JointReward, BullseyeCloseActivePairCostsBothDirections) {
  const auto model = bullseye();
  const JointState s{{{20, 0}, {30, 0}}};
  EXPECT_EQ(joint_reward(model, s, {2, 1}), -1000);
}

TEST(JointReward, SingleAgentIsLocalReward) {
  ScenarioModel model("solo", MetricSpace::grid(3, 1), {line_walker("a", 3, 0, {1, 2, 7})}, {}, 0, 1, 0.9);
  EXPECT_EQ(joint_reward(model, JointState{{{2, 0}}}, {0}), 7);
}

TEST(JointReward, MatchesRuleOracleOnRandomModels) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto model = random_instance(small_spec(3, seed, true, 2, 3), 7);
    for (const auto& s : oracle::all_states(model))
      for (const auto& a : oracle::all_actions(model))
        ASSERT_EQ(joint_reward(model, s, a), oracle::reward(model, s, a)) << format_joint_state(model, s);
  }
}

TEST(Successors, DeterministicGivesOnePointMass) {
  const auto model = two_walkers(1, 2, {});
  const auto succ = enumerate_successors(model, model.start_state(), {2, 0});
  ASSERT_EQ(succ.size(), 1u);
  EXPECT_EQ(succ[0].second, 1.0);
  EXPECT_EQ(succ[0].first, (JointState{{{1, 0}, {4, 0}}}));
}

TEST(Successors, ProductOfCoinFlips) {
  auto coin = [](const std::string& name, int start) {
    return make_agent(
        name, line_states(3), {"go"},
        [](const AgentState& s, int) {
          return std::vector<std::pair<AgentState, double>>{{{s.location, 0}, 0.5},
                                                             {{std::min(s.location + 1, 2), 0}, 0.5}};
        },
        [](const AgentState&, int) { return 0.0; }, {start, 0});
  };
  ScenarioModel model("coins", MetricSpace::grid(3, 1), {coin("a", 0), coin("b", 1)}, {}, 0, 1, 0.9);
  const auto succ = enumerate_successors(model, model.start_state(), {0, 0});
  ASSERT_EQ(succ.size(), 4u);
  for (const auto& [s, p] : succ) EXPECT_EQ(p, 0.25);
  EXPECT_TRUE(validate_model(model).empty());
}

TEST(Successors, MatchConvolutionOracleOnRandomModels) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto model = random_instance(small_spec(3, seed, true), 11);
    for (const auto& s : oracle::all_states(model))
      for (const auto& a : oracle::all_actions(model)) {
        const auto expected = oracle::successors(model, s, a);
        const auto got = enumerate_successors(model, s, a);
        ASSERT_EQ(got.size(), expected.size());
        double total = 0;
        for (const auto& [t, p] : got) {
          ASSERT_NEAR(p, expected.at(t), 1e-15);
          total += p;
          for (int k = 0; k < model.num_agents(); ++k) ASSERT_LE(distance(model, s.agents[k], t.agents[k]), 1);
        }
        ASSERT_NEAR(total, 1.0, 1e-12);
        for (std::size_t i = 1; i < got.size(); ++i)
          ASSERT_LT(model.to_local(got[i - 1].first), model.to_local(got[i].first));
      }
  }
}

TEST(Validate, CatalogBullseyeIsClean) { EXPECT_TRUE(validate_model(bullseye()).empty()); }

TEST(Validate, VisibilityMustExceedRadius) {
  const auto model = two_walkers(2, 2, {band(0, 2, -1)});
  const auto v = validate_model(model);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].kind, ViolationKind::VisibilityNotAboveRadius);
}

TEST(Validate, JumpOfTwoViolatesMotionBound) {
  auto jumper = make_agent(
      "j", line_states(4), {"jump"},
      [](const AgentState& s, int) { return std::vector<std::pair<AgentState, double>>{{{(s.location + 2) % 4, 0}, 1}}; },
      [](const AgentState&, int) { return 0.0; }, {0, 0});
  ScenarioModel model("jump", MetricSpace::grid(4, 1), {jumper}, {}, 0, 1, 0.9);
  const auto v = validate_model(model);
  ASSERT_FALSE(v.empty());
  for (const auto& x : v) EXPECT_EQ(x.kind, ViolationKind::MotionBound);
}

TEST(Validate, NormalizationAndDiscount) {
  auto leaky = make_agent(
      "l", line_states(2), {"go"},
      [](const AgentState& s, int) { return std::vector<std::pair<AgentState, double>>{{s, 0.75}}; },
      [](const AgentState&, int) { return 0.0; }, {0, 0});
  ScenarioModel model("leaky", MetricSpace::grid(2, 1), {leaky}, {}, 0, 1, 1.0);
  const auto v = validate_model(model);
  EXPECT_TRUE(has_kind(v, ViolationKind::Normalization));
  EXPECT_TRUE(has_kind(v, ViolationKind::Discount));
}

TEST(Validate, RuleSupportBeyondRadiusIsReported) {
  const auto model = two_walkers(1, 3, {band(0, 2, -5)});
  EXPECT_TRUE(has_kind(validate_model(model), ViolationKind::RuleBeyondRadius));
  // Support is still clipped to R when evaluating.
  EXPECT_EQ(joint_reward(model, JointState{{{0, 0}, {2, 0}}}, {1, 1}), 0);
}

TEST(Validate, ExplicitTableMetricAxioms) {
  auto space = MetricSpace::table({"a", "b", "c"}, {{0, 1, 3}, {1, 0, 1}, {3, 1, 0}});
  auto walker = make_agent(
      "w", {{0, 0}, {1, 0}, {2, 0}}, {"stay"},
      [](const AgentState& s, int) { return std::vector<std::pair<AgentState, double>>{{s, 1}}; },
      [](const AgentState&, int) { return 0.0; }, {0, 0});
  ScenarioModel model("table", std::move(space), {walker}, {}, 0, 1, 0.9);
  EXPECT_TRUE(has_kind(validate_model(model), ViolationKind::MetricAxiom));
}

TEST(SupReward, SingleAgentConstant) {
  auto a = line_walker("a", 3, 0, {5, 5, 5});
  ScenarioModel model("c", MetricSpace::grid(3, 1), {a}, {}, 0, 1, 0.9);
  EXPECT_EQ(sup_reward(model), 5);
}

TEST(SupReward, LowerBoundOverlapPenaltyIsRTilde) {
  for (double r : {1.0, 2.5}) EXPECT_DOUBLE_EQ(sup_reward(lower_bound(2, 0.9, r)), r);
}

TEST(SupReward, MatchesExhaustiveScanAndIsAttained) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto model = random_instance(small_spec(3, seed), 3);
    const double expected = oracle::sup_reward(model);
    EXPECT_EQ(sup_reward(model), expected);
  }
}

TEST(SupReward, BudgetErrorWhenSpaceIsTooLarge) {
  ScenarioModel model("big", MetricSpace::grid(50, 1),
                      {line_walker("a", 50, 0), line_walker("b", 50, 1), line_walker("c", 50, 2),
                       line_walker("d", 50, 3)},
                      {band(0, 1, -1)}, 1, 2, 0.9, 1000);
  EXPECT_THROW(sup_reward(model), EnumerationBudgetError);
  EXPECT_THROW(JointSpace::all(model), EnumerationBudgetError);
}

TEST(Model, PairContributionZeroBeyondRadiusForEveryPair) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = random_instance(small_spec(3, seed, true, 1, 3), 5);
    for (const auto& s : oracle::all_states(model))
      for (const auto& a : oracle::all_actions(model))
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k)
            if (j != k && distance(model, s.agents[j], s.agents[k]) > model.dependence_radius()) {
              ASSERT_EQ(model.pair_reward(j, k, model.local_index(j, s.agents[j]), a[j],
                                          model.local_index(k, s.agents[k]), a[k]),
                        0.0);
            }
  }
}

TEST(Model, SubmodelKeepsMembersAndTheirRules) {
  const auto model = random_instance(small_spec(3, 4, true, 1, 2), 2);
  const std::vector<int> members{0, 2};
  const auto sub = submodel(model, members);
  ASSERT_EQ(sub.num_agents(), 2);
  for (const auto& s : oracle::all_states(model))
    for (const auto& a : oracle::all_actions(model)) {
      JointState ss{{s.agents[0], s.agents[2]}};
      ASSERT_NEAR(joint_reward(sub, ss, {a[0], a[2]}), oracle::group_reward(model, members, s, a), 1e-12);
    }
}

TEST(Model, StateFormatting) {
  const auto model = bullseye();
  EXPECT_EQ(format_joint_state(model, model.start_state()), "10:0@active|59:0@active");
  const auto aisle = aisle_walk();
  EXPECT_EQ(format_joint_state(aisle, aisle.start_state()), "a0|b0");
  EXPECT_EQ(format_joint_action(aisle, {0, 1}), "forward|switch");
}
