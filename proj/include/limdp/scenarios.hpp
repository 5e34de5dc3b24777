#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "limdp/model.hpp"
#include "limdp/policies.hpp"

namespace limdp {

struct CatalogEntry {
  std::string name;
  std::string summary;
};

const std::vector<CatalogEntry>& catalog();

/// Optional overrides; each builder ignores parameters it does not use.
struct ScenarioParams {
  std::optional<double> visibility;
  int ell = 1;
  double gamma = 0.9;
  double r_tilde = 1;
};

/// Throws InvalidModelError for unknown names or invalid parameters.
ScenarioModel build_scenario(const std::string& name, const ScenarioParams& params = {});

ScenarioModel bullseye(double visibility = 45);
ScenarioModel aisle_walk();
ScenarioModel highway();
ScenarioModel lane_merge();
ScenarioModel bullseye_many();
ScenarioModel penalty_jitter();
/// M(ℓ): two deterministic chains meeting in an S5/S6 oscillation, overlap
/// penalty -r~ (split as -r~/2 on each ordered pair), V = 2ℓ + 1, R = 0.
ScenarioModel lower_bound(int ell, double gamma, double r_tilde);

/// Joint state with the chain agent at S1 (or S2) and the choosing agent at S3.
JointState lower_bound_start(const ScenarioModel& model, bool from_s2);

struct LowerBoundReport {
  int ell = 0;
  double gamma = 0;
  double r_tilde = 0;
  int c = 0;
  double bound = 0;
  double v_star_s1 = 0;  ///< V*((S1, S3))
  double v_star_s2 = 0;  ///< V*((S2, S3))
  double v_a0_s1 = 0, v_a0_s2 = 0;  ///< p0 = 1
  double v_a1_s1 = 0, v_a1_s2 = 0;  ///< p0 = 0
  /// min over the two deterministic S3 choices of the larger gap over both starts.
  double certified_gap = 0;
  /// Same minimum taken over every mixture p0 in [0, 1].
  double mixed_certified_gap = 0;
  double p0_formula = 0;  ///< gamma^{ℓ+1} / (1 - gamma) r~
  bool passed = false;
};

LowerBoundReport lower_bound_report(int ell, double gamma, double r_tilde, double epsilon = kDefaultEpsilon);

enum class RandomMetric { Grid, Graph, Table };

struct RandomInstanceSpec {
  int n_agents = 2;
  int n_locations = 6;
  RandomMetric metric = RandomMetric::Graph;
  int reward_bound = 5;
  bool stochastic = true;
  double R = 1;
  double V = 2;
  double gamma = 0.9;
  std::uint64_t seed = 1;
};

/// Reads {n_agents, n_locations, metric, reward_bound, stochastic, R, V, gamma, seed}.
RandomInstanceSpec parse_instance_spec(const std::string& json_text);

/// A random model honoring the spec; InvalidModelError when V <= R or sizes are out of range.
ScenarioModel random_instance(const RandomInstanceSpec& spec, std::uint64_t instance_seed);

struct CampaignRow {
  int index = 0;
  std::uint64_t seed = 0;
  int c = 0;
  std::size_t joint_states = 0;
  std::size_t validation_violations = 0;
  std::size_t dtl_violations = 0;
  double cutoff_decomposition_error = 0;
  double q0_error = 0;
  GapReport amalgam, cutoff, fsfho;
  bool passed = false;
};

struct CampaignReport {
  RandomInstanceSpec spec;
  std::vector<CampaignRow> rows;
  std::string rejected;  ///< reason when the spec itself is invalid
  int failures = 0;
  double worst_amalgam_margin = 0, worst_cutoff_margin = 0, worst_fsfho_margin = 0;
};

CampaignReport run_campaign(const RandomInstanceSpec& spec, int count, double epsilon = kDefaultEpsilon,
                            int trajectories_per_instance = 5);
void write_campaign_csv(std::ostream& os, const CampaignReport& report);

/// V over every (s, C) reachable from some (s, Z(s)) in the Cutoff Multi-Agent MDP,
/// solved directly on the augmented state space.
struct AugmentedCutoffValues {
  std::vector<std::vector<int>> states;           ///< local indices
  std::vector<std::vector<std::uint32_t>> blocks;  ///< partition masks
  std::vector<double> values;
};
AugmentedCutoffValues solve_augmented_cutoff(const ScenarioModel& model, double epsilon = kDefaultEpsilon);

}  // namespace limdp
