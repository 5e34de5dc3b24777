#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "limdp/model.hpp"
#include "limdp/partition.hpp"
#include "limdp/solvers.hpp"

namespace limdp {

struct TrajectoryStep {
  int t = 0;
  JointState state;
  JointAction action;
  double reward = 0;
  Partition z;  ///< Z(s(t))
  Partition c;  ///< C(t) = Z(s(0)) ∩ ... ∩ Z(s(t))
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  JointState final_state;  ///< s(T), reached after the last recorded action
  std::uint64_t seed = 0;
  int horizon = 0;
  double discounted_return = 0;
};

/// T = ceil(log(epsilon (1 - gamma) / r~) / log gamma), at least 1.
int default_rollout_horizon(const ScenarioModel& model, double epsilon = kDefaultEpsilon);

/// Samples successors by inverse CDF over enumerate_successors order using
/// u = (mt19937_64() >> 11) * 2^-53.
class SuccessorSampler {
 public:
  explicit SuccessorSampler(std::uint64_t seed);
  std::size_t pick(const std::vector<std::pair<JointState, double>>& successors);

 private:
  std::mt19937_64 rng_;
};

/// A length-T realizable trajectory from s0.
Trajectory rollout(const ScenarioModel& model, const JointPolicy& policy, const JointState& s0, int T,
                   std::uint64_t seed);

/// The same rollout carried out in the Cutoff Multi-Agent MDP: the partition
/// component refines block by block and rewards are restricted to block-internal
/// pairs. States and actions coincide with rollout() for the same seed.
Trajectory cutoff_rollout(const ScenarioModel& model, const JointPolicy& policy, const JointState& s0, int T,
                          std::uint64_t seed);

struct DtlViolation {
  int T = 0;
  int delta = 0;
  double reward = 0;
  double decomposed = 0;
};

/// Checks r(s(T+δ), a(T+δ)) = Σ_{z ∈ Z(s(T))} r_z for every T and δ in 0..c.
std::vector<DtlViolation> check_dependence_time(const ScenarioModel& model, const Trajectory& trajectory,
                                                double tolerance = 1e-12);

enum class StoppingVariant { Amalgam, Cutoff };

/// Amalgam: Z(s(t)) != Z(s(t-1)). Cutoff: Z(s(t)) not finer than Z(s(t-1)).
std::vector<int> detect_stopping_times(const Trajectory& trajectory, StoppingVariant variant);
std::vector<int> detect_stopping_times(const std::vector<Partition>& trace, StoppingVariant variant);

struct JitterEntry {
  int agent = 0;
  int start = 0;        ///< time of the first location of the cycle
  int repetitions = 0;  ///< full (x, y) periods observed
  int location_a = 0;
  int location_b = 0;
};

/// Agents whose location sequence alternates x, y, x, y, ... for at least
/// `window` full periods. One entry per maximal run.
std::vector<JitterEntry> detect_jitter(const Trajectory& trajectory, int window);

/// Per agent, the number of steps that return it to the location it held two steps before.
std::vector<int> count_backtracks(const Trajectory& trajectory);

void write_jsonl(std::ostream& os, const ScenarioModel& model, const Trajectory& trajectory);
void write_ascii(std::ostream& os, const ScenarioModel& model, const Trajectory& trajectory);
void write_svg(std::ostream& os, const ScenarioModel& model, const Trajectory& trajectory);

}  // namespace limdp
