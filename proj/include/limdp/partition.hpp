#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "limdp/model.hpp"

namespace limdp {

/// Disjoint grouping of agent indices 0..n-1 in canonical form: members sorted
/// ascending, groups ordered by least member. Equality is structural.
class Partition {
 public:
  Partition() = default;

  /// Canonicalizes `groups`; throws InvalidModelError unless they partition 0..n-1.
  static Partition from_groups(int n, std::vector<std::vector<int>> groups);
  /// Groups given as bit masks over agent indices.
  static Partition from_masks(int n, std::vector<std::uint32_t> masks);
  static Partition singletons(int n);
  static Partition whole(int n);

  int num_agents() const { return n_; }
  int size() const { return static_cast<int>(masks_.size()); }
  const std::vector<std::uint32_t>& masks() const { return masks_; }
  std::vector<std::vector<int>> groups() const;
  std::vector<int> group(int index) const;
  /// Mask of the group containing agent k.
  std::uint32_t group_of(int k) const;
  bool is_trivial() const { return masks_.size() == 1; }

  /// Serialization as sorted nested arrays, e.g. [[0,1],[2]].
  std::string to_string() const;

  auto operator<=>(const Partition&) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint32_t> masks_;
};

std::vector<int> mask_members(std::uint32_t mask);
std::uint32_t members_mask(std::span<const int> members);

/// Connected components of the threshold graph {(i,j) : dist(i,j) <= threshold}
/// over positions 0..count-1, as masks in canonical order. Union-find.
template <class Dist>
std::vector<std::uint32_t> threshold_components(int count, Dist&& dist, double threshold) {
  int parent[32];
  for (int i = 0; i < count; ++i) parent[i] = i;
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (int i = 0; i < count; ++i)
    for (int j = i + 1; j < count; ++j)
      if (dist(i, j) <= threshold) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::uint32_t by_root[32] = {};
  for (int i = 0; i < count; ++i) by_root[find(i)] |= 1u << i;
  std::vector<std::uint32_t> out;
  for (int i = 0; i < count; ++i)
    if (by_root[i]) out.push_back(by_root[i]);
  return out;
}

/// Z(s): components of the graph linking agents within the visibility radius.
Partition visibility_partition(const ScenarioModel& model, const JointState& s);
Partition visibility_partition(const ScenarioModel& model, const JointState& s, double visibility);
/// Same, from per-agent local state indices.
Partition visibility_partition_local(const ScenarioModel& model, std::span<const int> local, double visibility);

Partition intersect(const Partition& p1, const Partition& p2);
/// True iff every group of p1 lies inside some group of p2.
bool is_finer(const Partition& p1, const Partition& p2);
/// Z(s_next) ∩ C.
Partition cutoff_update(const ScenarioModel& model, const Partition& c_prev, const JointState& s_next);

/// c = floor((V - R) / 2); InvalidModelError unless V > R.
int dependence_horizon(const ScenarioModel& model);
int dependence_horizon(double visibility, double dependence_radius);

}  // namespace limdp
