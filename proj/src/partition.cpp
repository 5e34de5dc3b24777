#include "limdp/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "limdp/error.hpp"

namespace limdp {

std::vector<int> mask_members(std::uint32_t mask) {
  std::vector<int> out;
  out.reserve(std::popcount(mask));
  while (mask) {
    out.push_back(std::countr_zero(mask));
    mask &= mask - 1;
  }
  return out;
}

std::uint32_t members_mask(std::span<const int> members) {
  std::uint32_t mask = 0;
  for (int k : members) mask |= 1u << k;
  return mask;
}

Partition Partition::from_masks(int n, std::vector<std::uint32_t> masks) {
  if (n < 0 || n > kMaxAgents) throw InvalidModelError("partition agent count out of range");
  const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;
  std::uint32_t seen = 0;
  for (auto m : masks) {
    if (m == 0) throw InvalidModelError("partition contains an empty group");
    if (m & ~full) throw InvalidModelError("partition references an agent outside 0..n-1");
    if (m & seen) throw InvalidModelError("partition groups overlap");
    seen |= m;
  }
  if (seen != full) throw InvalidModelError("partition does not cover every agent");
  std::sort(masks.begin(), masks.end(),
            [](std::uint32_t a, std::uint32_t b) { return std::countr_zero(a) < std::countr_zero(b); });
  Partition p;
  p.n_ = n;
  p.masks_ = std::move(masks);
  return p;
}

Partition Partition::from_groups(int n, std::vector<std::vector<int>> groups) {
  std::vector<std::uint32_t> masks;
  for (const auto& g : groups) {
    std::uint32_t m = 0;
    for (int k : g) {
      if (k < 0 || k >= n) throw InvalidModelError("partition references an agent outside 0..n-1");
      if (m & (1u << k)) throw InvalidModelError("partition group repeats an agent");
      m |= 1u << k;
    }
    masks.push_back(m);
  }
  return from_masks(n, std::move(masks));
}

Partition Partition::singletons(int n) {
  std::vector<std::uint32_t> masks;
  for (int k = 0; k < n; ++k) masks.push_back(1u << k);
  return from_masks(n, std::move(masks));
}

Partition Partition::whole(int n) {
  if (n == 0) return from_masks(0, {});
  return from_masks(n, {n == 32 ? ~0u : (1u << n) - 1});
}

std::vector<std::vector<int>> Partition::groups() const {
  std::vector<std::vector<int>> out;
  for (auto m : masks_) out.push_back(mask_members(m));
  return out;
}

std::vector<int> Partition::group(int index) const { return mask_members(masks_.at(index)); }

std::uint32_t Partition::group_of(int k) const {
  for (auto m : masks_)
    if (m & (1u << k)) return m;
  throw InvalidStateError("agent index outside partition");
}

std::string Partition::to_string() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t g = 0; g < masks_.size(); ++g) {
    os << (g ? ",[" : "[");
    const auto members = mask_members(masks_[g]);
    for (std::size_t i = 0; i < members.size(); ++i) os << (i ? "," : "") << members[i];
    os << "]";
  }
  os << "]";
  return os.str();
}

Partition visibility_partition(const ScenarioModel& model, const JointState& s) {
  return visibility_partition(model, s, model.visibility());
}

Partition visibility_partition(const ScenarioModel& model, const JointState& s, double visibility) {
  const auto local = model.to_local(s);
  return visibility_partition_local(model, local, visibility);
}

Partition visibility_partition_local(const ScenarioModel& model, std::span<const int> local, double visibility) {
  const int n = static_cast<int>(local.size());
  auto masks = threshold_components(
      n, [&](int i, int j) { return model.local_distance(i, local[i], j, local[j]); }, visibility);
  return Partition::from_masks(n, std::move(masks));
}

namespace {

void check_same(const Partition& p1, const Partition& p2) {
  if (p1.num_agents() != p2.num_agents()) throw InvalidModelError("partitions are over different agent sets");
}

}  // namespace

Partition intersect(const Partition& p1, const Partition& p2) {
  check_same(p1, p2);
  std::vector<std::uint32_t> out;
  for (auto a : p1.masks())
    for (auto b : p2.masks())
      if (a & b) out.push_back(a & b);
  return Partition::from_masks(p1.num_agents(), std::move(out));
}

bool is_finer(const Partition& p1, const Partition& p2) {
  check_same(p1, p2);
  for (auto a : p1.masks()) {
    bool inside = false;
    for (auto b : p2.masks())
      if ((a & ~b) == 0) inside = true;
    if (!inside) return false;
  }
  return true;
}

Partition cutoff_update(const ScenarioModel& model, const Partition& c_prev, const JointState& s_next) {
  return intersect(visibility_partition(model, s_next), c_prev);
}

int dependence_horizon(double visibility, double dependence_radius) {
  if (!(visibility > dependence_radius))
    throw InvalidModelError("dependence horizon requires V > R");
  return static_cast<int>(std::floor((visibility - dependence_radius) / 2));
}

int dependence_horizon(const ScenarioModel& model) {
  return dependence_horizon(model.visibility(), model.dependence_radius());
}

}  // namespace limdp
