#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "limdp/model.hpp"

namespace limdp {

/// Mixed-radix indexing of the product state and action spaces of an agent
/// subset. The first member is the most significant digit, so index order is
/// lexicographic in local state (resp. action) indices.
class JointSpace {
 public:
  JointSpace() = default;
  /// Throws EnumerationBudgetError when the product exceeds the model budget.
  JointSpace(const ScenarioModel& model, std::vector<int> members);
  static JointSpace all(const ScenarioModel& model);

  const ScenarioModel& model() const { return *model_; }
  const std::vector<int>& members() const { return members_; }
  std::uint32_t mask() const { return mask_; }
  int arity() const { return static_cast<int>(members_.size()); }

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }

  std::size_t state_index(std::span<const int> local) const;
  void decode_state(std::size_t index, std::span<int> local) const;
  std::vector<int> decode_state(std::size_t index) const;

  std::size_t action_index(std::span<const int> actions) const;
  void decode_action(std::size_t index, std::span<int> actions) const;
  std::vector<int> decode_action(std::size_t index) const;

  /// Index of the sub-state of a full-model joint state (local indices for every agent).
  std::size_t project(std::span<const int> full_local) const;

  /// Reward r_g internal to the members.
  double reward(std::span<const int> local, std::span<const int> actions) const;

  /// Calls f(successor_index, probability) for every successor, in increasing index order.
  template <class F>
  void for_each_successor(std::span<const int> local, std::span<const int> actions, F&& f) const {
    successors_rec(0, 0, 1.0, local, actions, f);
  }

  JointState joint_state(std::size_t index) const;  // only for the full agent set

 private:
  template <class F>
  void successors_rec(int pos, std::size_t base, double p, std::span<const int> local, std::span<const int> actions,
                      F& f) const {
    if (pos == arity()) {
      f(base, p);
      return;
    }
    for (const auto& o : model_->local_successors(members_[pos], local[pos], actions[pos]))
      successors_rec(pos + 1, base + static_cast<std::size_t>(o.state) * state_strides_[pos], p * o.probability,
                     local, actions, f);
  }

  const ScenarioModel* model_ = nullptr;
  std::vector<int> members_;
  std::uint32_t mask_ = 0;
  std::vector<int> state_radix_, action_radix_;
  std::vector<std::size_t> state_strides_, action_strides_;
  std::size_t num_states_ = 0, num_actions_ = 0;
};

}  // namespace limdp
