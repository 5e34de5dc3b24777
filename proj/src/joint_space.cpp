#include "limdp/joint_space.hpp"

#include <limits>

#include "limdp/error.hpp"
#include "limdp/partition.hpp"

namespace limdp {

JointSpace::JointSpace(const ScenarioModel& model, std::vector<int> members)
    : model_(&model), members_(std::move(members)) {
  for (int k : members_) {
    if (k < 0 || k >= model.num_agents()) throw InvalidStateError("agent subset references an unknown agent");
    if (mask_ & (1u << k)) throw InvalidStateError("agent subset repeats an agent");
    mask_ |= 1u << k;
  }
  num_states_ = model.joint_size(members_);
  if (num_states_ > model.state_budget())
    throw EnumerationBudgetError("joint space over " + std::to_string(members_.size()) + " agents exceeds the budget of " +
                                 std::to_string(model.state_budget()) + " states");
  const int m = arity();
  state_radix_.resize(m);
  action_radix_.resize(m);
  state_strides_.resize(m);
  action_strides_.resize(m);
  num_actions_ = 1;
  std::size_t stride = 1;
  for (int i = m - 1; i >= 0; --i) {
    state_radix_[i] = model.agent(members_[i]).num_states();
    action_radix_[i] = model.agent(members_[i]).num_actions();
    state_strides_[i] = stride;
    stride *= state_radix_[i];
    action_strides_[i] = num_actions_;
    if (num_actions_ > std::numeric_limits<std::size_t>::max() / action_radix_[i])
      throw EnumerationBudgetError("joint action space is too large");
    num_actions_ *= action_radix_[i];
  }
}

JointSpace JointSpace::all(const ScenarioModel& model) {
  std::vector<int> members(model.num_agents());
  for (int k = 0; k < model.num_agents(); ++k) members[k] = k;
  return JointSpace(model, std::move(members));
}

std::size_t JointSpace::state_index(std::span<const int> local) const {
  std::size_t index = 0;
  for (int i = 0; i < arity(); ++i) index += static_cast<std::size_t>(local[i]) * state_strides_[i];
  return index;
}

void JointSpace::decode_state(std::size_t index, std::span<int> local) const {
  for (int i = 0; i < arity(); ++i) {
    local[i] = static_cast<int>(index / state_strides_[i]);
    index %= state_strides_[i];
  }
}

std::vector<int> JointSpace::decode_state(std::size_t index) const {
  std::vector<int> local(arity());
  decode_state(index, local);
  return local;
}

std::size_t JointSpace::action_index(std::span<const int> actions) const {
  std::size_t index = 0;
  for (int i = 0; i < arity(); ++i) index += static_cast<std::size_t>(actions[i]) * action_strides_[i];
  return index;
}

void JointSpace::decode_action(std::size_t index, std::span<int> actions) const {
  for (int i = 0; i < arity(); ++i) {
    actions[i] = static_cast<int>(index / action_strides_[i]);
    index %= action_strides_[i];
  }
}

std::vector<int> JointSpace::decode_action(std::size_t index) const {
  std::vector<int> actions(arity());
  decode_action(index, actions);
  return actions;
}

std::size_t JointSpace::project(std::span<const int> full_local) const {
  std::size_t index = 0;
  for (int i = 0; i < arity(); ++i) index += static_cast<std::size_t>(full_local[members_[i]]) * state_strides_[i];
  return index;
}

double JointSpace::reward(std::span<const int> local, std::span<const int> actions) const {
  double r = 0;
  const int m = arity();
  for (int i = 0; i < m; ++i) r += model_->local_reward(members_[i], local[i], actions[i]);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const int a = members_[i], b = members_[j];
      r += a < b ? model_->pair_sum(a, b, local[i], actions[i], local[j], actions[j])
                 : model_->pair_sum(b, a, local[j], actions[j], local[i], actions[i]);
    }
  return r;
}

JointState JointSpace::joint_state(std::size_t index) const {
  if (arity() != model_->num_agents()) throw InvalidStateError("joint_state requires the full agent set");
  return model_->from_local(decode_state(index));
}

}  // namespace limdp
