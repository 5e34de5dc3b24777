#pragma once

#include <string>
#include <vector>

#include "limdp/model.hpp"

namespace limdp {

enum class ViolationKind {
  VisibilityNotAboveRadius,
  MotionBound,
  RuleBeyondRadius,
  Normalization,
  MetricAxiom,
  Discount,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

/// Every violation of the model constraints; empty iff the model is well formed.
std::vector<Violation> validate_model(const ScenarioModel& model);

}  // namespace limdp
