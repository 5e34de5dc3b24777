#pragma once

#include <filesystem>
#include <string>

#include "limdp/model.hpp"

namespace limdp {

/// Parses a scenario document. Unknown keys, dangling references, non-integer
/// distances and malformed values raise ParseError; structural model defects
/// raise InvalidModelError.
ScenarioModel parse_scenario(const std::string& text, std::size_t state_budget = kDefaultStateBudget);
ScenarioModel load_scenario(const std::filesystem::path& path, std::size_t state_budget = kDefaultStateBudget);

/// Canonical JSON rendering; parse_scenario(emit_scenario(m)) reproduces m.
std::string emit_scenario(const ScenarioModel& model);

/// Decimal rendering of gamma used in scenario files.
std::string format_gamma(double gamma);

}  // namespace limdp
