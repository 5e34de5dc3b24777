#include "limdp/validate.hpp"

#include <cmath>
#include <sstream>

namespace limdp {

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::VisibilityNotAboveRadius:
      return "visibility";
    case ViolationKind::MotionBound:
      return "motion";
    case ViolationKind::RuleBeyondRadius:
      return "rule-support";
    case ViolationKind::Normalization:
      return "normalization";
    case ViolationKind::MetricAxiom:
      return "metric";
    case ViolationKind::Discount:
      return "discount";
  }
  return "unknown";
}

std::vector<Violation> validate_model(const ScenarioModel& model) {
  std::vector<Violation> out;
  auto add = [&](ViolationKind kind, std::string message) { out.push_back({kind, std::move(message)}); };

  if (!(model.visibility() > model.dependence_radius())) {
    std::ostringstream os;
    os << "visibility V = " << model.visibility() << " must be strictly greater than dependence radius R = "
       << model.dependence_radius();
    add(ViolationKind::VisibilityNotAboveRadius, os.str());
  }
  if (!(model.gamma() > 0 && model.gamma() < 1)) {
    std::ostringstream os;
    os << "gamma = " << model.gamma() << " must lie in (0, 1)";
    add(ViolationKind::Discount, os.str());
  }

  for (int k = 0; k < model.num_agents(); ++k) {
    const auto& spec = model.agent(k);
    for (int ls = 0; ls < spec.num_states(); ++ls) {
      for (int a = 0; a < spec.num_actions(); ++a) {
        const auto& outcomes = model.local_successors(k, ls, a);
        double mass = 0;
        for (const auto& o : outcomes) {
          mass += o.probability;
          const double d = model.local_distance(k, ls, k, o.state);
          if (d > 1) {
            std::ostringstream os;
            os << "agent " << k << " moves distance " << d << " from "
               << format_agent_state(model, k, spec.states[ls]) << " to "
               << format_agent_state(model, k, spec.states[o.state]) << " under action " << spec.actions[a]
               << "; agents may travel at most distance 1 per step";
            add(ViolationKind::MotionBound, os.str());
          }
        }
        if (std::abs(mass - 1.0) > 1e-12) {
          std::ostringstream os;
          os.precision(17);
          os << "agent " << k << " transition from " << format_agent_state(model, k, spec.states[ls])
             << " under action " << spec.actions[a] << " has total probability " << mass;
          add(ViolationKind::Normalization, os.str());
        }
      }
    }
  }

  for (std::size_t i = 0; i < model.rules().size(); ++i) {
    const auto& rule = model.rules()[i];
    if (rule.value != 0 && rule.distance_max > model.dependence_radius()) {
      std::ostringstream os;
      os << "pairwise rule " << i << " is declared up to distance " << rule.distance_max
         << " beyond R = " << model.dependence_radius() << "; it is clipped to R";
      add(ViolationKind::RuleBeyondRadius, os.str());
    }
  }

  if (model.space().metric() == MetricKind::Table)
    for (auto& message : model.space().axiom_violations()) add(ViolationKind::MetricAxiom, std::move(message));

  return out;
}

}  // namespace limdp
