#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "limdp/error.hpp"
#include "limdp/policies.hpp"
#include "limdp/rollout.hpp"
#include "limdp/scenario_json.hpp"
#include "limdp/scenarios.hpp"
#include "limdp/solvers.hpp"
#include "limdp/validate.hpp"

using namespace limdp;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;

struct InputError : Error {
  using Error::Error;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw InputError("cannot open '" + path + "' for writing");
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

PolicyKind policy_from(const std::string& name) {
  auto kind = parse_policy_kind(name);
  if (!kind) throw InputError("unknown policy '" + name + "' (expected optimal, amalgam, cutoff or fsfho)");
  return *kind;
}

struct PolicyArgs {
  std::string policy = "optimal";
  std::optional<int> group_cap;
  std::optional<double> visibility;
  double epsilon = kDefaultEpsilon;

  PolicyOptions options() const {
    PolicyOptions o;
    o.epsilon = epsilon;
    o.group_cap = group_cap;
    o.visibility = visibility;
    return o;
  }
};

void add_policy_flags(CLI::App* cmd, PolicyArgs& args) {
  cmd->add_option("--policy", args.policy, "optimal, amalgam, cutoff or fsfho");
  cmd->add_option("--group-cap", args.group_cap, "largest admissible visibility group");
  cmd->add_option("--visibility", args.visibility, "visibility override V' with R < V' <= V");
  cmd->add_option("--epsilon", args.epsilon, "value iteration tolerance");
}

int cmd_validate(const std::string& path) {
  const auto model = load_scenario(path);
  const auto violations = validate_model(model);
  for (const auto& v : violations) std::cout << to_string(v.kind) << ": " << v.message << "\n";
  if (!violations.empty()) return kExitFailure;
  std::cout << model.name() << ": ok (" << model.num_agents() << " agents, R=" << model.dependence_radius()
            << ", V=" << model.visibility() << ", c=" << dependence_horizon(model) << ")\n";
  return 0;
}

int cmd_solve(const std::string& path, const PolicyArgs& args, const std::string& out_path) {
  const auto model = load_scenario(path);
  const auto kind = policy_from(args.policy);
  Output out(out_path);
  if (kind == PolicyKind::JointOptimal) {
    const auto solution = value_iteration(model, args.epsilon);
    write_csv(out.stream(), solution.values, &solution.policy);
    return 0;
  }
  GroupDecentralizedPolicy policy(model, kind, args.options());
  auto space = JointSpace::all(model);
  PolicyTable table{space, std::vector<std::uint32_t>(space.num_states()), 0};
  std::vector<int> local(space.arity());
  for (std::size_t s = 0; s < space.num_states(); ++s) {
    space.decode_state(s, local);
    table.actions[s] = static_cast<std::uint32_t>(space.action_index(policy.action_local(local)));
  }
  const auto values = evaluate_policy(model, table, args.epsilon);
  write_csv(out.stream(), values, &table);
  return 0;
}

int cmd_rollout(const std::string& path, const PolicyArgs& args, std::optional<int> steps, std::uint64_t seed,
                const std::string& render, const std::string& out_path) {
  const auto model = load_scenario(path);
  const auto kind = policy_from(args.policy);
  GroupDecentralizedPolicy policy(model, kind, args.options());
  const int T = steps ? *steps : default_rollout_horizon(model, args.epsilon);
  if (T < 1) throw InputError("--steps must be at least 1");
  const auto trajectory =
      rollout(model, [&](const JointState& s) { return policy.action(s); }, model.start_state(), T, seed);
  Output out(out_path);
  if (render == "jsonl")
    write_jsonl(out.stream(), model, trajectory);
  else if (render == "ascii")
    write_ascii(out.stream(), model, trajectory);
  else if (render == "svg")
    write_svg(out.stream(), model, trajectory);
  else
    throw InputError("unknown renderer '" + render + "' (expected ascii, svg or jsonl)");
  if (!out_path.empty() && out_path != "-")
    std::cout << std::setprecision(17) << "discounted_return " << trajectory.discounted_return << "\n";
  return 0;
}

int cmd_verify_bounds(const std::string& path, double epsilon, const std::string& out_path) {
  const auto model = load_scenario(path);
  const auto v_star = value_iteration(model, epsilon).values;
  PolicyOptions options;
  options.epsilon = epsilon;
  bool ok = true;
  Output out(out_path);
  const bool csv = !out_path.empty();
  if (csv) out.stream() << "policy,c,r_tilde,bound,max_gap,worst_state,pass\n" << std::fixed << std::setprecision(6);
  for (auto kind : {PolicyKind::Amalgam, PolicyKind::Cutoff, PolicyKind::FirstStepFiniteHorizon}) {
    const auto report = policy_gap_report(model, kind, options, v_star, false);
    ok = ok && report.passed;
    std::cout << std::setprecision(9) << to_string(kind) << ": max_gap=" << report.max_gap << " bound=" << report.bound
              << " at " << report.worst_state << (report.passed ? " PASS" : " FAIL") << "\n";
    if (csv)
      out.stream() << to_string(kind) << "," << report.c << "," << report.r_tilde << "," << report.bound << ","
                   << report.max_gap << "," << report.worst_state << "," << (report.passed ? "true" : "false") << "\n";
  }
  return ok ? 0 : kExitFailure;
}

int cmd_verify_dtl(const std::string& path, int trajectories, std::optional<int> steps, std::uint64_t seed) {
  const auto model = load_scenario(path);
  if (trajectories < 0) throw InputError("--trajectories must be non-negative");
  const PolicyKind kinds[] = {PolicyKind::Amalgam, PolicyKind::Cutoff, PolicyKind::FirstStepFiniteHorizon};
  std::vector<std::unique_ptr<GroupDecentralizedPolicy>> policies;
  for (auto kind : kinds) policies.push_back(std::make_unique<GroupDecentralizedPolicy>(model, kind));
  const int T = steps ? *steps : std::min(default_rollout_horizon(model), 200);
  std::size_t violations = 0;
  for (int i = 0; i < trajectories; ++i) {
    auto& policy = *policies[i % 3];
    const auto trajectory = rollout(
        model, [&](const JointState& s) { return policy.action(s); }, model.start_state(), T, seed + i);
    const auto found = check_dependence_time(model, trajectory);
    for (const auto& v : found)
      std::cout << "violation: trajectory " << i << " T=" << v.T << " delta=" << v.delta << std::setprecision(17)
                << " reward=" << v.reward << " decomposed=" << v.decomposed << "\n";
    violations += found.size();
  }
  std::cout << trajectories << " trajectories of length " << T << ", " << violations << " violations\n";
  return violations == 0 ? 0 : kExitFailure;
}

int cmd_verify_lower_bound(int ell, double gamma, double r_tilde, double epsilon) {
  const auto r = lower_bound_report(ell, gamma, r_tilde, epsilon);
  std::cout << std::setprecision(9) << "l=" << r.ell << " gamma=" << r.gamma << " r~=" << r.r_tilde << " c=" << r.c
            << "\n"
            << "V*(S1,S3)=" << r.v_star_s1 << " V*(S2,S3)=" << r.v_star_s2 << "\n"
            << "p0=1: V(S1,S3)=" << r.v_a0_s1 << " V(S2,S3)=" << r.v_a0_s2 << "\n"
            << "p0=0: V(S1,S3)=" << r.v_a1_s1 << " V(S2,S3)=" << r.v_a1_s2 << "\n"
            << "certified gap " << r.mixed_certified_gap << " (deterministic " << r.certified_gap << "), bound "
            << r.bound << (r.passed ? " PASS" : " FAIL") << "\n";
  return r.passed ? 0 : kExitFailure;
}

int cmd_campaign(const std::string& spec_path, int count, double epsilon, const std::string& out_path) {
  std::ifstream in(spec_path);
  if (!in) throw InputError("cannot read '" + spec_path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto spec = parse_instance_spec(buffer.str());
  if (count < 0) throw InputError("--count must be non-negative");
  const auto report = run_campaign(spec, count, epsilon);
  if (!report.rejected.empty()) {
    std::cerr << "spec rejected: " << report.rejected << "\n";
    return kExitInput;
  }
  Output out(out_path);
  write_campaign_csv(out.stream(), report);
  std::cerr << report.rows.size() << " instances, " << report.failures << " failures\n";
  return report.failures == 0 ? 0 : kExitFailure;
}

int cmd_catalog_list() {
  for (const auto& entry : catalog()) std::cout << entry.name << "\t" << entry.summary << "\n";
  return 0;
}

int cmd_catalog_emit(const std::string& name, const ScenarioParams& params, const std::string& out_path) {
  const auto model = build_scenario(name, params);
  Output out(out_path);
  out.stream() << emit_scenario(model);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally interdependent multi-agent MDP toolkit"};
  app.require_subcommand(1);

  std::string scenario, out_path, render = "jsonl", spec_path, name;
  PolicyArgs policy_args;
  std::optional<int> steps;
  std::uint64_t seed = 0;
  int trajectories = 100, count = 0, ell = 0;
  double gamma = 0.9, r_tilde = 1, epsilon = kDefaultEpsilon;
  ScenarioParams params;

  auto* validate = app.add_subcommand("validate", "check a scenario against the model constraints");
  validate->add_option("scenario", scenario)->required();

  auto* solve = app.add_subcommand("solve", "value table and policy as CSV");
  solve->add_option("scenario", scenario)->required();
  add_policy_flags(solve, policy_args);
  solve->add_option("--out", out_path);

  auto* roll = app.add_subcommand("rollout", "simulate a trajectory from the scenario start");
  roll->add_option("scenario", scenario)->required();
  add_policy_flags(roll, policy_args);
  roll->add_option("--steps", steps);
  roll->add_option("--seed", seed);
  roll->add_option("--render", render, "ascii, svg or jsonl");
  roll->add_option("--out", out_path);

  auto* verify = app.add_subcommand("verify", "mechanized checks");
  verify->require_subcommand(1);
  auto* bounds = verify->add_subcommand("bounds", "policy gaps against the theorem bounds");
  bounds->add_option("scenario", scenario)->required();
  bounds->add_option("--epsilon", epsilon);
  bounds->add_option("--out", out_path);
  auto* dtl = verify->add_subcommand("lemma-dtl", "dependence time lemma on sampled trajectories");
  dtl->add_option("scenario", scenario)->required();
  dtl->add_option("--trajectories", trajectories);
  dtl->add_option("--steps", steps);
  dtl->add_option("--seed", seed);
  auto* lower = verify->add_subcommand("lower-bound", "gap certificate on M(l)");
  lower->add_option("--ell", ell)->required();
  lower->add_option("--gamma", gamma)->required();
  lower->add_option("--rtilde", r_tilde)->required();
  lower->add_option("--epsilon", epsilon);

  auto* campaign = app.add_subcommand("campaign", "random-instance verification campaign");
  campaign->add_option("--spec", spec_path)->required();
  campaign->add_option("--count", count)->required();
  campaign->add_option("--epsilon", epsilon);
  campaign->add_option("--out", out_path);

  auto* cat = app.add_subcommand("catalog", "built-in scenarios");
  cat->require_subcommand(1);
  auto* list = cat->add_subcommand("list");
  auto* emit = cat->add_subcommand("emit");
  emit->add_option("name", name)->required();
  emit->add_option("--out", out_path);
  emit->add_option("--visibility", params.visibility);
  emit->add_option("--ell", params.ell);
  emit->add_option("--gamma", params.gamma);
  emit->add_option("--rtilde", params.r_tilde);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*validate) return cmd_validate(scenario);
    if (*solve) return cmd_solve(scenario, policy_args, out_path);
    if (*roll) return cmd_rollout(scenario, policy_args, steps, seed, render, out_path);
    if (*bounds) return cmd_verify_bounds(scenario, epsilon, out_path);
    if (*dtl) return cmd_verify_dtl(scenario, trajectories, steps, seed);
    if (*lower) return cmd_verify_lower_bound(ell, gamma, r_tilde, epsilon);
    if (*campaign) return cmd_campaign(spec_path, count, epsilon, out_path);
    if (*list) return cmd_catalog_list();
    if (*emit) return cmd_catalog_emit(name, params, out_path);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::ios_base::failure& e) {
    std::cerr << "io error: " << e.what() << "\n";
  }
  return kExitInput;
}
