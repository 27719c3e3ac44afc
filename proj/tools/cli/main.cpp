#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "momentprop/version.hpp"

using namespace momentprop::cli;

int main(int argc, char** argv) {
  CLI::App app{"Exact moment propagation for trigonometric polynomial systems"};
  app.set_version_flag("--version", MOMENTPROP_VERSION);
  app.require_subcommand(1);

  CompileConfig compile;
  auto* c = app.add_subcommand("compile", "Complete a moment basis and write the moment-state system");
  c->add_option("spec", compile.spec, "System spec file")->required()->check(CLI::ExistingFile);
  c->add_option("-o,--output", compile.output, "Compiled system file")->required();
  c->add_option("--equations", compile.equations, "Write the equation listing here instead of stdout");
  c->add_option("--moments", compile.moments, "Seed moments, overriding the spec's `moments` line");
  c->add_flag("--unreduced", compile.unreduced, "Do not factor moments along the dependence graph");

  PropagateConfig prop;
  auto* p = app.add_subcommand("propagate", "Propagate a compiled system over a horizon");
  p->add_option("compiled", prop.compiled, "Compiled system file")->required()->check(CLI::ExistingFile);
  p->add_option("--init", prop.init, "Initial state: CSV file or name=value,...")->required();
  p->add_option("--dist", prop.dist, "Spec file with `dist` lines")->required()->check(CLI::ExistingFile);
  p->add_option("-T,--steps", prop.steps, "Horizon")->required();
  p->add_option("-o,--output", prop.output, "Trajectory CSV")->required();
  p->add_flag("--fast-stationary", prop.fast_stationary,
              "Final state only, by repeated squaring (un-reduced systems, no shifts)");

  McConfig mc;
  auto* m = app.add_subcommand("mc", "Monte Carlo moments of the original system");
  m->add_option("spec", mc.spec, "System spec file")->required()->check(CLI::ExistingFile);
  m->add_option("--init", mc.init, "Initial state: CSV file or name=value,...")->required();
  m->add_option("--compiled", mc.compiled, "Estimate the moments of this compiled basis");
  m->add_option("-T,--steps", mc.steps, "Horizon")->required();
  m->add_option("-N,--samples", mc.samples, "Sample count")->required()->check(CLI::Range(2ULL, 1ULL << 40));
  m->add_option("--seed", mc.seed, "RNG seed")->capture_default_str();
  m->add_option("--threads", mc.threads, "Worker threads (0: all cores)")->capture_default_str();
  m->add_option("-o,--output", mc.output, "Estimate CSV")->required();

  LinearizeConfig lin;
  auto* l = app.add_subcommand("linearize", "Mean/covariance of the system linearized at the initial state");
  l->add_option("spec", lin.spec, "System spec file")->required()->check(CLI::ExistingFile);
  l->add_option("--init", lin.init, "Initial state: CSV file or name=value,...")->required();
  l->add_option("-T,--steps", lin.steps, "Horizon")->required();
  l->add_option("--dt", lin.dt, "Time step scaling the Jacobians")->capture_default_str();
  l->add_option("-o,--output", lin.output, "Mean/covariance CSV")->required();

  CompareConfig cmp;
  auto* k = app.add_subcommand("compare", "z-scores of exact and linearized moments against Monte Carlo");
  k->add_option("exact", cmp.exact, "Output of propagate")->required()->check(CLI::ExistingFile);
  k->add_option("mc", cmp.mc, "Output of mc")->required()->check(CLI::ExistingFile);
  k->add_option("linear", cmp.linear, "Output of linearize")->check(CLI::ExistingFile);
  k->add_option("-o,--output", cmp.output, "Report CSV")->required();
  k->add_option("--plot", cmp.plot, "Per-moment series for plotting");
  k->add_option("--threshold", cmp.threshold, "Flag |z| above this")->capture_default_str();

  PlanConfig plan;
  auto* r = app.add_subcommand("plan", "Chance-constrained RRT with moment-propagated Dubins steering");
  r->add_option("spec", plan.spec, "System spec file")->required()->check(CLI::ExistingFile);
  r->add_option("--env", plan.env, "Environment file")->required()->check(CLI::ExistingFile);
  r->add_option("--eps", plan.eps, "Chance constraint")->required()->check(CLI::Range(0.0, 1.0));
  r->add_option("--seed", plan.seed, "RNG seed")->capture_default_str();
  r->add_option("-o,--output", plan.output, "Path CSV")->required();
  r->add_option("--tree", plan.tree, "Tree edge list CSV");
  r->add_option("--controls", plan.controls, "Open-loop heading controls CSV");
  r->add_option("--iterations", plan.iterations, "RRT iterations")->capture_default_str();
  r->add_option("--speed", plan.speed, "Metres per step")->capture_default_str();
  r->add_option("--turn-radius", plan.turn_radius, "Dubins turn radius")->capture_default_str();
  r->add_option("--max-edge", plan.max_edge, "Longest Dubins extension in metres")->capture_default_str();
  r->add_option("--goal-bias", plan.goal_bias, "Probability of sampling the goal")->capture_default_str();
  r->add_flag("--unreduced", plan.unreduced, "Use the un-reduced completion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  if (*c) return cmd_compile(compile, std::cout, std::cerr);
  if (*p) return cmd_propagate(prop, std::cout, std::cerr);
  if (*m) return cmd_mc(mc, std::cout, std::cerr);
  if (*l) return cmd_linearize(lin, std::cout, std::cerr);
  if (*k) return cmd_compare(cmp, std::cout, std::cerr);
  return cmd_plan(plan, std::cout, std::cerr);
}
