#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>
#include <sstream>

#include "momentprop/compiler.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/oracle.hpp"
#include "momentprop/planner.hpp"
#include "momentprop/propagator.hpp"
#include "momentprop/serialize.hpp"
#include "momentprop/sysspec.hpp"
#include "momentprop/version.hpp"

namespace momentprop::cli {
namespace {

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const SpecError& e) {
    err << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const CompileError& e) {
    err << "compile error: " << e.what() << '\n';
    return kInput;
  } catch (const UnsupportedError& e) {
    err << "unsupported: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

std::string join(const std::vector<std::string>& v, const char* sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> metadata(const std::string& command, std::vector<std::string> config) {
  std::vector<std::string> out{" momentprop " MOMENTPROP_VERSION, " command " + command};
  for (auto& c : config) out.push_back(" " + std::move(c));
  return out;
}

PolynomialSystem encoded_with_targets(const SystemSpec& spec, const std::vector<std::string>& override_moments) {
  PolynomialSystem poly = trig_encode(spec);
  if (!override_moments.empty()) {
    poly.targets.clear();
    for (const auto& m : override_moments) poly.targets.push_back(parse_monomial(m, poly.vars));
  }
  if (poly.targets.empty()) throw SpecError("no target moments: add a `moments` line or pass --moments");
  return poly;
}

MomentStateSystem compile_spec(const SystemSpec& spec, bool reduced, const std::vector<std::string>& moments = {}) {
  const PolynomialSystem poly = encoded_with_targets(spec, moments);
  return treering(poly, poly.targets, reduced);
}

// Encoded initial point for a compiled system: angles may be given by name.
std::vector<double> encoded_init(const MomentStateSystem& sys, const std::vector<std::pair<std::string, double>>& init) {
  std::vector<std::optional<double>> x(sys.vars.size());
  for (const auto& [name, value] : init) {
    const auto it = std::find(sys.vars.begin(), sys.vars.end(), name);
    if (it != sys.vars.end()) {
      x[static_cast<std::size_t>(it - sys.vars.begin())] = value;
      continue;
    }
    const auto pair = std::find_if(sys.angle_pairs.begin(), sys.angle_pairs.end(),
                                   [&](const AnglePair& p) { return p.angle == name; });
    if (pair == sys.angle_pairs.end()) throw SpecError("unknown variable '" + name + "' in initial state");
    x[pair->cos_index] = std::cos(value);
    x[pair->sin_index] = std::sin(value);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) throw SpecError("initial state does not set '" + sys.vars[i] + "'");
    out.push_back(*x[i]);
  }
  return out;
}

std::vector<double> original_init(const SystemSpec& spec, const std::vector<std::pair<std::string, double>>& init) {
  std::vector<std::optional<double>> x(spec.state_vars.size());
  for (const auto& [name, value] : init) x[spec.state_index(name)] = value;
  std::vector<double> out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) throw SpecError("initial state does not set '" + spec.state_vars[i] + "'");
    out.push_back(*x[i]);
  }
  return out;
}

void require_distributions(const SystemSpec& spec) {
  for (std::size_t i = 0; i < spec.disturbance_vars.size(); ++i) {
    if (!spec.distributions[i]) throw SpecError("no `dist` line for disturbance '" + spec.disturbance_vars[i] + "'");
  }
}

std::string describe_init(const std::vector<std::pair<std::string, double>>& init) {
  std::string s = "init";
  for (const auto& [n, v] : init) s += " " + n + "=" + format_double(v);
  return s;
}

}  // namespace

std::vector<std::pair<std::string, double>> read_assignments(const std::string& arg) {
  std::vector<std::pair<std::string, double>> out;
  if (arg.find('=') != std::string::npos) {
    std::istringstream in(arg);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw SpecError("expected name=value, got '" + item + "'");
      out.emplace_back(item.substr(0, eq), parse_double(item.substr(eq + 1)));
    }
    return out;
  }
  const CsvDocument doc = read_csv(arg);
  if (doc.rows.size() != 1) throw SpecError("initial-state CSV must have exactly one data row");
  for (std::size_t i = 0; i < doc.header.size(); ++i) out.emplace_back(doc.header[i], parse_double(doc.rows[0].at(i)));
  return out;
}

int cmd_compile(const CompileConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemSpec spec = load_spec_file(cfg.spec);
    for (const auto& d : validate_independence(spec)) {
      err << (d.severity == Diagnostic::Severity::Error ? "error: " : "warning: ") << d.message << '\n';
      if (d.severity == Diagnostic::Severity::Error) return static_cast<int>(kInput);
    }
    const auto start = std::chrono::steady_clock::now();
    const MomentStateSystem sys = compile_spec(spec, !cfg.unreduced, cfg.moments);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    save_system(sys, cfg.output);

    std::ostringstream listing;
    listing << "# " << sys.basis.size() << " moments, " << sys.term_count() << " terms, "
            << (sys.reduced ? "reduced" : "un-reduced") << '\n';
    for (std::size_t i = 0; i < sys.basis.size(); ++i) listing << sys.equation(i) << '\n';
    if (cfg.equations) {
      write_file_atomic(*cfg.equations, listing.str());
    } else {
      out << listing.str();
    }
    err << "compiled " << sys.basis.size() << " moments in " << ms << " ms\n";
    return static_cast<int>(kOk);
  });
}

int cmd_propagate(const PropagateConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    MomentStateSystem sys = load_system(cfg.compiled);
    const SystemSpec dist_spec = load_spec_file(cfg.dist);
    const DisturbanceModel model = dist_spec.disturbance_model();
    for (const auto& link : sys.dist_links) {
      if (!model.contains(link.source)) throw SpecError("no distribution for disturbance '" + link.source + "'");
    }
    const auto init = read_assignments(cfg.init);
    const Propagator prop(std::move(sys));
    const MomentState x0 = prop.init_deterministic(encoded_init(prop.system(), init));

    const auto start = std::chrono::steady_clock::now();
    MomentTrajectory traj;
    if (cfg.fast_stationary) {
      traj.states = {x0, prop.propagate_stationary(x0, model, cfg.steps)};
      if (cfg.steps == 0) traj.states.pop_back();
    } else {
      traj = prop.propagate(x0, model, cfg.steps);
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

    const auto comments = metadata("propagate", {"compiled " + cfg.compiled, "dist " + cfg.dist, describe_init(init),
                                                 "steps " + std::to_string(cfg.steps),
                                                 "vars " + join(prop.system().vars)});
    write_file_atomic(cfg.output, trajectory_csv(prop.system(), traj, comments));
    out << "propagated " << cfg.steps << " steps of " << prop.dimension() << " moments in " << ms << " ms\n";
    return static_cast<int>(kOk);
  });
}

int cmd_mc(const McConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemSpec spec = load_spec_file(cfg.spec);
    require_distributions(spec);
    const auto init = read_assignments(cfg.init);
    const auto x0 = original_init(spec, init);

    McRequest request;
    if (cfg.compiled) {
      const MomentStateSystem sys = load_system(*cfg.compiled);
      if (sys.vars != spec.encoded_state_names()) throw SpecError("compiled system does not match the spec");
      request = default_request(spec, &sys);
    } else if (!spec.target_moments.empty()) {
      const MomentStateSystem sys = compile_spec(spec, true);
      request = default_request(spec, &sys);
    } else {
      request = default_request(spec);
    }
    RolloutOptions opts;
    opts.samples = cfg.samples;
    opts.steps = cfg.steps;
    opts.seed = cfg.seed;
    opts.threads = cfg.threads;

    const auto start = std::chrono::steady_clock::now();
    const McEstimate est = mc_simulate(spec, spec.disturbance_model(), x0, request, opts);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto comments =
        metadata("mc", {"spec " + cfg.spec, describe_init(init), "steps " + std::to_string(cfg.steps),
                        "samples " + std::to_string(cfg.samples), "seed " + std::to_string(cfg.seed),
                        "batch_size " + std::to_string(opts.batch_size)});
    write_file_atomic(cfg.output, mc_table(est).to_csv(comments).to_string());
    out << "simulated " << cfg.samples << " samples x " << cfg.steps << " steps in " << s << " s\n";
    return static_cast<int>(kOk);
  });
}

int cmd_linearize(const LinearizeConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemSpec spec = load_spec_file(cfg.spec);
    require_distributions(spec);
    const auto init = read_assignments(cfg.init);
    const auto x0 = original_init(spec, init);
    const DisturbanceModel model = spec.disturbance_model();
    std::vector<double> w_star;
    for (const auto& w : spec.disturbance_vars) w_star.push_back(model.distribution(w).mean());

    const LinearModel lin = linearize(spec, x0, w_star, cfg.dt);
    const Eigen::VectorXd mu0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
    const Eigen::MatrixXd sigma0 = Eigen::MatrixXd::Zero(mu0.size(), mu0.size());
    const LinearTrajectory traj = linear_propagate(lin, spec, mu0, sigma0, model, cfg.steps);
    const auto comments = metadata("linearize", {"spec " + cfg.spec, describe_init(init),
                                                 "steps " + std::to_string(cfg.steps), "dt " + format_double(cfg.dt)});
    write_file_atomic(cfg.output, linear_table(spec, traj).to_csv(comments).to_string());
    out << "linearized about the initial state; " << cfg.steps << " steps written\n";
    return static_cast<int>(kOk);
  });
}

int cmd_compare(const CompareConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CsvDocument exact_doc = read_csv(cfg.exact);
    MomentTable exact = MomentTable::from_csv(exact_doc);
    for (const auto& c : exact_doc.comments) {
      std::istringstream ls(c);
      std::string kw;
      if (ls >> kw && kw == "vars") {
        std::vector<std::string> vars;
        for (std::string v; ls >> v;) vars.push_back(v);
        add_covariances(exact, vars);
      }
    }
    const MomentTable mc = MomentTable::from_csv(read_csv(cfg.mc));
    std::optional<MomentTable> lin;
    if (cfg.linear) lin = MomentTable::from_csv(read_csv(*cfg.linear));

    const CompareReport report = compare(exact, mc, lin ? &*lin : nullptr, cfg.threshold);
    CsvDocument doc = report.to_csv();
    const auto meta = metadata("compare", {"exact " + cfg.exact, "mc " + cfg.mc,
                                           "linear " + (cfg.linear ? *cfg.linear : std::string("-"))});
    doc.comments.insert(doc.comments.begin(), meta.begin(), meta.end());
    write_file_atomic(cfg.output, doc.to_string());
    if (cfg.plot) write_file_atomic(*cfg.plot, report.plot_data().to_string());

    out << "max |z| exact vs MC: " << report.max_abs_z_exact << " (" << report.flagged_exact << " flagged above "
        << report.threshold << ")\n";
    if (lin) {
      out << "max |z| linearized vs MC: " << report.max_abs_z_linear << " (" << report.flagged_linear
          << " flagged)\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_plan(const PlanConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const SystemSpec spec = load_spec_file(cfg.spec);
    require_distributions(spec);
    const Environment env = load_environment(cfg.env);
    PlannerConfig pc;
    pc.iterations = cfg.iterations;
    pc.speed = cfg.speed;
    pc.turn_radius = cfg.turn_radius;
    pc.max_edge_length = cfg.max_edge;
    pc.goal_bias = cfg.goal_bias;
    const StochasticSteering steering(spec, compile_spec(spec, !cfg.unreduced), spec.disturbance_model(), pc);

    const auto start = std::chrono::steady_clock::now();
    const PlanResult result = build_rrt(env, steering, cfg.eps, pc, cfg.seed);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto comments = metadata(
        "plan", {"spec " + cfg.spec, "env " + cfg.env, "eps " + format_double(cfg.eps),
                 "seed " + std::to_string(cfg.seed), "iterations " + std::to_string(cfg.iterations),
                 "speed " + format_double(cfg.speed), "turn_radius " + format_double(cfg.turn_radius),
                 "max_edge " + format_double(cfg.max_edge), "goal_bias " + format_double(cfg.goal_bias)});
    if (cfg.tree) write_file_atomic(*cfg.tree, result.tree_csv().to_string());
    if (!result.found()) {
      err << "no plan: " << result.tree.size() << " nodes after " << result.iterations << " iterations\n";
      return static_cast<int>(kNoPlan);
    }
    write_file_atomic(cfg.output, result.path_csv(comments).to_string());
    if (cfg.controls) {
      CsvDocument doc;
      doc.comments = comments;
      doc.header = {"step", "u"};
      const auto u = result.controls();
      for (std::size_t k = 0; k < u.size(); ++k) doc.rows.push_back({std::to_string(k), format_double(u[k])});
      write_file_atomic(*cfg.controls, doc.to_string());
    }
    out << "plan with " << result.path.size() << " nodes, risk bound "
        << result.tree[*result.goal_node].risk_to_node << ", tree " << result.tree.size() << " nodes, " << s
        << " s\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace momentprop::cli
