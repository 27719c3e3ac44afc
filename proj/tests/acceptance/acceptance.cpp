// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by number, e.g. `momentprop_acceptance 1 4 9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momentprop/compiler.hpp"
#include "momentprop/distmoments.hpp"
#include "momentprop/oracle.hpp"
#include "momentprop/planner.hpp"
#include "momentprop/propagator.hpp"
#include "momentprop/sysspec.hpp"
#include "oracles.hpp"

using namespace momentprop;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

std::set<MultiIndex> index_set(const std::vector<std::string>& names, const std::vector<std::string>& vars) {
  std::set<MultiIndex> out;
  for (const auto& n : names) out.insert(parse_monomial(n, vars));
  return out;
}

// Car at rest at the origin, heading along +x.
const std::vector<double> kStart{0.0, 0.0, 0.0, 0.0};

// ---------------------------------------------------------------------------

Outcome completion() {
  const auto spec = load_spec_file(oracle::preset("dubins.spec"));
  const auto poly = trig_encode(spec);
  const auto t0 = std::chrono::steady_clock::now();
  const auto reduced = treering(poly, poly.targets, true);
  const double t_reduced = seconds_since(t0);
  const auto t1 = std::chrono::steady_clock::now();
  const auto full = treering(poly, poly.targets, false);
  const double t_full = seconds_since(t1);

  const auto want = index_set({"x", "y", "x*y", "x^2", "y^2", "c", "s", "v", "v^2", "x*s", "y*s", "x*c", "y*c", "s^2",
                               "c^2", "c*s", "x*v*s", "x*v*c", "y*v*s", "y*v*c"},
                              poly.vars);
  const auto extras = index_set({"s^2*v^2", "s^2*v", "c*s*v^2", "c^2*v", "c^2*v^2"}, poly.vars);
  const std::set<MultiIndex> got(reduced.basis.begin(), reduced.basis.end());
  const std::set<MultiIndex> got_full(full.basis.begin(), full.basis.end());
  const bool has_extras = std::includes(got_full.begin(), got_full.end(), extras.begin(), extras.end());
  return {got == want && has_extras && t_reduced < 1.0 && t_full < 1.0,
          fmt("reduced %zu moments (%s), un-reduced %zu with extras %s, %.1f ms / %.1f ms", reduced.basis.size(),
              got == want ? "exact match" : "MISMATCH", full.basis.size(), has_extras ? "present" : "MISSING",
              t_reduced * 1e3, t_full * 1e3)};
}

// ---------------------------------------------------------------------------

struct Scenario {
  std::string reading;
  CompareReport report;
  double mc_seconds = 0.0;
  std::size_t rows = 0;
  bool psd = true;
};

Scenario run_scenario(const std::string& reading, double angle_variance) {
  const auto spec = load_spec_file(oracle::preset("dubins.spec"));
  DisturbanceModel model = spec.disturbance_model();
  model.set("w_theta", Distribution::gaussian(0.04, angle_variance));
  const std::size_t T = 100;

  const auto poly = trig_encode(spec);
  const auto sys = treering(poly, poly.targets, true);
  const Propagator p(sys);
  const auto traj = p.propagate(p.init_deterministic(encode_point(spec, kStart)), model, T);
  const MomentTable exact = exact_table(sys, traj);

  Scenario out;
  out.reading = reading;
  for (const auto& mc : mean_cov(sys, traj, "x", "y")) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(mc.cov);
    out.psd = out.psd && es.eigenvalues().minCoeff() >= -1e-9;
  }

  RolloutOptions opt;
  opt.samples = 1'000'000;
  opt.steps = T;
  opt.seed = 20240;
  const auto start = std::chrono::steady_clock::now();
  const McEstimate est = mc_simulate(spec, model, kStart, default_request(spec, &sys), opt);
  out.mc_seconds = seconds_since(start);

  std::vector<double> w_star;
  for (const auto& w : spec.disturbance_vars) w_star.push_back(model.distribution(w).mean());
  const LinearModel lin = linearize(spec, kStart, w_star);
  const Eigen::VectorXd mu0 = Eigen::Map<const Eigen::VectorXd>(kStart.data(), 4);
  const MomentTable linear = linear_table(spec, linear_propagate(lin, spec, mu0, Eigen::MatrixXd::Zero(4, 4), model, T));

  out.report = compare(exact, mc_table(est), &linear);
  out.rows = out.report.rows.size();
  return out;
}

std::vector<Scenario>& scenarios() {
  static std::vector<Scenario> cache = [] {
    std::vector<Scenario> s;
    s.push_back(run_scenario("variance 0.03", 0.03));
    s.push_back(run_scenario("sd 0.03", 0.03 * 0.03));
    return s;
  }();
  return cache;
}

bool is_covariance(const std::string& name) { return name.rfind("cov(", 0) == 0; }

Outcome mc_agreement() {
  bool pass = true;
  std::string detail;
  for (const auto& s : scenarios()) {
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& r : s.report.rows) {
      if (is_covariance(r.moment)) continue;
      worst = std::max(worst, std::abs(r.z_exact));
      ++checked;
    }
    const bool ok = checked == 20 * 101 && worst <= 5.0 && s.psd;
    pass = pass && ok;
    detail += fmt("[%s: %zu moment-steps, max |z| %.2f, covariance PSD %s, MC %.0f s] ", s.reading.c_str(), checked,
                  worst, s.psd ? "yes" : "NO", s.mc_seconds);
  }
  return {pass, detail};
}

Outcome linear_divergence() {
  bool pass = true;
  std::string detail;
  for (const auto& s : scenarios()) {
    double lin_worst = 0.0, exact_worst = 0.0;
    std::string lin_name;
    for (const auto& r : s.report.rows) {
      if (r.t != 100 || !is_covariance(r.moment) || !r.z_linear) continue;
      exact_worst = std::max(exact_worst, std::abs(r.z_exact));
      if (std::abs(*r.z_linear) > lin_worst) {
        lin_worst = std::abs(*r.z_linear);
        lin_name = r.moment;
      }
    }
    const bool ok = lin_worst > 10.0 && exact_worst <= 5.0;
    pass = pass && ok;
    detail += fmt("[%s: linearized max |z| %.1f at %s, exact max |z| %.2f] ", s.reading.c_str(), lin_worst,
                  lin_name.c_str(), exact_worst);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------------------

Outcome throughput() {
  const auto spec = load_spec_file(oracle::preset("dubins.spec"));
  const auto poly = trig_encode(spec);
  const Propagator p(treering(poly, poly.targets, true));
  const auto init = p.init_deterministic(encode_point(spec, kStart));
  const auto model = spec.disturbance_model();
  double best = 1e9;
  for (int rep = 0; rep < 5; ++rep) {
    const auto start = std::chrono::steady_clock::now();
    const auto traj = p.propagate(init, model, 100'000);
    best = std::min(best, seconds_since(start));
    if (traj.horizon() != 100'000) return {false, "wrong horizon"};
  }
  return {p.dimension() == 20 && best <= 0.1,
          fmt("%zu moments, 1e5 steps in %.1f ms (%.3f us/step)", p.dimension(), best * 1e3, best * 10.0)};
}

// ---------------------------------------------------------------------------

Outcome trig_oracle() {
  std::vector<Distribution> grid;
  for (double mu : {-1.0, 0.0, 0.04, 1.0}) {
    for (double var : {1e-8, 0.03, 1.0}) grid.push_back(Distribution::gaussian(mu, var));
    for (double width : {0.1, 1.0, M_PI}) grid.push_back(Distribution::uniform(mu - width / 2, mu + width / 2));
  }
  double worst = 0.0, worst_pyth = 0.0;
  std::size_t count = 0;
  for (const auto& d : grid) {
    for (double shift : {0.0, 0.25}) {
      for (unsigned m = 0; m <= 6; ++m) {
        for (unsigned n = 0; m + n <= 6; ++n) {
          if (m + n == 0) continue;
          worst = std::max(worst, std::abs(trig_moment(d, shift, m, n) - oracle::quad_trig_moment(d, shift, m, n)));
          ++count;
        }
      }
      worst_pyth = std::max(worst_pyth, std::abs(trig_moment(d, shift, 2, 0) + trig_moment(d, shift, 0, 2) - 1.0));
    }
  }
  return {worst <= 1e-9 && worst_pyth <= 1e-12,
          fmt("%zu moments, max |delta| vs quadrature %.2e, max Pythagoras residual %.2e", count, worst, worst_pyth)};
}

// ---------------------------------------------------------------------------

struct RandomSystem {
  std::string text;
  std::vector<std::string> states;
  std::vector<std::string> disturbances;
};

RandomSystem random_system(std::mt19937_64& rng) {
  const std::vector<std::string> state_pool{"p", "q", "r"}, dist_pool{"u", "w"};
  const std::size_t nx = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
  const std::size_t nw = std::uniform_int_distribution<std::size_t>(1, 2)(rng);
  RandomSystem out;
  out.states.assign(state_pool.begin(), state_pool.begin() + static_cast<std::ptrdiff_t>(nx));
  out.disturbances.assign(dist_pool.begin(), dist_pool.begin() + static_cast<std::ptrdiff_t>(nw));
  std::vector<std::string> vars = out.states;
  vars.insert(vars.end(), out.disturbances.begin(), out.disturbances.end());

  const std::vector<std::string> coeffs{"0.25", "0.5", "0.75", "1", "1.25", "1.5", "2"};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto monomial = [&] {
    // Degree 0, 1 or 2 over states and disturbances.
    const std::size_t deg = pick(3);
    std::string m;
    for (std::size_t k = 0; k < deg; ++k) m += "*" + vars[pick(vars.size())];
    return m;
  };
  auto term = [&](bool first, const std::string& mono) {
    const bool neg = pick(2) == 1;
    std::string t = first ? (neg ? "-" : "") : (neg ? " - " : " + ");
    return t + coeffs[pick(coeffs.size())] + mono;
  };

  std::vector<std::string> updates(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    const std::size_t terms = 1 + pick(3);
    for (std::size_t k = 0; k < terms; ++k) updates[i] += term(k == 0, monomial());
  }
  for (const auto& w : out.disturbances) updates[pick(nx)] += term(false, "*" + w);

  std::ostringstream text;
  text << "state";
  for (const auto& s : out.states) text << ' ' << s;
  text << "\ndisturbance";
  for (const auto& w : out.disturbances) text << ' ' << w;
  text << '\n';
  for (std::size_t i = 0; i < nx; ++i) text << "dyn " << out.states[i] << "' = " << updates[i] << '\n';
  for (const auto& w : out.disturbances) {
    switch (pick(3)) {
      case 0:
        text << "dist " << w << " = gaussian(" << std::vector<std::string>{"-0.2", "0", "0.3"}[pick(3)] << ", "
             << std::vector<std::string>{"0.01", "0.05", "0.2"}[pick(3)] << ")\n";
        break;
      case 1:
        text << "dist " << w << " = uniform(" << std::vector<std::string>{"-0.5", "-0.1", "0.2"}[pick(3)] << ", "
             << std::vector<std::string>{"0.3", "0.5", "0.9"}[pick(3)] << ")\n";
        break;
      default:
        text << "dist " << w << " = beta(" << std::vector<std::string>{"2", "5", "10"}[pick(3)] << ", "
             << std::vector<std::string>{"3", "8", "20"}[pick(3)] << ")\n";
        break;
    }
  }
  out.text = text.str();
  return out;
}

MultiIndex random_target(std::size_t nx, std::mt19937_64& rng) {
  const unsigned deg = std::uniform_int_distribution<unsigned>(1, 4)(rng);
  MultiIndex alpha(nx);
  for (unsigned k = 0; k < deg; ++k) ++alpha[std::uniform_int_distribution<std::size_t>(0, nx - 1)(rng)];
  return alpha;
}

double form_value(const MomentUpdateForm& form, const PolynomialSystem& poly, const DisturbanceModel& model,
                  const std::vector<double>& x0) {
  double sum = 0.0;
  for (const auto& term : form.terms) {
    double v = term.coeff.get_d() * dist_moment(model, poly.dist_links, term.dist_index, 0);
    for (const auto& f : term.state_factors) v *= monomial_value(f, std::span<const double>(x0));
    sum += v;
  }
  return sum;
}

Outcome muf_brute_force() {
  std::mt19937_64 rng(606);
  std::uniform_int_distribution<int> eighths(-8, 8);
  std::size_t exact_failures = 0, mc_failures = 0;
  double worst_z = 0.0;
  std::string first_failure;
  const auto start = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const RandomSystem rs = random_system(rng);
    const SystemSpec spec = parse_spec(rs.text);
    const PolynomialSystem poly = trig_encode(spec);
    const std::size_t nx = poly.nx();
    const MultiIndex alpha = random_target(nx, rng);
    const MomentUpdateForm full = muf(poly, alpha);
    const MomentUpdateForm reduced = reduce(full, poly.graph);

    // Exact: degenerate disturbances at rational points.
    std::vector<Rational> x0q(nx), wq(poly.nw());
    for (auto& v : x0q) v = Rational(eighths(rng), 8), v.canonicalize();
    for (auto& v : wq) v = Rational(eighths(rng), 8), v.canonicalize();
    std::vector<Rational> point(x0q);
    point.insert(point.end(), wq.begin(), wq.end());
    std::vector<Rational> next;
    for (const auto& fi : poly.f) next.push_back(fi.evaluate(std::span<const Rational>(point)));
    const Rational want = monomial_value(alpha, std::span<const Rational>(next));
    auto state = [&](const MultiIndex& m) { return monomial_value(m, std::span<const Rational>(x0q)); };
    auto dist = [&](const MultiIndex& m) { return monomial_value(m, std::span<const Rational>(wq)); };
    for (const auto* form : {&full, &reduced}) {
      if (evaluate_form_exact(*form, state, dist) != want) {
        ++exact_failures;
        if (first_failure.empty()) first_failure = "exact: " + rs.text;
      }
    }

    // Statistical: one step of the real system.
    std::vector<double> x0(nx);
    for (std::size_t i = 0; i < nx; ++i) x0[i] = x0q[i].get_d();
    const DisturbanceModel model = spec.disturbance_model();
    McRequest request;
    request.moments = {alpha};
    RolloutOptions opt;
    opt.samples = 1'000'000;
    opt.steps = 1;
    opt.seed = 7000 + static_cast<std::uint64_t>(trial);
    const McEstimate est = mc_simulate(spec, model, x0, request, opt);
    for (const auto* form : {&full, &reduced}) {
      const double z = z_score(form_value(*form, poly, model, x0), est.mean[1][0], est.se[1][0]);
      worst_z = std::max(worst_z, std::abs(z));
      if (!(std::abs(z) <= 5.0)) {
        ++mc_failures;
        if (first_failure.empty()) first_failure = "mc: " + rs.text;
      }
    }
  }
  std::string detail = fmt("200 systems: %zu exact mismatches, %zu MC outliers, max |z| %.2f, %.0f s",
                           exact_failures, mc_failures, worst_z, seconds_since(start));
  if (!first_failure.empty()) detail += "; first failure " + first_failure;
  return {exact_failures == 0 && mc_failures == 0, detail};
}

// ---------------------------------------------------------------------------

Outcome risk_bound() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), pos(0.05, 1.0), eps_dist(1e-3, 0.999);
  const long n_mc = 1'000'000;
  std::size_t violations = 0, decisions_checked = 0, decision_mismatch = 0, sampled = 0, sampled_bad = 0;
  double worst_excess = -1.0;
  for (int inst = 0; inst < 10'000; ++inst) {
    const Eigen::Vector2d mu(3.0 * unit(rng), 3.0 * unit(rng));
    Eigen::Matrix2d L;
    L << pos(rng), 0.0, unit(rng), pos(rng);
    const Eigen::Matrix2d sigma = L * L.transpose();
    const double ang = M_PI * unit(rng);
    const Eigen::Vector2d a(std::cos(ang), std::sin(ang));
    const double b = 4.0 * unit(rng);
    // Violation: a^T X + b <= 0.
    const double m = a.dot(mu) + b;
    const double s2 = a.dot(sigma * a);
    const double bound = cantelli_bound(m, s2);

    // The violation count of n_mc independent draws is Binomial(n_mc, p), p the exact
    // Gaussian probability; draw it directly.
    const double p = oracle::phi(-m / std::sqrt(s2));
    const long hits = std::binomial_distribution<long>(n_mc, p)(rng);
    double freq = static_cast<double>(hits) / n_mc;
    double se = std::sqrt(freq * (1.0 - freq) / n_mc);
    if (freq > bound + 6.0 * se) ++violations;
    worst_excess = std::max(worst_excess, freq - bound - 6.0 * se);

    // Every hundredth instance is also sampled in the plane.
    if (inst % 100 == 0) {
      std::normal_distribution<double> z;
      long direct = 0;
      for (long k = 0; k < n_mc; ++k) {
        const Eigen::Vector2d x = mu + L * Eigen::Vector2d(z(rng), z(rng));
        direct += a.dot(x) + b <= 0.0;
      }
      freq = static_cast<double>(direct) / n_mc;
      se = std::sqrt(freq * (1.0 - freq) / n_mc);
      ++sampled;
      if (freq > bound + 6.0 * se) ++sampled_bad;
    }

    if (m >= 0.0) {
      const double eps = eps_dist(rng);
      ++decisions_checked;
      const bool ours = cantelli_bound(m, s2) <= eps;
      const bool prior = m >= std::sqrt(s2) * std::sqrt((1.0 - eps) / eps);
      decision_mismatch += ours != prior;
    }
  }
  return {violations == 0 && sampled_bad == 0 && decision_mismatch == 0,
          fmt("1e4 instances: %zu above bound + 6 SE (max excess %.2e); %zu/%zu sampled in the plane above; "
              "%zu/%zu decision mismatches",
              violations, worst_excess, sampled_bad, sampled, decision_mismatch, decisions_checked)};
}

// ---------------------------------------------------------------------------

Outcome planner_constraint() {
  const auto spec = load_spec_file(oracle::preset("dubins_planning.spec"));
  const auto env = load_environment(oracle::preset("corridor.env"));
  const auto poly = trig_encode(spec);
  const PlannerConfig config;
  const StochasticSteering steering(spec, treering(poly, poly.targets, true), spec.disturbance_model(), config);
  const double eps = 0.1;
  const auto start = std::chrono::steady_clock::now();
  const PlanResult plan = build_rrt(env, steering, eps, config, 2024);
  const double plan_seconds = seconds_since(start);
  if (!plan.found()) return {false, fmt("no plan after %zu iterations", plan.iterations)};

  double worst_node = 0.0;
  for (const auto& n : plan.tree) worst_node = std::max(worst_node, n.risk_to_node);

  const std::vector<double> controls = plan.controls();
  RolloutOptions opt;
  opt.samples = 100'000;
  opt.steps = controls.size();
  opt.seed = 99;
  std::vector<std::vector<char>> hit(batch_count(opt), std::vector<char>(opt.batch_size, 0));
  const std::size_t ix = spec.state_index("x"), iy = spec.state_index("y");
  rollout(spec, steering.shifted(controls), steering.initial_point(env.start), opt,
          [&](std::size_t batch, std::size_t t, const SampleBlock& block) {
            if (t == 0) return;
            for (std::size_t i = 0; i < block.count; ++i) {
              if (env.in_collision(block.state[ix][i], block.state[iy][i])) hit[batch][i] = 1;
            }
          });
  std::size_t collisions = 0;
  for (const auto& h : hit) collisions += static_cast<std::size_t>(std::count(h.begin(), h.end(), 1));
  const double freq = static_cast<double>(collisions) / static_cast<double>(opt.samples);
  const double goal_risk = plan.tree[*plan.goal_node].risk_to_node;
  return {worst_node <= eps && freq <= eps,
          fmt("plan of %zu steps, %zu nodes in %.1f s; max node risk %.3g, goal risk bound %.3g; "
              "rollout collision frequency %.5f",
              controls.size(), plan.tree.size(), plan_seconds, worst_node, goal_risk, freq)};
}

// ---------------------------------------------------------------------------

double affinity_residual(const MomentStateSystem& sys, const DisturbanceModel& model, std::mt19937_64& rng,
                         int pairs) {
  const Propagator p(sys);
  std::vector<double> dist;
  p.disturbance_moments(model, 0, dist);
  const std::size_t n = p.dimension();
  std::uniform_real_distribution<double> u(-1.0, 1.0), lam(0.0, 1.0);
  double worst = 0.0;
  std::vector<double> m1(n), m2(n), mix(n), f1(n), f2(n), fmix(n);
  for (int k = 0; k < pairs; ++k) {
    for (std::size_t i = 0; i < n; ++i) m1[i] = u(rng), m2[i] = u(rng);
    const double l = lam(rng);
    for (std::size_t i = 0; i < n; ++i) mix[i] = l * m1[i] + (1.0 - l) * m2[i];
    p.apply(m1, dist, f1);
    p.apply(m2, dist, f2);
    p.apply(mix, dist, fmix);
    for (std::size_t i = 0; i < n; ++i) {
      const double rhs = l * f1[i] + (1.0 - l) * f2[i];
      worst = std::max(worst, std::abs(fmix[i] - rhs) / std::max({1.0, std::abs(rhs), std::abs(fmix[i])}));
    }
  }
  return worst;
}

Outcome ltv_property() {
  std::mt19937_64 rng(9);
  const auto dubins = load_spec_file(oracle::preset("dubins.spec"));
  const auto dpoly = trig_encode(dubins);
  const auto full = treering(dpoly, dpoly.targets, false);
  const auto walk = parse_spec(
      "state a b\ndisturbance w\ndyn a' = 0.5*a + b*w\ndyn b' = b + w\ndist w = gaussian(0.1, 0.2)\nmoments a^2 "
      "a*b\n");
  const auto wpoly = trig_encode(walk);
  const auto wfull = treering(wpoly, wpoly.targets, false);
  const double aff = std::max(affinity_residual(full, dubins.disturbance_model(), rng, 50),
                              affinity_residual(wfull, walk.disturbance_model(), rng, 50));

  const auto reduced = treering(dpoly, dpoly.targets, true);
  const Propagator pr(reduced), pu(full);
  const auto model = dubins.disturbance_model();
  const auto x0 = encode_point(dubins, kStart);
  const auto tr = pr.propagate(pr.init_deterministic(x0), model, 1000);
  const auto tu = pu.propagate(pu.init_deterministic(x0), model, 1000);
  double worst = 0.0;
  for (std::size_t t = 0; t <= 1000; ++t) {
    for (const auto& m : dpoly.targets) {
      const double a = tr.states[t].values[*reduced.basis.index_of(m)];
      const double b = tu.states[t].values[*full.basis.index_of(m)];
      if (a != b) worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
  }
  return {aff <= 1e-12 && worst <= 1e-10,
          fmt("affinity residual %.2e over 100 pairs on two un-reduced systems (%zu and %zu moments); "
              "reduced vs un-reduced seed moments max rel. diff %.2e over 1000 steps",
              aff, full.basis.size(), wfull.basis.size(), worst)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"completion reproduction", completion},
      {"Monte Carlo agreement", mc_agreement},
      {"linearization divergence", linear_divergence},
      {"throughput", throughput},
      {"trig-moment oracle", trig_oracle},
      {"moment update forms by brute force", muf_brute_force},
      {"risk-bound validity", risk_bound},
      {"planner chance constraint", planner_constraint},
      {"linear time-varying property", ltv_property},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d (%s): %s - %s\n", id, criteria[k].first, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
