#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "momentprop/compiler.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/propagator.hpp"
#include "momentprop/sysspec.hpp"
#include "oracles.hpp"

using namespace momentprop;

namespace {

struct Compiled {
  SystemSpec spec;
  PolynomialSystem poly;
  MomentStateSystem system;
};

Compiled compile(const std::string& text, bool reduced = true) {
  Compiled c{parse_spec(text), {}, {}};
  c.poly = trig_encode(c.spec);
  c.system = treering(c.poly, c.poly.targets, reduced);
  return c;
}

Compiled dubins(bool reduced = true) { return compile(oracle::read_text(oracle::preset("dubins.spec")), reduced); }

double value(const Compiled& c, const MomentState& s, const std::string& mono) {
  const auto idx = c.system.basis.index_of(parse_monomial(mono, c.system.vars));
  REQUIRE(idx.has_value());
  return s.values[*idx];
}

const char* kWalk = "state x\ndisturbance w\ndyn x' = x + w\ndist w = gaussian(0, 1)\nmoments x x^2\n";

}  // namespace

TEST_SUITE("propagator") {
  TEST_CASE("init_deterministic") {
    const auto c = dubins();
    const Propagator p(c.system);
    const std::vector<double> x0{0.0, 0.0, 1.0, 1.0, 0.0};
    const auto s = p.init_deterministic(x0);
    CHECK(s.time == 0);
    CHECK(value(c, s, "x") == 0.0);
    CHECK(value(c, s, "v^2") == 1.0);
    CHECK(value(c, s, "c") == 1.0);
    CHECK(value(c, s, "c*s") == 0.0);
    const auto zero = p.init_deterministic(std::vector<double>{0.0, 0.0, 0.0, 1.0, 0.0});
    CHECK(value(c, zero, "x*v*c") == 0.0);
    const auto walk = compile(kWalk);
    const auto origin = Propagator(walk.system).init_deterministic(std::vector<double>{0.0});
    for (double v : origin.values) CHECK(v == 0.0);
    CHECK_THROWS(p.init_deterministic(std::vector<double>{0.0, 0.0, 1.0, 0.5, 0.5}));
    CHECK_THROWS(p.init_deterministic(std::vector<double>{0.0, 0.0}));
  }

  TEST_CASE("random walk step adds variance") {
    const auto c = compile(kWalk);
    const Propagator p(c.system);
    MomentState s = p.init_deterministic(std::vector<double>{1.0});
    const auto model = c.spec.disturbance_model();
    const auto next = p.step(s, model);
    CHECK(next.time == 1);
    CHECK(value(c, next, "x") == 1.0);
    CHECK(value(c, next, "x^2") == 2.0);
  }

  TEST_CASE("random walk over ten thousand steps") {
    const auto c = compile(kWalk);
    const Propagator p(c.system);
    DisturbanceModel model;
    model.set("w", Distribution::gaussian(0.0, 0.25));
    const auto init = p.init_deterministic(std::vector<double>{2.0});
    const auto traj = p.propagate(init, model, 10000);
    REQUIRE(traj.horizon() == 10000);
    CHECK(value(c, traj.states.back(), "x") == 2.0);
    CHECK(value(c, traj.states.back(), "x^2") == doctest::Approx(4.0 + 10000 * 0.25).epsilon(1e-9));
    for (std::size_t t = 0; t <= 10000; ++t) CHECK(traj.states[t].time == t);
    const auto none = p.propagate(init, model, 0);
    CHECK(none.states.size() == 1);
    CHECK(none.states[0].values == init.values);
  }

  TEST_CASE("Dubins one step with a quarter-turn heading disturbance") {
    const auto c = dubins();
    const Propagator p(c.system);
    DisturbanceModel model;
    model.set("w_theta", Distribution::degenerate(M_PI / 2));
    model.set("w_v", Distribution::degenerate(0.0));
    const auto s = p.step(p.init_deterministic(std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0}), model);
    CHECK(value(c, s, "x") == doctest::Approx(1.0));
    CHECK(std::abs(value(c, s, "y")) < 1e-15);
    CHECK(std::abs(value(c, s, "c")) < 1e-15);
    CHECK(value(c, s, "s") == doctest::Approx(1.0));
  }

  TEST_CASE("degenerate disturbances reproduce the deterministic trajectory") {
    for (bool reduced : {true, false}) {
      const auto c = dubins(reduced);
      const Propagator p(c.system);
      DisturbanceModel model;
      const double wv = 0.001, wt = 0.02;
      model.set("w_v", Distribution::degenerate(wv));
      model.set("w_theta", Distribution::degenerate(wt));
      oracle::DubinsState ref{0.5, -1.0, 0.3, 0.4};
      auto traj = p.propagate(
          p.init_deterministic(std::vector<double>{ref.x, ref.y, ref.v, std::cos(ref.theta), std::sin(ref.theta)}),
          model, 1000);
      for (std::size_t t = 1; t <= 1000; ++t) {
        ref = oracle::dubins_step(ref, wv, wt);
        if (t % 50 != 0) continue;
        const std::vector<double> enc{ref.x, ref.y, ref.v, std::cos(ref.theta), std::sin(ref.theta)};
        for (std::size_t i = 0; i < c.system.basis.size(); ++i) {
          const double want = monomial_value(c.system.basis[i], std::span<const double>(enc));
          const double got = traj.states[t].values[i];
          CHECK(std::abs(got - want) <= 1e-10 * std::max(1.0, std::abs(want)));
        }
      }
    }
  }

  TEST_CASE("reduced and un-reduced systems agree on seed moments") {
    const auto r = dubins(true);
    const auto u = dubins(false);
    const Propagator pr(r.system), pu(u.system);
    const auto model = r.spec.disturbance_model();
    const std::vector<double> x0{0.0, 0.0, 1.0, 1.0, 0.0};
    const auto tr = pr.propagate(pr.init_deterministic(x0), model, 1000);
    const auto tu = pu.propagate(pu.init_deterministic(x0), model, 1000);
    for (std::size_t t = 0; t <= 1000; t += 10) {
      for (const auto& m : r.poly.targets) {
        const double a = tr.states[t].values[*r.system.basis.index_of(m)];
        const double b = tu.states[t].values[*u.system.basis.index_of(m)];
        CHECK(std::abs(a - b) <= 1e-10 * std::max(std::abs(a), std::abs(b)) + 1e-300);
      }
    }
  }

  TEST_CASE("stationary fast path matches stepping") {
    const auto u = dubins(false);
    const Propagator p(u.system);
    const auto model = u.spec.disturbance_model();
    const auto init = p.init_deterministic(std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0});
    const auto slow = p.propagate(init, model, 300).states.back();
    const auto fast = p.propagate_stationary(init, model, 300);
    CHECK(fast.time == 300);
    for (std::size_t i = 0; i < slow.values.size(); ++i)
      CHECK(std::abs(fast.values[i] - slow.values[i]) <= 1e-9 * std::max(1.0, std::abs(slow.values[i])));
    CHECK_THROWS(Propagator(dubins(true).system).propagate_stationary(init, model, 10));
  }

  TEST_CASE("non-finite values are reported with step and moment") {
    const auto c = compile("state x\ndisturbance w\ndyn x' = 1e100*x + w\ndist w = gaussian(0, 1)\nmoments x^2\n");
    const Propagator p(c.system);
    try {
      p.propagate(p.init_deterministic(std::vector<double>{1.0}), c.spec.disturbance_model(), 10);
      FAIL("expected PropagationError");
    } catch (const PropagationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("step 2") != std::string::npos);
      CHECK(msg.find("E[x") != std::string::npos);
    }
  }

  TEST_CASE("horizon of a shift schedule is enforced") {
    const auto c = compile(kWalk);
    const Propagator p(c.system);
    DisturbanceModel model;
    model.set("w", Distribution::gaussian(0.0, 1.0), {0.1, 0.2});
    const auto init = p.init_deterministic(std::vector<double>{0.0});
    CHECK(p.propagate(init, model, 2).horizon() == 2);
    CHECK_THROWS_AS(p.propagate(init, model, 3), PropagationError);
    DisturbanceModel missing;
    CHECK_THROWS_AS(p.step(init, missing), PropagationError);
  }

  TEST_CASE("mean_cov") {
    const auto c = dubins();
    const Propagator p(c.system);
    const auto point = p.propagate(p.init_deterministic(std::vector<double>{1.0, 2.0, 0.0, 1.0, 0.0}),
                                   c.spec.disturbance_model(), 1);
    const auto mc = mean_cov(c.system, point, "x", "y");
    REQUIRE(mc.size() == 2);
    CHECK(mc[0].mean == Eigen::Vector2d(1.0, 2.0));
    CHECK(mc[0].cov.isZero());

    MomentTrajectory unit;
    MomentState s;
    s.values.assign(c.system.basis.size(), 0.0);
    s.values[*c.system.basis.index_of(parse_monomial("x^2", c.system.vars))] = 1.0;
    s.values[*c.system.basis.index_of(parse_monomial("y^2", c.system.vars))] = 1.0;
    unit.states.push_back(s);
    const auto id = mean_cov(c.system, unit, "x", "y");
    CHECK(id[0].cov.isApprox(Eigen::Matrix2d::Identity()));
    CHECK_THROWS(mean_cov(c.system, unit, "x", "v"));
  }

  TEST_CASE("covariance stays positive semidefinite") {
    const auto c = dubins();
    const Propagator p(c.system);
    const auto traj = p.propagate(p.init_deterministic(std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0}),
                                  c.spec.disturbance_model(), 100);
    for (const auto& mc : mean_cov(c.system, traj, "x", "y")) {
      CHECK(mc.cov(0, 1) == mc.cov(1, 0));
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(mc.cov);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, mc.cov.norm()));
    }
  }

  TEST_CASE("trajectory CSV") {
    const auto c = compile(kWalk);
    const Propagator p(c.system);
    const auto traj = p.propagate(p.init_deterministic(std::vector<double>{0.0}), c.spec.disturbance_model(), 2);
    const auto doc = parse_csv(trajectory_csv(c.system, traj, {"seed 1"}));
    CHECK(doc.comments.size() == 1);
    CHECK(doc.header == std::vector<std::string>{"t", "x", "x^2"});
    REQUIRE(doc.rows.size() == 3);
    CHECK(parse_double(doc.rows[2][2]) == 2.0);
  }

  TEST_CASE("throughput of the 20-moment system") {
    const auto c = dubins();
    const Propagator p(c.system);
    const auto init = p.init_deterministic(std::vector<double>{0.0, 0.0, 1.0, 1.0, 0.0});
    const auto model = c.spec.disturbance_model();
    double best = 1e9;
    for (int rep = 0; rep < 3; ++rep) {
      const auto start = std::chrono::steady_clock::now();
      const auto traj = p.propagate(init, model, 100000);
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      CHECK(traj.horizon() == 100000);
    }
    MESSAGE("1e5 steps: " << best * 1e3 << " ms");
    CHECK(best <= 0.1);
  }
}
