#include <doctest.h>

#include <cmath>
#include <random>

#include "momentprop/compiler.hpp"
#include "momentprop/errors.hpp"
#include "momentprop/oracle.hpp"
#include "momentprop/propagator.hpp"
#include "momentprop/sysspec.hpp"
#include "oracles.hpp"

using namespace momentprop;

namespace {

// Textbook raw moments, written out independently of the library.
double ref_raw(const Distribution& d, unsigned k) {
  const auto& kind = d.kind();
  if (const auto* g = std::get_if<Gaussian>(&kind)) {
    const double m = g->mean, v = g->variance;
    const double table[] = {1.0, m, m * m + v, m * m * m + 3 * m * v, std::pow(m, 4) + 6 * m * m * v + 3 * v * v};
    return table[k];
  }
  if (const auto* u = std::get_if<Uniform>(&kind))
    return (std::pow(u->upper, k + 1) - std::pow(u->lower, k + 1)) / ((k + 1) * (u->upper - u->lower));
  if (const auto* b = std::get_if<BetaDist>(&kind)) {
    double r = 1.0;
    for (unsigned j = 0; j < k; ++j) r *= (b->a + j) / (b->a + b->b + j);
    return r;
  }
  return std::pow(std::get<Degenerate>(kind).value, k);
}

const char* kWalk = "state x\ndisturbance w\ndyn x' = x + w\ndist w = gaussian(0, 1)\nmoments x x^2\n";

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("samplers reproduce the first four moments") {
    const std::size_t n = 1'000'000;
    for (const auto& d : {Distribution::gaussian(0.04, 0.03), Distribution::gaussian(-1.0, 2.0),
                          Distribution::uniform(-0.5, 2.0), Distribution::beta(10, 1000), Distribution::beta(2, 3)}) {
      std::mt19937_64 rng(99);
      double s[9] = {};
      for (std::size_t i = 0; i < n; ++i) {
        const double x = sample(d, rng);
        double p = 1.0;
        for (int k = 1; k <= 8; ++k) s[k] += (p *= x);
      }
      for (unsigned k = 1; k <= 4; ++k) {
        const double mean = s[k] / n;
        const double se = std::sqrt((s[2 * k] / n - mean * mean) / n);
        CAPTURE(d.to_string());
        CAPTURE(k);
        CHECK(std::abs(mean - ref_raw(d, k)) <= 6 * se);
      }
    }
    std::mt19937_64 rng(1);
    CHECK(sample(Distribution::degenerate(2.5), rng) == 2.5);
  }

  TEST_CASE("encode_point") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    const auto e = encode_point(spec, std::vector<double>{1.0, 2.0, 3.0, 0.5});
    REQUIRE(e.size() == 5);
    CHECK(e[3] == std::cos(0.5));
    CHECK(e[4] == std::sin(0.5));
  }

  TEST_CASE("Monte Carlo with degenerate disturbances is the deterministic trajectory") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    DisturbanceModel model;
    model.set("w_v", Distribution::degenerate(0.01));
    model.set("w_theta", Distribution::degenerate(0.1));
    const auto sys = treering(trig_encode(spec), trig_encode(spec).targets, true);
    RolloutOptions opt;
    opt.samples = 1000;
    opt.steps = 20;
    opt.seed = 4;
    const auto est = mc_simulate(spec, model, std::vector<double>{0.0, 0.0, 1.0, 0.0}, default_request(spec, &sys), opt);
    oracle::DubinsState ref{0.0, 0.0, 1.0, 0.0};
    for (std::size_t t = 1; t <= 20; ++t) {
      ref = oracle::dubins_step(ref, 0.01, 0.1);
      CHECK(est.mean[t][est.column("x")] == doctest::Approx(ref.x).epsilon(1e-12));
      CHECK(est.mean[t][est.column("y*v*s")] ==
            doctest::Approx(ref.y * ref.v * std::sin(ref.theta)).epsilon(1e-12));
      for (double se : est.se[t]) CHECK(se == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  TEST_CASE("Monte Carlo random walk second moment") {
    const auto spec = parse_spec(kWalk);
    RolloutOptions opt;
    opt.samples = 1'000'000;
    opt.steps = 1;
    opt.seed = 77;
    McRequest req;
    req.moments = {MultiIndex{1}, MultiIndex{2}};
    const auto est = mc_simulate(spec, spec.disturbance_model(), std::vector<double>{0.5}, req, opt);
    CHECK(est.samples == 1'000'000);
    const std::size_t c = est.column("x^2");
    CHECK(std::abs(est.mean[1][c] - 1.25) <= 5 * est.se[1][c]);
    CHECK(est.se[1][c] > 0.0);
  }

  TEST_CASE("Monte Carlo is bit-reproducible and independent of thread count") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    const auto req = default_request(spec);
    RolloutOptions opt;
    opt.samples = 10'000;
    opt.steps = 15;
    opt.seed = 123;
    opt.threads = 1;
    const std::vector<double> x0{0.0, 0.0, 1.0, 0.0};
    const auto a = mc_simulate(spec, spec.disturbance_model(), x0, req, opt);
    const auto b = mc_simulate(spec, spec.disturbance_model(), x0, req, opt);
    opt.threads = 3;
    const auto c = mc_simulate(spec, spec.disturbance_model(), x0, req, opt);
    CHECK(a.mean == b.mean);
    CHECK(a.se == b.se);
    CHECK(a.mean == c.mean);
    CHECK(a.se == c.se);
    opt.seed = 124;
    CHECK(mc_simulate(spec, spec.disturbance_model(), x0, req, opt).mean != a.mean);
  }

  TEST_CASE("exact propagation lies within Monte Carlo bands on a short Dubins run") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    const auto poly = trig_encode(spec);
    const auto sys = treering(poly, poly.targets, true);
    const Propagator p(sys);
    const std::vector<double> x0{0.0, 0.0, 1.0, 0.0};
    const auto traj = p.propagate(p.init_deterministic(encode_point(spec, x0)), spec.disturbance_model(), 20);
    RolloutOptions opt;
    opt.samples = 50'000;
    opt.steps = 20;
    opt.seed = 9;
    const auto est = mc_simulate(spec, spec.disturbance_model(), x0, default_request(spec, &sys), opt);
    auto exact = exact_table(sys, traj);
    const auto report = compare(exact, mc_table(est));
    CHECK(report.rows.size() > 20 * 20);
    CHECK(report.max_abs_z_exact <= 5.0);
    CHECK(report.flagged_exact == 0);
  }

  TEST_CASE("linearize a linear system") {
    const auto spec = parse_spec("state a b\ndisturbance w\ndyn a' = 2*a - b + w\ndyn b' = 0.25*a + 3*b\n");
    const auto m = linearize(spec, std::vector<double>{0.3, -0.2}, std::vector<double>{0.1});
    Eigen::Matrix2d a;
    a << 1, -1, 0.25, 2;
    CHECK(m.A.isApprox(a));
    CHECK(m.B.rows() == 2);
    CHECK(m.B(0, 0) == 1.0);
    CHECK(m.B(1, 0) == 0.0);
    CHECK(m.c.norm() < 1e-15);
  }

  TEST_CASE("linearize Dubins at heading zero") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    const double dt = 0.5;
    const auto m = linearize(spec, std::vector<double>{0.0, 0.0, 1.0, 0.0}, std::vector<double>{0.0, 0.0}, dt);
    CHECK(m.A(0, 3) == 0.0);
    CHECK(m.A(1, 3) == doctest::Approx(dt));
    CHECK(m.A(0, 2) == doctest::Approx(dt));
    CHECK(m.B(2, 0) == doctest::Approx(dt));
    CHECK(m.B(3, 1) == doctest::Approx(dt));
  }

  TEST_CASE("symbolic Jacobians match central differences") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto f = [](const std::vector<double>& x, double wv, double wt) {
      const auto n = oracle::dubins_step({x[0], x[1], x[2], x[3]}, wv, wt);
      return std::vector<double>{n.x, n.y, n.v, n.theta};
    };
    for (int trial = 0; trial < 50; ++trial) {
      const std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
      const double wv = u(rng) * 0.1, wt = u(rng) * 0.1, dt = 0.25;
      const auto m = linearize(spec, x, std::vector<double>{wv, wt}, dt);
      const double h = 1e-6;
      for (std::size_t j = 0; j < 4; ++j) {
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const auto fp = f(xp, wv, wt), fm = f(xm, wv, wt);
        for (std::size_t i = 0; i < 4; ++i) {
          const double fd = dt * ((fp[i] - fm[i]) / (2 * h) - (i == j ? 1.0 : 0.0));
          CHECK(std::abs(m.A(i, j) - fd) <= 1e-6);
        }
      }
      for (std::size_t j = 0; j < 2; ++j) {
        const double dv = j == 0 ? h : 0.0, dth = j == 1 ? h : 0.0;
        const auto fp = f(x, wv + dv, wt + dth), fm = f(x, wv - dv, wt - dth);
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(m.B(i, j) - dt * (fp[i] - fm[i]) / (2 * h)) <= 1e-6);
      }
      // The affine model reproduces g = f - x exactly at the operating point.
      const auto fx = f(x, wv, wt);
      Eigen::Vector4d xs(x[0], x[1], x[2], x[3]);
      Eigen::Vector2d ws(wv, wt);
      const Eigen::Vector4d g = m.A * xs + m.B * ws + m.c;
      for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(g(i) - dt * (fx[i] - x[i])) <= 1e-12);
    }
  }

  TEST_CASE("linear_propagate recursions") {
    const auto spec = parse_spec(kWalk);
    LinearModel m;
    m.A = Eigen::MatrixXd::Zero(1, 1);
    m.B = Eigen::MatrixXd::Identity(1, 1);
    m.c = Eigen::VectorXd::Zero(1);
    DisturbanceModel model;
    model.set("w", Distribution::gaussian(0.3, 2.0));
    const auto lin = linear_propagate(m, spec, Eigen::VectorXd::Constant(1, 1.0), Eigen::MatrixXd::Constant(1, 1, 0.5),
                                      model, 10);
    REQUIRE(lin.mean.size() == 11);
    CHECK(lin.mean[10](0) == doctest::Approx(1.0 + 3.0));
    CHECK(lin.cov[10](0, 0) == doctest::Approx(0.5 + 20.0));

    DisturbanceModel still;
    still.set("w", Distribution::degenerate(0.0));
    m.c(0) = 0.25;
    const auto flat = linear_propagate(m, spec, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 0.5), still, 4);
    CHECK(flat.cov[4](0, 0) == 0.5);
    CHECK(flat.mean[4](0) == doctest::Approx(1.0));
  }

  TEST_CASE("linearized Dubins covariance stays symmetric PSD") {
    const auto spec = load_spec_file(oracle::preset("dubins.spec"));
    const std::vector<double> x0{0.0, 0.0, 1.0, 0.0};
    const auto model = spec.disturbance_model();
    const auto m = linearize(spec, x0, std::vector<double>{model.distribution("w_v").mean(), model.distribution("w_theta").mean()});
    const auto lin = linear_propagate(m, spec, Eigen::Map<const Eigen::VectorXd>(x0.data(), 4), Eigen::MatrixXd::Zero(4, 4),
                                      model, 100);
    for (const auto& s : lin.cov) {
      CHECK((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, s.norm()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9 * std::max(1.0, s.norm()));
    }
  }

  TEST_CASE("compare on a degenerate walk gives zero z-scores") {
    const auto spec = parse_spec("state x\ndisturbance w\ndyn x' = x + w\ndist w = degenerate(0.5)\nmoments x x^2\n");
    const auto poly = trig_encode(spec);
    const auto sys = treering(poly, poly.targets, true);
    const Propagator p(sys);
    const auto traj = p.propagate(p.init_deterministic(std::vector<double>{1.0}), spec.disturbance_model(), 5);
    RolloutOptions opt;
    opt.samples = 100;
    opt.steps = 5;
    const auto est = mc_simulate(spec, spec.disturbance_model(), std::vector<double>{1.0}, default_request(spec, &sys), opt);
    const auto report = compare(exact_table(sys, traj), mc_table(est));
    CHECK_FALSE(report.rows.empty());
    for (const auto& r : report.rows) CHECK(r.z_exact == 0.0);
    CHECK(report.flagged_exact == 0);

    RolloutOptions shorter = opt;
    shorter.steps = 4;
    const auto est4 = mc_simulate(spec, spec.disturbance_model(), std::vector<double>{1.0}, default_request(spec, &sys), shorter);
    CHECK_THROWS_AS(compare(exact_table(sys, traj), mc_table(est4)), SpecError);
  }

  TEST_CASE("z_score and flags") {
    CHECK(z_score(1.5, 1.0, 0.1) == doctest::Approx(5.0));
    CHECK(std::abs(z_score(1.0, 1.0, 0.0)) == 0.0);
    MomentTable exact, mc, lin;
    exact.columns = {"x"};
    mc.columns = {"x", "se(x)"};
    lin.columns = {"x"};
    exact.times = mc.times = lin.times = {0, 1};
    exact.rows = {{0.0}, {1.0}};
    mc.rows = {{0.0, 0.0}, {1.1, 0.05}};
    lin.rows = {{0.0}, {2.0}};
    const auto report = compare(exact, mc, &lin);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[1].z_exact == doctest::Approx(-2.0));
    CHECK(*report.rows[1].z_linear == doctest::Approx(18.0));
    CHECK(report.flagged_exact == 0);
    CHECK(report.flagged_linear == 1);
    CHECK(report.max_abs_z_linear == doctest::Approx(18.0));
    const auto csv = report.to_csv();
    CHECK(csv.rows.size() == 2);
    CHECK(report.plot_data().rows.size() == 2);
  }

  TEST_CASE("moment tables round-trip through CSV") {
    MomentTable t;
    t.columns = {"x", covariance_name("x", "y")};
    t.times = {0, 1, 2};
    t.rows = {{0.1, 0.0}, {1.0 / 3.0, -2.5e-17}, {1e300, 7.0}};
    const auto back = MomentTable::from_csv(parse_csv(t.to_csv({"note"}).to_string()));
    CHECK(back.columns == t.columns);
    CHECK(back.times == t.times);
    CHECK(back.rows == t.rows);
    CHECK(covariance_name("x", "y") == "cov(x;y)");
  }

  TEST_CASE("add_covariances") {
    MomentTable t;
    t.columns = {"x", "y", "x^2", "x*y", "y^2"};
    t.times = {0};
    t.rows = {{1.0, 2.0, 3.0, 2.5, 5.0}};
    add_covariances(t, {"x", "y"});
    CHECK(t.rows[0][*t.find("cov(x;x)")] == doctest::Approx(2.0));
    CHECK(t.rows[0][*t.find("cov(x;y)")] == doctest::Approx(0.5));
    CHECK(t.rows[0][*t.find("cov(y;y)")] == doctest::Approx(1.0));
  }
}
