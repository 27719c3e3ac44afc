#include <cmath>

#include "momentprop/errors.hpp"
#include "momentprop/oracle.hpp"

namespace momentprop {

LinearModel linearize(const SystemSpec& spec, std::span<const double> x_star, std::span<const double> w_star,
                      double dt) {
  const std::size_t nx = spec.state_vars.size();
  const std::size_t nw = spec.disturbance_vars.size();
  if (x_star.size() != nx || w_star.size() != nw) throw SpecError("operating point has the wrong dimension");

  LinearModel m;
  m.x_star.assign(x_star.begin(), x_star.end());
  m.w_star.assign(w_star.begin(), w_star.end());
  Eigen::MatrixXd jx(nx, nx);
  Eigen::MatrixXd jw(nx, nw);
  Eigen::VectorXd g(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    const Expr& f = spec.updates[i];
    g(static_cast<Eigen::Index>(i)) = f.evaluate(x_star, w_star) - x_star[i];
    for (std::size_t j = 0; j < nx; ++j) {
      double d = f.derivative({Symbol::Kind::State, j}).evaluate(x_star, w_star);
      if (i == j) d -= 1.0;
      jx(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
    }
    for (std::size_t k = 0; k < nw; ++k) {
      jw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          f.derivative({Symbol::Kind::Disturbance, k}).evaluate(x_star, w_star);
    }
  }
  const Eigen::Map<const Eigen::VectorXd> xs(x_star.data(), static_cast<Eigen::Index>(nx));
  const Eigen::Map<const Eigen::VectorXd> ws(w_star.data(), static_cast<Eigen::Index>(nw));
  m.A = dt * jx;
  m.B = dt * jw;
  m.c = dt * (g - jx * xs - jw * ws);
  return m;
}

LinearTrajectory linear_propagate(const LinearModel& m, const SystemSpec& spec, const Eigen::VectorXd& mu0,
                                  const Eigen::MatrixXd& sigma0, const DisturbanceModel& model, std::size_t steps) {
  const auto nx = m.A.rows();
  const auto nw = m.B.cols();
  if (mu0.size() != nx || sigma0.rows() != nx || sigma0.cols() != nx) {
    throw SpecError("initial mean or covariance has the wrong dimension");
  }
  if (static_cast<std::size_t>(nw) != spec.disturbance_vars.size()) throw SpecError("linear model does not match spec");
  if (steps > 0 && model.horizon() < steps) throw PropagationError("shift schedules are shorter than the horizon");

  const Eigen::MatrixXd F = Eigen::MatrixXd::Identity(nx, nx) + m.A;
  Eigen::VectorXd w_var(nw);
  for (Eigen::Index k = 0; k < nw; ++k) {
    w_var(k) = model.distribution(spec.disturbance_vars[static_cast<std::size_t>(k)]).variance();
  }
  const Eigen::MatrixXd noise = m.B * w_var.asDiagonal() * m.B.transpose();

  LinearTrajectory out;
  out.mean.push_back(mu0);
  out.cov.push_back(0.5 * (sigma0 + sigma0.transpose()));
  Eigen::VectorXd w_mean(nw);
  for (std::size_t t = 0; t < steps; ++t) {
    for (Eigen::Index k = 0; k < nw; ++k) {
      const auto& name = spec.disturbance_vars[static_cast<std::size_t>(k)];
      w_mean(k) = model.distribution(name).mean() + model.shift(name, t);
    }
    Eigen::VectorXd mu = F * out.mean.back() + m.B * w_mean + m.c;
    Eigen::MatrixXd sigma = F * out.cov.back() * F.transpose() + noise;
    sigma = 0.5 * (sigma + sigma.transpose());
    out.mean.push_back(std::move(mu));
    out.cov.push_back(std::move(sigma));
  }
  return out;
}

}  // namespace momentprop
