#include "momentprop/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"

namespace momentprop {

Propagator::Propagator(MomentStateSystem system) : system_(std::move(system)) {
  std::unordered_map<MultiIndex, std::uint32_t, MultiIndexHash> dist_pos;
  for (std::size_t k = 0; k < system_.dist_requirements.size(); ++k) {
    const auto& beta = system_.dist_requirements[k];
    dist_pos[beta] = static_cast<std::uint32_t>(k);
    std::map<std::string, DistFactor> per_source;
    for (std::size_t i = 0; i < beta.size(); ++i) {
      if (beta[i] == 0) continue;
      const auto& link = system_.dist_links.at(i);
      auto& f = per_source[link.source];
      f.source = link.source;
      switch (link.role) {
        case DisturbanceLink::Role::Raw:
          f.raw += beta[i];
          break;
        case DisturbanceLink::Role::Cos:
          f.cos += beta[i];
          break;
        case DisturbanceLink::Role::Sin:
          f.sin += beta[i];
          break;
      }
    }
    std::vector<DistFactor> factors;
    for (auto& [name, f] : per_source) {
      if (f.raw > 0 && f.cos + f.sin > 0) {
        throw UnsupportedError("disturbance '" + name + "' is used both polynomially and trigonometrically");
      }
      factors.push_back(f);
    }
    dist_factors_.push_back(std::move(factors));
  }

  term_begin_.push_back(0);
  factor_begin_.push_back(0);
  for (const auto& form : system_.forms) {
    for (const auto& term : form.terms) {
      coeff_.push_back(term.coeff.get_d());
      dist_slot_.push_back(dist_pos.at(term.dist_index));
      for (const auto& f : term.state_factors) {
        const auto idx = system_.basis.index_of(f);
        if (!idx) throw SpecError("compiled system is not complete: missing " + f.monomial(system_.vars));
        factor_index_.push_back(static_cast<std::uint32_t>(*idx));
      }
      factor_begin_.push_back(factor_index_.size());
    }
    term_begin_.push_back(coeff_.size());
  }
}

MomentState Propagator::init_deterministic(std::span<const double> x0) const {
  if (x0.size() != system_.vars.size()) {
    throw SpecError("initial state needs " + std::to_string(system_.vars.size()) + " values");
  }
  for (const auto& pair : system_.angle_pairs) {
    const double c = x0[pair.cos_index];
    const double s = x0[pair.sin_index];
    if (std::abs(c * c + s * s - 1.0) > 1e-9) {
      throw SpecError("initial (" + system_.vars[pair.cos_index] + ", " + system_.vars[pair.sin_index] +
                      ") is not on the unit circle");
    }
  }
  MomentState state;
  state.values.reserve(dimension());
  for (const auto& alpha : system_.basis) state.values.push_back(monomial_value(alpha, x0));
  return state;
}

void Propagator::disturbance_moments(const DisturbanceModel& model, std::size_t t, std::vector<double>& out) const {
  out.resize(dist_factors_.size());
  for (std::size_t k = 0; k < dist_factors_.size(); ++k) {
    double v = 1.0;
    for (const auto& f : dist_factors_[k]) {
      v *= f.raw > 0 ? model.raw(f.source, t, f.raw) : model.trig(f.source, t, f.cos, f.sin);
    }
    out[k] = v;
  }
}

void Propagator::apply(std::span<const double> current, std::span<const double> dist, std::span<double> next) const {
  const std::size_t n = dimension();
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t k = term_begin_[i]; k < term_begin_[i + 1]; ++k) {
      double v = coeff_[k] * dist[dist_slot_[k]];
      for (std::size_t f = factor_begin_[k]; f < factor_begin_[k + 1]; ++f) v *= current[factor_index_[f]];
      sum += v;
    }
    next[i] = sum;
  }
}

void Propagator::finish(std::vector<double>& values, std::size_t time) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    double& v = values[i];
    if (!std::isfinite(v)) {
      throw PropagationError("moment E[" + system_.moment_name(i) + "] became non-finite at step " +
                             std::to_string(time));
    }
    // Subnormals carry no useful information here and are very slow to multiply.
    if (std::abs(v) < std::numeric_limits<double>::min()) v = 0.0;
  }
}

MomentState Propagator::step(const MomentState& state, const DisturbanceModel& model) const {
  std::vector<double> dist;
  disturbance_moments(model, state.time, dist);
  MomentState out;
  out.time = state.time + 1;
  out.values.resize(dimension());
  apply(state.values, dist, out.values);
  finish(out.values, out.time);
  return out;
}

MomentTrajectory Propagator::propagate(const MomentState& init, const DisturbanceModel& model,
                                       std::size_t steps) const {
  if (init.values.size() != dimension()) throw SpecError("initial moment state has the wrong dimension");
  if (steps > 0 && model.horizon() < init.time + steps) {
    throw PropagationError("shift schedules cover " + std::to_string(model.horizon()) + " steps; " +
                           std::to_string(init.time + steps) + " needed");
  }
  MomentTrajectory traj;
  traj.states.reserve(steps + 1);
  traj.states.push_back(init);

  const bool stationary = model.stationary();
  std::vector<double> dist;
  for (std::size_t k = 0; k < steps; ++k) {
    const MomentState& cur = traj.states.back();
    if (k == 0 || !stationary) disturbance_moments(model, cur.time, dist);
    MomentState next;
    next.time = cur.time + 1;
    next.values.resize(dimension());
    apply(cur.values, dist, next.values);
    finish(next.values, next.time);
    traj.states.push_back(std::move(next));
  }
  return traj;
}

MomentState Propagator::propagate_stationary(const MomentState& init, const DisturbanceModel& model,
                                             std::size_t steps) const {
  if (system_.reduced) throw SpecError("repeated squaring needs an un-reduced (affine) system");
  if (!model.stationary()) throw SpecError("repeated squaring needs a stationary disturbance model");
  std::vector<double> dist;
  disturbance_moments(model, init.time, dist);
  const AffineStep step = ltv_matrices(system_, dist);
  const auto n = static_cast<Eigen::Index>(dimension());

  // Homogeneous form [[A, b], [0, 1]].
  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(n + 1, n + 1);
  base.topLeftCorner(n, n) = step.A;
  base.topRightCorner(n, 1) = step.b;
  base(n, n) = 1.0;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n + 1, n + 1);
  for (std::size_t k = steps; k > 0; k >>= 1U) {
    if (k & 1U) acc = base * acc;
    if (k > 1) base = base * base;
  }
  Eigen::VectorXd m(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) m(i) = init.values[static_cast<std::size_t>(i)];
  m(n) = 1.0;
  const Eigen::VectorXd out = acc * m;

  MomentState state;
  state.time = init.time + steps;
  state.values.assign(out.data(), out.data() + n);
  finish(state.values, state.time);
  return state;
}

std::vector<MeanCov> mean_cov(const MomentStateSystem& system, const MomentTrajectory& traj,
                              const std::string& first, const std::string& second) {
  const auto var_index = [&](const std::string& n) {
    for (std::size_t i = 0; i < system.vars.size(); ++i) {
      if (system.vars[i] == n) return i;
    }
    throw SpecError("unknown state variable '" + n + "'");
  };
  const std::size_t a = var_index(first);
  const std::size_t b = var_index(second);
  const std::size_t nx = system.vars.size();
  const auto slot = [&](MultiIndex m) {
    const auto idx = system.basis.index_of(m);
    if (!idx) throw SpecError("basis lacks E[" + m.monomial(system.vars) + "] needed for mean/covariance");
    return *idx;
  };
  const std::size_t ia = slot(MultiIndex::unit(nx, a));
  const std::size_t ib = slot(MultiIndex::unit(nx, b));
  const std::size_t iaa = slot(MultiIndex::unit(nx, a, 2));
  const std::size_t ibb = slot(MultiIndex::unit(nx, b, 2));
  const std::size_t iab = slot(MultiIndex::unit(nx, a) + MultiIndex::unit(nx, b));

  std::vector<MeanCov> out;
  out.reserve(traj.states.size());
  for (const auto& s : traj.states) {
    const auto& v = s.values;
    MeanCov mc;
    mc.mean = {v[ia], v[ib]};
    const double cab = v[iab] - v[ia] * v[ib];
    mc.cov << v[iaa] - v[ia] * v[ia], cab, cab, v[ibb] - v[ib] * v[ib];
    out.push_back(mc);
  }
  return out;
}

std::string trajectory_csv(const MomentStateSystem& system, const MomentTrajectory& traj,
                           const std::vector<std::string>& comments) {
  CsvDocument doc;
  doc.comments = comments;
  doc.header.push_back("t");
  for (std::size_t i = 0; i < system.basis.size(); ++i) doc.header.push_back(system.moment_name(i));
  for (const auto& s : traj.states) {
    std::vector<std::string> row{std::to_string(s.time)};
    for (double v : s.values) row.push_back(format_double(v));
    doc.rows.push_back(std::move(row));
  }
  return doc.to_string();
}

}  // namespace momentprop
