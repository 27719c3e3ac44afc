#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "momentprop/compiler.hpp"
#include "momentprop/distmoments.hpp"

namespace momentprop {

/// Values of every basis moment at one step, in basis order.
struct MomentState {
  std::vector<double> values;
  std::size_t time = 0;
};

struct MomentTrajectory {
  std::vector<MomentState> states;  // time 0..T

  std::size_t horizon() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Flattened, floating-point form of a compiled system used by the inner loop.
/// Coefficients are converted from exact rationals once, at construction.
class Propagator {
 public:
  explicit Propagator(MomentStateSystem system);

  const MomentStateSystem& system() const noexcept { return system_; }
  std::size_t dimension() const noexcept { return system_.basis.size(); }

  /// Point-mass moments x0^alpha. `x0` is given per encoded state variable.
  /// Angle pairs must satisfy c^2 + s^2 = 1 within 1e-9.
  MomentState init_deterministic(std::span<const double> x0) const;

  /// Values of system.dist_requirements at step t.
  void disturbance_moments(const DisturbanceModel& model, std::size_t t, std::vector<double>& out) const;

  /// One application of the moment update forms, with disturbance moments already resolved.
  /// No finiteness check or subnormal flush; step and propagate add both.
  void apply(std::span<const double> current, std::span<const double> dist, std::span<double> next) const;

  MomentState step(const MomentState& state, const DisturbanceModel& model) const;

  /// T steps; throws PropagationError naming the step and moment on a non-finite value.
  MomentTrajectory propagate(const MomentState& init, const DisturbanceModel& model, std::size_t steps) const;

  /// Final state after `steps` steps of a stationary model, by repeated squaring of
  /// the affine step map. Only for un-reduced systems.
  MomentState propagate_stationary(const MomentState& init, const DisturbanceModel& model,
                                   std::size_t steps) const;

 private:
  /// Non-finite check and flush of subnormal values to zero.
  void finish(std::vector<double>& values, std::size_t time) const;

  struct DistFactor {
    std::string source;
    unsigned raw = 0, cos = 0, sin = 0;
  };

  MomentStateSystem system_;
  std::vector<std::vector<DistFactor>> dist_factors_;  // per dist requirement
  // Terms of form i live in [term_begin_[i], term_begin_[i + 1]).
  std::vector<std::size_t> term_begin_;
  std::vector<double> coeff_;
  std::vector<std::uint32_t> dist_slot_;
  std::vector<std::size_t> factor_begin_;  // per term, into factor_index_; size terms + 1
  std::vector<std::uint32_t> factor_index_;
};

/// Mean vector and covariance of a pair of state variables at every step.
struct MeanCov {
  Eigen::Vector2d mean;
  Eigen::Matrix2d cov;
};
std::vector<MeanCov> mean_cov(const MomentStateSystem& system, const MomentTrajectory& traj,
                              const std::string& first, const std::string& second);

/// CSV with header `t,<moment>...`, one row per step.
std::string trajectory_csv(const MomentStateSystem& system, const MomentTrajectory& traj,
                           const std::vector<std::string>& comments = {});

}  // namespace momentprop
