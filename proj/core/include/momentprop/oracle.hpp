#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "momentprop/compiler.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/distmoments.hpp"
#include "momentprop/propagator.hpp"
#include "momentprop/sysspec.hpp"

namespace momentprop {

/// Draws one value of `dist` (plus nothing else; shifts are applied by the caller).
/// Beta uses the ratio of two gamma draws.
template <class Rng>
double sample(const Distribution& dist, Rng& rng);

/// Encoded state values (angles replaced by cos, sin) of an original state point.
std::vector<double> encode_point(const SystemSpec& spec, std::span<const double> x);

/// A block of samples at one step. Arrays are indexed [variable][sample].
struct SampleBlock {
  std::size_t count = 0;
  std::vector<std::vector<double>> state;    // original state variables
  std::vector<std::vector<double>> encoded;  // encoded state variables
};

struct RolloutOptions {
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::size_t batch_size = 4096;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Called once per (batch, step), t = 0..steps, from worker threads. Batches are
/// independent; a visitor should only write to storage owned by `batch`.
using BatchVisitor = std::function<void(std::size_t batch, std::size_t t, const SampleBlock& block)>;

std::size_t batch_count(const RolloutOptions& options);

/// Simulates the original (trigonometric) system from the point `x0`. Batch b uses
/// its own generator seeded from (seed, b), so output does not depend on threading.
void rollout(const SystemSpec& spec, const DisturbanceModel& model, std::span<const double> x0,
             const RolloutOptions& options, const BatchVisitor& visit);

/// Per-step sample means and standard errors of raw moments and covariances.
struct McEstimate {
  std::vector<std::string> columns;  // moment monomials, then cov(a;b)
  std::size_t samples = 0;
  std::vector<std::vector<double>> mean;  // [t][column]
  std::vector<std::vector<double>> se;    // [t][column]

  std::size_t steps() const noexcept { return mean.empty() ? 0 : mean.size() - 1; }
  std::size_t column(const std::string& name) const;
};

struct McRequest {
  std::vector<MultiIndex> moments;                          // over encoded state names
  std::vector<std::pair<std::size_t, std::size_t>> covariances;  // encoded state index pairs
};

McEstimate mc_simulate(const SystemSpec& spec, const DisturbanceModel& model, std::span<const double> x0,
                       const McRequest& request, const RolloutOptions& options);

/// First and second moment columns for every encoded variable and pair.
McRequest default_request(const SystemSpec& spec, const MomentStateSystem* system = nullptr);

std::string covariance_name(const std::string& a, const std::string& b);

/// x_{t+1} = (I + A) x_t + B w_t + c over the original state variables.
struct LinearModel {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd c;
  std::vector<double> x_star;
  std::vector<double> w_star;
};

/// Jacobians of f - x at (x*, w*), scaled by dt.
LinearModel linearize(const SystemSpec& spec, std::span<const double> x_star, std::span<const double> w_star,
                      double dt = 1.0);

struct LinearTrajectory {
  std::vector<Eigen::VectorXd> mean;
  std::vector<Eigen::MatrixXd> cov;
};

/// Affine mean and covariance recursion; disturbances use their mean (plus shift)
/// and variance at each step, and are treated as uncorrelated.
LinearTrajectory linear_propagate(const LinearModel& m, const SystemSpec& spec, const Eigen::VectorXd& mu0,
                                  const Eigen::MatrixXd& sigma0, const DisturbanceModel& model, std::size_t steps);

/// Named per-step columns, the common currency of compare.
struct MomentTable {
  std::vector<std::string> columns;
  std::vector<std::size_t> times;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> find(const std::string& name) const;
  CsvDocument to_csv(std::vector<std::string> comments = {}) const;
  static MomentTable from_csv(const CsvDocument& doc);
};

/// Raw moments of the basis plus cov(a;b) for every pair the basis supports.
MomentTable exact_table(const MomentStateSystem& system, const MomentTrajectory& traj);
/// Adds cov(a;b) columns derivable from raw moment columns named over `vars`.
void add_covariances(MomentTable& table, const std::vector<std::string>& vars);
/// Columns `name` and `se(name)` per estimate column.
MomentTable mc_table(const McEstimate& est);
/// Means named after the state variables plus cov(a;b) for every pair.
MomentTable linear_table(const SystemSpec& spec, const LinearTrajectory& lin);

struct CompareRow {
  std::size_t t = 0;
  std::string moment;
  double exact = 0.0;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  std::optional<double> linear;
  double z_exact = 0.0;
  std::optional<double> z_linear;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  double threshold = 5.0;
  double max_abs_z_exact = 0.0;
  double max_abs_z_linear = 0.0;
  std::size_t flagged_exact = 0;
  std::size_t flagged_linear = 0;

  CsvDocument to_csv() const;
  /// Wide per-moment series (exact, mc, mc_se, linear) for plotting.
  CsvDocument plot_data() const;
};

/// z-score of `value` against an MC mean with standard error `se`.
double z_score(double value, double mc_mean, double se);

/// Compares every column present in both `exact` and `mc` (which must carry se(...)).
/// Throws SpecError when the time columns differ.
CompareReport compare(const MomentTable& exact, const MomentTable& mc, const MomentTable* linear = nullptr,
                      double threshold = 5.0);

}  // namespace momentprop

#include "momentprop/detail/sample.hpp"
