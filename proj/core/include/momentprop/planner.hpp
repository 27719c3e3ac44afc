#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "momentprop/compiler.hpp"
#include "momentprop/csv.hpp"
#include "momentprop/distmoments.hpp"
#include "momentprop/dubins.hpp"
#include "momentprop/propagator.hpp"
#include "momentprop/sysspec.hpp"

namespace momentprop {

/// Intersection of halfspaces a^T p + b <= 0.
struct Halfspace {
  Eigen::Vector2d a;
  double b = 0.0;
};

struct Polytope {
  std::vector<Halfspace> halfspaces;

  /// From a counterclockwise convex vertex list. Throws SpecError otherwise.
  static Polytope from_vertices(const std::vector<Eigen::Vector2d>& vertices);
  bool contains(const Eigen::Vector2d& p) const;
};

struct Box {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  bool contains(double x, double y) const { return x >= xmin && x <= xmax && y >= ymin && y <= ymax; }
};

struct Environment {
  Box bounds;
  Pose start;
  Eigen::Vector2d goal{0.0, 0.0};
  double goal_radius = 0.0;
  std::vector<Polytope> obstacles;

  bool in_collision(double x, double y) const;
};

/// Line format: `bounds xmin ymin xmax ymax`, `start x y heading`, `goal x y radius`,
/// `obstacle x1 y1 x2 y2 ...` (counterclockwise). '#' starts a comment.
Environment parse_environment(const std::string& text);
Environment load_environment(const std::string& path);

/// One-sided bound on P(g <= 0) for E[g] = mean, Var[g] = variance.
double cantelli_bound(double mean, double variance);
double obstacle_risk(const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma, const Polytope& obs);
/// Sum over steps 1..T and obstacles of obstacle_risk. `xy` holds per-step mean/cov of position.
double trajectory_risk(const std::vector<MeanCov>& xy, const Environment& env);

struct PlannerConfig {
  double speed = 0.25;           // metres per step
  double turn_radius = 1.0;      // metres
  double max_edge_length = 2.0;  // metres of Dubins path per extension
  double goal_bias = 0.05;
  std::size_t iterations = 2000;
  bool stop_at_goal = true;
  std::string x_var = "x";
  std::string y_var = "y";
  std::string speed_var = "v";  // initialised to `speed` when present
  std::string heading_var;      // angle state; first angle when empty
  std::string heading_noise;    // disturbance shifted by the controls; from the angle update when empty
};

struct TreeNode {
  Pose pose;  // mean pose on arrival
  MomentState moments;
  Eigen::Vector2d mean{0.0, 0.0};
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  double risk_to_node = 0.0;
  std::optional<std::size_t> parent;
  std::vector<double> edge_controls;
  std::size_t steps_to_node = 0;
};

struct PlanResult {
  std::vector<TreeNode> tree;
  std::optional<std::size_t> goal_node;
  std::vector<std::size_t> path;  // root ... goal
  std::size_t iterations = 0;

  bool found() const noexcept { return goal_node.has_value(); }
  /// Controls of the whole path, one per step.
  std::vector<double> controls() const;
  CsvDocument path_csv(std::vector<std::string> comments = {}) const;
  CsvDocument tree_csv() const;
};

/// Binds a compiled Dubins-like system to the planner's variable roles.
class StochasticSteering {
 public:
  StochasticSteering(const SystemSpec& spec, MomentStateSystem compiled, DisturbanceModel noise,
                     const PlannerConfig& config);

  const Propagator& propagator() const noexcept { return propagator_; }
  const std::string& heading_noise() const noexcept { return heading_noise_; }
  /// Point-mass moment state at `pose`, other states at zero except speed.
  MomentState initial_state(const Pose& pose) const;
  /// Original-variable state for `pose`: position, heading, speed, zeros elsewhere.
  std::vector<double> initial_point(const Pose& pose) const;
  /// Moment trajectory from `init` with controls added to the heading disturbance.
  MomentTrajectory steer(const MomentState& init, const std::vector<double>& controls) const;
  std::vector<MeanCov> position(const MomentTrajectory& traj) const;
  Pose mean_pose(const MomentState& state) const;
  /// The noise model with `controls` as heading shifts.
  DisturbanceModel shifted(const std::vector<double>& controls) const;

 private:
  SystemSpec spec_;
  Propagator propagator_;
  DisturbanceModel noise_;
  PlannerConfig config_;
  std::string heading_noise_;
  std::size_t heading_state_ = 0;
  std::size_t ix_ = 0, iy_ = 0, ic_ = 0, is_ = 0;
};

/// Risk-bounded RRT; accepts an edge when the accumulated bound stays below eps.
PlanResult build_rrt(const Environment& env, const StochasticSteering& steering, double eps,
                     const PlannerConfig& config, std::uint64_t seed);

}  // namespace momentprop
