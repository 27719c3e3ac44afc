#include "momentprop/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "momentprop/errors.hpp"
#include "momentprop/oracle.hpp"

namespace momentprop {

Polytope Polytope::from_vertices(const std::vector<Eigen::Vector2d>& v) {
  const std::size_t n = v.size();
  if (n < 3) throw SpecError("an obstacle needs at least three vertices");
  double area2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = v[i];
    const auto& q = v[(i + 1) % n];
    area2 += p.x() * q.y() - q.x() * p.y();
  }
  if (!(area2 > 0.0)) throw SpecError("obstacle vertices must be listed counterclockwise");
  Polytope poly;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d e = v[(i + 1) % n] - v[i];
    const Eigen::Vector2d next = v[(i + 2) % n] - v[(i + 1) % n];
    if (e.norm() == 0.0) throw SpecError("obstacle has repeated vertices");
    if (e.x() * next.y() - e.y() * next.x() < 0.0) throw SpecError("obstacle is not convex");
    Halfspace h;
    h.a = {e.y(), -e.x()};
    h.b = -h.a.dot(v[i]);
    poly.halfspaces.push_back(h);
  }
  return poly;
}

bool Polytope::contains(const Eigen::Vector2d& p) const {
  return std::all_of(halfspaces.begin(), halfspaces.end(),
                     [&](const Halfspace& h) { return h.a.dot(p) + h.b <= 0.0; });
}

bool Environment::in_collision(double x, double y) const {
  const Eigen::Vector2d p{x, y};
  return std::any_of(obstacles.begin(), obstacles.end(), [&](const Polytope& o) { return o.contains(p); });
}

Environment parse_environment(const std::string& text) {
  Environment env;
  bool have_bounds = false, have_start = false, have_goal = false;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    std::vector<double> nums;
    std::string tok;
    while (ls >> tok) {
      try {
        nums.push_back(parse_double(tok));
      } catch (const SpecError&) {
        throw SpecError("expected a number, got '" + tok + "'", lineno);
      }
    }
    const auto need = [&](std::size_t k) {
      if (nums.size() != k) throw SpecError("'" + kw + "' takes " + std::to_string(k) + " numbers", lineno);
    };
    if (kw == "bounds") {
      need(4);
      env.bounds = {nums[0], nums[1], nums[2], nums[3]};
      if (!(env.bounds.xmin < env.bounds.xmax && env.bounds.ymin < env.bounds.ymax)) {
        throw SpecError("empty workspace bounds", lineno);
      }
      have_bounds = true;
    } else if (kw == "start") {
      need(3);
      env.start = {nums[0], nums[1], nums[2]};
      have_start = true;
    } else if (kw == "goal") {
      need(3);
      env.goal = {nums[0], nums[1]};
      env.goal_radius = nums[2];
      if (!(env.goal_radius > 0.0)) throw SpecError("goal radius must be positive", lineno);
      have_goal = true;
    } else if (kw == "obstacle") {
      if (nums.size() < 6 || nums.size() % 2 != 0) throw SpecError("obstacle takes x y pairs for >= 3 vertices", lineno);
      std::vector<Eigen::Vector2d> verts;
      for (std::size_t i = 0; i < nums.size(); i += 2) verts.emplace_back(nums[i], nums[i + 1]);
      try {
        env.obstacles.push_back(Polytope::from_vertices(verts));
      } catch (const SpecError& e) {
        throw SpecError(e.what(), lineno);
      }
    } else {
      throw SpecError("unknown keyword '" + kw + "'", lineno);
    }
  }
  if (!have_bounds || !have_start || !have_goal) throw SpecError("environment needs bounds, start and goal lines");
  if (env.in_collision(env.start.x, env.start.y)) throw SpecError("start lies inside an obstacle");
  if (!env.bounds.contains(env.start.x, env.start.y)) throw SpecError("start lies outside the workspace");
  return env;
}

Environment load_environment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open environment file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_environment(ss.str());
}

double cantelli_bound(double mean, double variance) {
  if (variance < 0.0 || std::isnan(variance)) throw SpecError("variance must be nonnegative");
  if (mean < 0.0) return 1.0;
  if (variance == 0.0) return 0.0;
  return variance / (variance + mean * mean);
}

double obstacle_risk(const Eigen::Vector2d& mu, const Eigen::Matrix2d& sigma, const Polytope& obs) {
  double best = 1.0;
  for (const auto& h : obs.halfspaces) {
    const double var = std::max(0.0, h.a.dot(sigma * h.a));
    best = std::min(best, cantelli_bound(h.a.dot(mu) + h.b, var));
  }
  return best;
}

double trajectory_risk(const std::vector<MeanCov>& xy, const Environment& env) {
  double total = 0.0;
  for (std::size_t t = 1; t < xy.size(); ++t) {
    for (const auto& obs : env.obstacles) total += obstacle_risk(xy[t].mean, xy[t].cov, obs);
  }
  return total;
}

StochasticSteering::StochasticSteering(const SystemSpec& spec, MomentStateSystem compiled, DisturbanceModel noise,
                                       const PlannerConfig& config)
    : spec_(spec), propagator_(std::move(compiled)), noise_(std::move(noise)), config_(config) {
  if (config_.heading_var.empty()) {
    const auto it = std::find(spec_.is_angle.begin(), spec_.is_angle.end(), true);
    if (it == spec_.is_angle.end()) throw SpecError("the planner needs an angle state for the heading");
    heading_state_ = static_cast<std::size_t>(it - spec_.is_angle.begin());
  } else {
    heading_state_ = spec_.state_index(config_.heading_var);
    if (!spec_.is_angle[heading_state_]) throw SpecError("'" + config_.heading_var + "' is not an angle");
  }
  const auto& incs = spec_.angle_increments[heading_state_];
  if (config_.heading_noise.empty()) {
    if (incs.empty()) throw SpecError("heading update has no disturbance to carry the controls");
    heading_noise_ = spec_.disturbance_vars[incs.front().disturbance];
  } else {
    heading_noise_ = config_.heading_noise;
    const auto k = spec_.disturbance_index(heading_noise_);
    if (std::none_of(incs.begin(), incs.end(), [&](const AngleIncrement& a) { return a.disturbance == k; })) {
      throw SpecError("'" + heading_noise_ + "' does not enter the heading update");
    }
  }
  for (const auto& w : spec_.disturbance_vars) {
    if (!noise_.contains(w)) throw SpecError("no distribution for disturbance '" + w + "'");
  }
  spec_.state_index(config_.x_var);
  spec_.state_index(config_.y_var);

  const auto& sys = propagator_.system();
  const auto unit = [&](const std::string& name) {
    const auto it = std::find(sys.vars.begin(), sys.vars.end(), name);
    if (it == sys.vars.end()) throw SpecError("compiled system lacks variable '" + name + "'");
    const auto idx = sys.basis.index_of(MultiIndex::unit(sys.vars.size(), static_cast<std::size_t>(it - sys.vars.begin())));
    if (!idx) throw SpecError("compiled basis lacks E[" + name + "]");
    return *idx;
  };
  ix_ = unit(config_.x_var);
  iy_ = unit(config_.y_var);
  ic_ = unit(spec_.angle_names[heading_state_].first);
  is_ = unit(spec_.angle_names[heading_state_].second);
  mean_cov(sys, MomentTrajectory{}, config_.x_var, config_.y_var);  // throws when (x, y) second moments are missing
}

std::vector<double> StochasticSteering::initial_point(const Pose& pose) const {
  std::vector<double> x(spec_.state_vars.size(), 0.0);
  x[spec_.state_index(config_.x_var)] = pose.x;
  x[spec_.state_index(config_.y_var)] = pose.y;
  x[heading_state_] = pose.heading;
  const auto sv = std::find(spec_.state_vars.begin(), spec_.state_vars.end(), config_.speed_var);
  if (sv != spec_.state_vars.end()) x[static_cast<std::size_t>(sv - spec_.state_vars.begin())] = config_.speed;
  return x;
}

MomentState StochasticSteering::initial_state(const Pose& pose) const {
  return propagator_.init_deterministic(encode_point(spec_, initial_point(pose)));
}

DisturbanceModel StochasticSteering::shifted(const std::vector<double>& controls) const {
  DisturbanceModel model = noise_;
  int sign = 1;
  const auto k = spec_.disturbance_index(heading_noise_);
  for (const auto& inc : spec_.angle_increments[heading_state_]) {
    if (inc.disturbance == k) {
      sign = inc.sign;
      break;
    }
  }
  std::vector<double> shifts(controls);
  if (sign < 0) {
    for (double& s : shifts) s = -s;
  }
  model.set_shifts(heading_noise_, std::move(shifts));
  return model;
}

MomentTrajectory StochasticSteering::steer(const MomentState& init, const std::vector<double>& controls) const {
  MomentState start = init;
  start.time = 0;
  return propagator_.propagate(start, shifted(controls), controls.size());
}

std::vector<MeanCov> StochasticSteering::position(const MomentTrajectory& traj) const {
  return mean_cov(propagator_.system(), traj, config_.x_var, config_.y_var);
}

Pose StochasticSteering::mean_pose(const MomentState& state) const {
  return {state.values[ix_], state.values[iy_], std::atan2(state.values[is_], state.values[ic_])};
}

std::vector<double> PlanResult::controls() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto& u = tree[path[i]].edge_controls;
    out.insert(out.end(), u.begin(), u.end());
  }
  return out;
}

CsvDocument PlanResult::path_csv(std::vector<std::string> comments) const {
  CsvDocument doc;
  doc.comments = std::move(comments);
  doc.header = {"node", "parent", "step", "x", "y", "heading", "cov_xx", "cov_xy", "cov_yy", "risk_to_node"};
  for (std::size_t id : path) {
    const auto& n = tree[id];
    doc.rows.push_back({std::to_string(id), n.parent ? std::to_string(*n.parent) : "", std::to_string(n.steps_to_node),
                        format_double(n.mean.x()), format_double(n.mean.y()), format_double(n.pose.heading),
                        format_double(n.cov(0, 0)), format_double(n.cov(0, 1)), format_double(n.cov(1, 1)),
                        format_double(n.risk_to_node)});
  }
  return doc;
}

CsvDocument PlanResult::tree_csv() const {
  CsvDocument doc;
  doc.header = {"node", "parent", "x0", "y0", "x1", "y1", "risk_to_node"};
  for (std::size_t id = 0; id < tree.size(); ++id) {
    const auto& n = tree[id];
    if (!n.parent) continue;
    const auto& p = tree[*n.parent];
    doc.rows.push_back({std::to_string(id), std::to_string(*n.parent), format_double(p.mean.x()),
                        format_double(p.mean.y()), format_double(n.mean.x()), format_double(n.mean.y()),
                        format_double(n.risk_to_node)});
  }
  return doc;
}

PlanResult build_rrt(const Environment& env, const StochasticSteering& steering, double eps,
                     const PlannerConfig& config, std::uint64_t seed) {
  if (!(eps > 0.0 && eps < 1.0)) throw SpecError("chance constraint must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(env.bounds.xmin, env.bounds.xmax);
  std::uniform_real_distribution<double> uy(env.bounds.ymin, env.bounds.ymax);
  std::uniform_real_distribution<double> uh(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  PlanResult result;
  TreeNode root;
  root.pose = env.start;
  root.moments = steering.initial_state(env.start);
  root.mean = {env.start.x, env.start.y};
  result.tree.push_back(std::move(root));

  const auto in_goal = [&](const Eigen::Vector2d& p) { return (p - env.goal).norm() <= env.goal_radius; };

  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    result.iterations = iter + 1;
    Pose target;
    if (u01(rng) < config.goal_bias) {
      target = {env.goal.x(), env.goal.y(), uh(rng)};
    } else {
      const double x = ux(rng);
      const double y = uy(rng);
      target = {x, y, uh(rng)};
    }

    std::size_t near = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < result.tree.size(); ++i) {
      const Pose& p = result.tree[i].pose;
      const double d = std::hypot(p.x - target.x, p.y - target.y) +
                       config.turn_radius * std::abs(wrap_angle(p.heading - target.heading));
      if (d < best) {
        best = d;
        near = i;
      }
    }
    const TreeNode& parent = result.tree[near];
    const auto path = DubinsPath::shortest(parent.pose, target, config.turn_radius);
    auto controls = discretize(path, config.speed, config.max_edge_length);
    if (controls.empty()) continue;

    MomentTrajectory traj;
    try {
      traj = steering.steer(parent.moments, controls);
    } catch (const PropagationError&) {
      continue;
    }
    const auto xy = steering.position(traj);
    const bool inside = std::all_of(xy.begin() + 1, xy.end(),
                                    [&](const MeanCov& m) { return env.bounds.contains(m.mean.x(), m.mean.y()); });
    if (!inside) continue;
    const double risk = parent.risk_to_node + trajectory_risk(xy, env);
    if (!(risk < eps)) continue;

    TreeNode node;
    node.moments = traj.states.back();
    node.moments.time = 0;
    node.pose = steering.mean_pose(node.moments);
    node.mean = xy.back().mean;
    node.cov = xy.back().cov;
    node.risk_to_node = risk;
    node.parent = near;
    node.steps_to_node = parent.steps_to_node + controls.size();
    node.edge_controls = std::move(controls);
    result.tree.push_back(std::move(node));

    const std::size_t id = result.tree.size() - 1;
    if (in_goal(result.tree[id].mean)) {
      if (!result.goal_node || result.tree[id].risk_to_node < result.tree[*result.goal_node].risk_to_node) {
        result.goal_node = id;
      }
      if (config.stop_at_goal) break;
    }
  }

  if (result.goal_node) {
    for (std::optional<std::size_t> id = result.goal_node; id; id = result.tree[*id].parent) result.path.push_back(*id);
    std::reverse(result.path.begin(), result.path.end());
  }
  return result;
}

}  // namespace momentprop
