#pragma once

#include <array>
#include <limits>
#include <optional>
#include <vector>

namespace momentprop {

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad
};

/// Shortest bounded-curvature path made of three segments, each a left arc (L),
/// straight line (S) or right arc (R).
class DubinsPath {
 public:
  enum class Segment : char { Left = 'L', Straight = 'S', Right = 'R' };

  static DubinsPath shortest(const Pose& from, const Pose& to, double turn_radius);
  /// The path of one named type such as "LSR", if it exists.
  static std::optional<DubinsPath> of_type(const Pose& from, const Pose& to, double turn_radius,
                                           const std::array<Segment, 3>& type);

  double length() const noexcept { return lengths_[0] + lengths_[1] + lengths_[2]; }
  const std::array<Segment, 3>& type() const noexcept { return type_; }
  const std::array<double, 3>& segment_lengths() const noexcept { return lengths_; }
  double turn_radius() const noexcept { return radius_; }

  /// Pose at arc length s, clamped to [0, length()].
  Pose sample(double s) const;

 private:
  Pose start_;
  double radius_ = 1.0;
  std::array<Segment, 3> type_{};
  std::array<double, 3> lengths_{};  // metres
};

/// Heading increments that track `path` at `speed` metres per step, one per step,
/// over ceil(L / speed) steps where L = min(length, max_length). Step k >= 1 heads
/// along the chord of the k-th arc-length interval and the last control restores
/// the path heading at L. |u| <= speed / turn_radius except the first control,
/// which may reach 1.5 speed / turn_radius when the path starts on an arc.
std::vector<double> discretize(const DubinsPath& path, double speed,
                               double max_length = std::numeric_limits<double>::infinity());

std::vector<double> dubins_steer(const Pose& from, const Pose& to, double speed, double turn_radius);

/// Deterministic unicycle rollout x += v cos(h), y += v sin(h), h += u.
Pose simulate_controls(const Pose& from, double speed, const std::vector<double>& controls);

double wrap_angle(double a);

}  // namespace momentprop
