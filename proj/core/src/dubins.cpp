#include "momentprop/dubins.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "momentprop/errors.hpp"

namespace momentprop {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Roundoff allowance for degenerate words, such as a pure turn with a zero straight.
constexpr double kSlack = 1e-10;

double mod2pi(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

using Segment = DubinsPath::Segment;

// Normalized segment lengths (t, p, q) for unit radius, following the standard
// closed forms in terms of alpha, beta and the normalized distance d.
std::optional<std::array<double, 3>> solve(std::array<Segment, 3> type, double alpha, double beta, double d) {
  const double sa = std::sin(alpha), sb = std::sin(beta);
  const double ca = std::cos(alpha), cb = std::cos(beta);
  const double cab = std::cos(alpha - beta);
  const auto is = [&](char a, char b, char c) {
    return type[0] == Segment{a} && type[1] == Segment{b} && type[2] == Segment{c};
  };

  if (is('L', 'S', 'L')) {
    const double p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
    if (p2 < -kSlack) return std::nullopt;
    const double tmp = std::atan2(cb - ca, d + sa - sb);
    return std::array{mod2pi(-alpha + tmp), std::sqrt(std::max(p2, 0.0)), mod2pi(beta - tmp)};
  }
  if (is('R', 'S', 'R')) {
    const double p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
    if (p2 < -kSlack) return std::nullopt;
    const double tmp = std::atan2(ca - cb, d - sa + sb);
    return std::array{mod2pi(alpha - tmp), std::sqrt(std::max(p2, 0.0)), mod2pi(-beta + tmp)};
  }
  if (is('L', 'S', 'R')) {
    const double p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
    if (p2 < -kSlack) return std::nullopt;
    const double p = std::sqrt(std::max(p2, 0.0));
    const double tmp = std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
    return std::array{mod2pi(-alpha + tmp), p, mod2pi(-mod2pi(beta) + tmp)};
  }
  if (is('R', 'S', 'L')) {
    const double p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
    if (p2 < -kSlack) return std::nullopt;
    const double p = std::sqrt(std::max(p2, 0.0));
    const double tmp = std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
    return std::array{mod2pi(alpha - tmp), p, mod2pi(beta - tmp)};
  }
  if (is('R', 'L', 'R')) {
    const double c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
    if (std::abs(c) > 1.0 + kSlack) return std::nullopt;
    const double p = mod2pi(kTwoPi - std::acos(std::clamp(c, -1.0, 1.0)));
    const double t = mod2pi(alpha - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
    return std::array{t, p, mod2pi(alpha - beta - t + p)};
  }
  if (is('L', 'R', 'L')) {
    const double c = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
    if (std::abs(c) > 1.0 + kSlack) return std::nullopt;
    const double p = mod2pi(kTwoPi - std::acos(std::clamp(c, -1.0, 1.0)));
    const double t = mod2pi(-alpha - std::atan2(ca - cb, d + sa - sb) + p / 2.0);
    return std::array{t, p, mod2pi(mod2pi(beta) - alpha - t + p)};
  }
  return std::nullopt;
}

constexpr std::array<std::array<Segment, 3>, 6> kTypes{{
    {Segment::Left, Segment::Straight, Segment::Left},
    {Segment::Right, Segment::Straight, Segment::Right},
    {Segment::Left, Segment::Straight, Segment::Right},
    {Segment::Right, Segment::Straight, Segment::Left},
    {Segment::Right, Segment::Left, Segment::Right},
    {Segment::Left, Segment::Right, Segment::Left},
}};

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a - std::numbers::pi;
}

std::optional<DubinsPath> DubinsPath::of_type(const Pose& from, const Pose& to, double turn_radius,
                                              const std::array<Segment, 3>& type) {
  if (!(turn_radius > 0.0)) throw SpecError("turn radius must be positive");
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  const double d = std::hypot(dx, dy) / turn_radius;
  const double theta = d > 0.0 ? mod2pi(std::atan2(dy, dx)) : 0.0;
  const double alpha = mod2pi(from.heading - theta);
  const double beta = mod2pi(to.heading - theta);
  const auto tpq = solve(type, alpha, beta, d);
  if (!tpq) return std::nullopt;
  DubinsPath path;
  path.start_ = from;
  path.radius_ = turn_radius;
  path.type_ = type;
  for (std::size_t i = 0; i < 3; ++i) path.lengths_[i] = (*tpq)[i] * turn_radius;
  return path;
}

DubinsPath DubinsPath::shortest(const Pose& from, const Pose& to, double turn_radius) {
  if (from.x == to.x && from.y == to.y && wrap_angle(to.heading - from.heading) == 0.0) {
    if (!(turn_radius > 0.0)) throw SpecError("turn radius must be positive");
    DubinsPath path;
    path.start_ = from;
    path.radius_ = turn_radius;
    path.type_ = kTypes[0];
    return path;
  }
  std::optional<DubinsPath> best;
  for (const auto& type : kTypes) {
    auto p = of_type(from, to, turn_radius, type);
    if (p && (!best || p->length() < best->length())) best = std::move(p);
  }
  if (!best) throw Error("no Dubins path between the given poses");
  return *best;
}

Pose DubinsPath::sample(double s) const {
  s = std::clamp(s, 0.0, length());
  Pose p = start_;
  for (std::size_t i = 0; i < 3 && s > 0.0; ++i) {
    const double len = std::min(s, lengths_[i]);
    s -= len;
    switch (type_[i]) {
      case Segment::Straight:
        p.x += len * std::cos(p.heading);
        p.y += len * std::sin(p.heading);
        break;
      case Segment::Left: {
        const double h1 = p.heading + len / radius_;
        p.x += radius_ * (std::sin(h1) - std::sin(p.heading));
        p.y += radius_ * (std::cos(p.heading) - std::cos(h1));
        p.heading = h1;
        break;
      }
      case Segment::Right: {
        const double h1 = p.heading - len / radius_;
        p.x += radius_ * (std::sin(p.heading) - std::sin(h1));
        p.y += radius_ * (std::cos(h1) - std::cos(p.heading));
        p.heading = h1;
        break;
      }
    }
  }
  return p;
}

std::vector<double> discretize(const DubinsPath& path, double speed, double max_length) {
  if (!(speed > 0.0)) throw SpecError("speed must be positive");
  const double total = std::min(path.length(), max_length);
  // Tolerate lengths that are an exact multiple of speed up to roundoff.
  const auto n = static_cast<std::size_t>(std::ceil(total / speed - 1e-9));
  std::vector<double> u;
  if (n == 0) return u;
  u.reserve(n);
  // Step k moves along the heading reached after k controls; aiming it at the
  // tangent at the middle of [k, k+1) * speed makes each move a chord of the path.
  // Step 0 must use the start heading.
  double prev = path.sample(0.0).heading;
  for (std::size_t k = 1; k < n; ++k) {
    const double lo = static_cast<double>(k) * speed;
    const double hi = std::min(total, lo + speed);
    const double h = path.sample(0.5 * (lo + hi)).heading;
    u.push_back(h - prev);
    prev = h;
  }
  u.push_back(path.sample(total).heading - prev);
  return u;
}

std::vector<double> dubins_steer(const Pose& from, const Pose& to, double speed, double turn_radius) {
  if (!(speed > 0.0)) throw SpecError("speed must be positive");
  return discretize(DubinsPath::shortest(from, to, turn_radius), speed);
}

Pose simulate_controls(const Pose& from, double speed, const std::vector<double>& controls) {
  Pose p = from;
  for (double u : controls) {
    p.x += speed * std::cos(p.heading);
    p.y += speed * std::sin(p.heading);
    p.heading += u;
  }
  return p;
}

}  // namespace momentprop
