#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <gmpxx.h>

#include "momentprop/multi_index.hpp"

namespace momentprop {

struct Degenerate {
  double value = 0.0;
};
struct Gaussian {
  double mean = 0.0;
  double variance = 1.0;
};
struct Uniform {
  double lower = 0.0;
  double upper = 1.0;
};
struct BetaDist {
  double a = 1.0;
  double b = 1.0;
};

/// Scalar disturbance distribution. Parameters are validated on construction.
class Distribution {
 public:
  using Kind = std::variant<Degenerate, Gaussian, Uniform, BetaDist>;

  Distribution() : kind_(Degenerate{}) {}

  static Distribution degenerate(double value);
  static Distribution gaussian(double mean, double variance);
  static Distribution uniform(double lower, double upper);
  static Distribution beta(double a, double b);

  const Kind& kind() const noexcept { return kind_; }
  double mean() const;
  double variance() const;
  std::string to_string() const;

  friend bool operator==(const Distribution& a, const Distribution& b);

 private:
  explicit Distribution(Kind k) : kind_(k) {}
  Kind kind_;
};

/// Characteristic function of (X + shift) at integer argument t.
/// Throws UnsupportedError for beta.
std::complex<double> char_fn(const Distribution& dist, double shift, int t);

/// Exact Laurent expansion of cos^m(x) sin^n(x) in z = e^{ix}:
/// value = unit * sum_k coeffs[k] z^(k - degree) / 2^(m+n), where unit = i^(-n).
struct TrigLaurent {
  unsigned degree = 0;             // m + n
  std::vector<mpz_class> coeffs;   // index k <-> power k - degree
  std::complex<double> unit{1.0, 0.0};
};
TrigLaurent trig_laurent(unsigned m, unsigned n);

/// E[cos^m(X + shift) sin^n(X + shift)] through the characteristic function.
/// Throws UnsupportedError for beta.
double trig_moment(const Distribution& dist, double shift, unsigned m, unsigned n);

/// E[(X + shift)^k] in closed form.
double raw_moment(const Distribution& dist, double shift, unsigned k);

/// How an encoded disturbance variable relates to a declared disturbance.
struct DisturbanceLink {
  enum class Role : std::uint8_t { Raw, Cos, Sin };
  std::string source;
  Role role = Role::Raw;

  friend bool operator==(const DisturbanceLink&, const DisturbanceLink&) = default;
};

const char* role_name(DisturbanceLink::Role role);

class MomentCache;

/// Per-disturbance distributions plus per-step additive shifts (control offsets).
/// Disturbances are mutually independent and independent across time.
class DisturbanceModel {
 public:
  DisturbanceModel();

  void set(const std::string& name, Distribution dist, std::vector<double> shifts = {});
  void set_shifts(const std::string& name, std::vector<double> shifts);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Distribution& distribution(const std::string& name) const;
  const std::vector<double>& shifts(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Shift of `name` at step t; zero when no schedule was given.
  /// Throws PropagationError if a schedule exists but is shorter than t + 1.
  double shift(const std::string& name, std::size_t t) const;

  /// Shortest non-empty schedule length, or SIZE_MAX when every schedule is empty.
  std::size_t horizon() const;

  /// True when no schedule changes value over time.
  bool stationary() const;

  /// Memoized raw or trigonometric moment of one disturbance at step t.
  double raw(const std::string& name, std::size_t t, unsigned k) const;
  double trig(const std::string& name, std::size_t t, unsigned m, unsigned n) const;

 private:
  struct Entry {
    Distribution dist;
    std::vector<double> shifts;
  };
  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
  std::shared_ptr<MomentCache> cache_;
};

/// E[w^beta_w] at step t, where `links[i]` describes encoded disturbance i.
/// Pairs (cos w, sin w) of the same source are resolved jointly as one trig moment.
double dist_moment(const DisturbanceModel& model, std::span<const DisturbanceLink> links,
                   const MultiIndex& beta_w, std::size_t t);

}  // namespace momentprop
