#include "momentprop/distmoments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <unordered_map>

#include "momentprop/errors.hpp"

namespace momentprop {

Distribution Distribution::degenerate(double value) {
  if (!std::isfinite(value)) throw SpecError("degenerate value must be finite");
  return Distribution(Degenerate{value});
}

Distribution Distribution::gaussian(double mean, double variance) {
  if (!std::isfinite(mean) || !std::isfinite(variance) || variance < 0.0) {
    throw SpecError("gaussian needs a finite mean and variance >= 0");
  }
  return Distribution(Gaussian{mean, variance});
}

Distribution Distribution::uniform(double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower < upper)) {
    throw SpecError("uniform needs finite bounds with lower < upper");
  }
  return Distribution(Uniform{lower, upper});
}

Distribution Distribution::beta(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(a > 0.0) || !(b > 0.0)) {
    throw SpecError("beta needs a > 0 and b > 0");
  }
  return Distribution(BetaDist{a, b});
}

double Distribution::mean() const { return raw_moment(*this, 0.0, 1); }

double Distribution::variance() const {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Degenerate>) {
          return 0.0;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return d.variance;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          const double w = d.upper - d.lower;
          return w * w / 12.0;
        } else {
          const double s = d.a + d.b;
          return d.a * d.b / (s * s * (s + 1.0));
        }
      },
      kind_);
}

std::string Distribution::to_string() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Degenerate>) {
          os << "degenerate(" << d.value << ")";
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          os << "gaussian(" << d.mean << ", " << d.variance << ")";
        } else if constexpr (std::is_same_v<T, Uniform>) {
          os << "uniform(" << d.lower << ", " << d.upper << ")";
        } else {
          os << "beta(" << d.a << ", " << d.b << ")";
        }
      },
      kind_);
  return os.str();
}

bool operator==(const Distribution& a, const Distribution& b) {
  return a.to_string() == b.to_string();
}

std::complex<double> char_fn(const Distribution& dist, double shift, int t) {
  using namespace std::complex_literals;
  const double td = static_cast<double>(t);
  return std::visit(
      [&](const auto& d) -> std::complex<double> {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Degenerate>) {
          const double a = td * (d.value + shift);
          return {std::cos(a), std::sin(a)};
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          const double a = td * (d.mean + shift);
          const double mag = std::exp(-0.5 * d.variance * td * td);
          return {mag * std::cos(a), mag * std::sin(a)};
        } else if constexpr (std::is_same_v<T, Uniform>) {
          if (t == 0) return {1.0, 0.0};
          // (e^{itb} - e^{ita}) / (it(b - a)) written around the centre for accuracy.
          const double centre = 0.5 * (d.lower + d.upper) + shift;
          const double half = 0.5 * (d.upper - d.lower);
          const double x = td * half;
          const double sinc = std::sin(x) / x;
          const double a = td * centre;
          return {sinc * std::cos(a), sinc * std::sin(a)};
        } else {
          throw UnsupportedError("characteristic function of beta disturbances is not supported");
        }
      },
      dist.kind());
}

TrigLaurent trig_laurent(unsigned m, unsigned n) {
  TrigLaurent out;
  out.degree = m + n;
  // Polynomial in z with offset `degree`: start from z^0.
  std::vector<mpz_class> poly(2 * out.degree + 1);
  poly[out.degree] = 1;
  auto multiply = [&](int sign) {
    // poly *= (z + sign / z)
    std::vector<mpz_class> next(poly.size());
    for (std::size_t k = 0; k < poly.size(); ++k) {
      if (poly[k] == 0) continue;
      if (k + 1 < poly.size()) next[k + 1] += poly[k];
      if (k >= 1) next[k - 1] += sign * poly[k];
    }
    poly = std::move(next);
  };
  for (unsigned i = 0; i < m; ++i) multiply(+1);
  for (unsigned i = 0; i < n; ++i) multiply(-1);
  out.coeffs = std::move(poly);
  static constexpr std::complex<double> units[4] = {{1, 0}, {0, -1}, {-1, 0}, {0, 1}};
  out.unit = units[n % 4];
  return out;
}

double trig_moment(const Distribution& dist, double shift, unsigned m, unsigned n) {
  if (m + n == 0) return 1.0;
  if (std::holds_alternative<BetaDist>(dist.kind())) {
    throw UnsupportedError("trigonometric moments of beta disturbances are not supported");
  }
  const TrigLaurent lp = trig_laurent(m, n);
  const int deg = static_cast<int>(lp.degree);
  mpz_class denom;
  mpz_ui_pow_ui(denom.get_mpz_t(), 2, lp.degree);

  std::complex<double> sum{0.0, 0.0};
  double scale = 0.0;
  // Pair the terms at +k and -k: Phi(-k) = conj(Phi(k)) for real-valued X.
  for (int k = 0; k <= deg; ++k) {
    const auto& cpos = lp.coeffs[static_cast<std::size_t>(deg + k)];
    const auto& cneg = lp.coeffs[static_cast<std::size_t>(deg - k)];
    if (cpos == 0 && (k == 0 || cneg == 0)) continue;
    const std::complex<double> phi = char_fn(dist, shift, k);
    const double wpos = mpq_class(cpos, denom).get_d();
    if (k == 0) {
      sum += wpos * phi;
      scale += std::abs(wpos);
    } else {
      const double wneg = mpq_class(cneg, denom).get_d();
      sum += wpos * phi + wneg * std::conj(phi);
      scale += std::abs(wpos) + std::abs(wneg);
    }
  }
  const std::complex<double> value = lp.unit * sum;
  if (std::abs(value.imag()) > 1e-12 * std::max(1.0, scale)) {
    throw std::logic_error("trig moment has a non-negligible imaginary residue");
  }
  return value.real();
}

namespace {

double binomial(unsigned n, unsigned k) {
  double r = 1.0;
  for (unsigned i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

double ipow(double x, unsigned k) {
  double r = 1.0;
  while (k > 0) {
    if (k & 1U) r *= x;
    x *= x;
    k >>= 1U;
  }
  return r;
}

}  // namespace

double raw_moment(const Distribution& dist, double shift, unsigned k) {
  if (k == 0) return 1.0;
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Degenerate>) {
          return ipow(d.value + shift, k);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          // E[(m + sigma Z)^k] = sum_j C(k, 2j) m^(k-2j) sigma^(2j) (2j-1)!!
          const double m = d.mean + shift;
          double sum = 0.0;
          double dfact = 1.0;  // (2j-1)!!
          double var_pow = 1.0;
          for (unsigned j = 0; 2 * j <= k; ++j) {
            if (j > 0) {
              dfact *= static_cast<double>(2 * j - 1);
              var_pow *= d.variance;
            }
            sum += binomial(k, 2 * j) * ipow(m, k - 2 * j) * var_pow * dfact;
          }
          return sum;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          // Centre/half-width form of (b^(k+1) - a^(k+1)) / ((k+1)(b - a)).
          const double c = 0.5 * (d.lower + d.upper) + shift;
          const double h = 0.5 * (d.upper - d.lower);
          double sum = 0.0;
          for (unsigned j = 0; 2 * j <= k; ++j) {
            sum += binomial(k, 2 * j) * ipow(c, k - 2 * j) * ipow(h, 2 * j) /
                   static_cast<double>(2 * j + 1);
          }
          return sum;
        } else {
          double sum = 0.0;
          double ej = 1.0;  // E[X^j]
          for (unsigned j = 0; j <= k; ++j) {
            if (j > 0) ej *= (d.a + j - 1) / (d.a + d.b + j - 1);
            sum += binomial(k, j) * ipow(shift, k - j) * ej;
          }
          return sum;
        }
      },
      dist.kind());
}

const char* role_name(DisturbanceLink::Role role) {
  switch (role) {
    case DisturbanceLink::Role::Raw:
      return "raw";
    case DisturbanceLink::Role::Cos:
      return "cos";
    case DisturbanceLink::Role::Sin:
      return "sin";
  }
  return "raw";
}

/// Thread-safe memo of moment queries keyed by (distribution, shift, query).
class MomentCache {
 public:
  template <typename Fn>
  double get(const Distribution& dist, double shift, unsigned kind, unsigned a, unsigned b, Fn&& compute) {
    Key key{dist.to_string(), std::bit_cast<std::uint64_t>(shift), kind, a, b};
    {
      std::shared_lock lock(mutex_);
      const auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    const double v = compute();
    std::unique_lock lock(mutex_);
    map_.emplace(std::move(key), v);
    return v;
  }

 private:
  struct Key {
    std::string dist;
    std::uint64_t shift_bits;
    unsigned kind, a, b;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::size_t h = std::hash<std::string>{}(k.dist);
      for (std::uint64_t v : {k.shift_bits, std::uint64_t{k.kind}, std::uint64_t{k.a}, std::uint64_t{k.b}}) {
        h ^= std::hash<std::uint64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      }
      return h;
    }
  };
  std::shared_mutex mutex_;
  std::unordered_map<Key, double, KeyHash> map_;
};

DisturbanceModel::DisturbanceModel() : cache_(std::make_shared<MomentCache>()) {}

void DisturbanceModel::set(const std::string& name, Distribution dist, std::vector<double> shifts) {
  entries_[name] = Entry{std::move(dist), std::move(shifts)};
}

void DisturbanceModel::set_shifts(const std::string& name, std::vector<double> shifts) {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw PropagationError("no distribution for disturbance '" + name + "'");
  it->second.shifts = std::move(shifts);
}

const DisturbanceModel::Entry& DisturbanceModel::entry(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw PropagationError("no distribution for disturbance '" + name + "'");
  return it->second;
}

const Distribution& DisturbanceModel::distribution(const std::string& name) const {
  return entry(name).dist;
}

const std::vector<double>& DisturbanceModel::shifts(const std::string& name) const {
  return entry(name).shifts;
}

std::vector<std::string> DisturbanceModel::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

double DisturbanceModel::shift(const std::string& name, std::size_t t) const {
  const auto& e = entry(name);
  if (e.shifts.empty()) return 0.0;
  if (t >= e.shifts.size()) {
    throw PropagationError("shift schedule of '" + name + "' has " + std::to_string(e.shifts.size()) +
                           " entries; step " + std::to_string(t) + " requested");
  }
  return e.shifts[t];
}

std::size_t DisturbanceModel::horizon() const {
  std::size_t h = std::numeric_limits<std::size_t>::max();
  for (const auto& [name, e] : entries_) {
    if (!e.shifts.empty()) h = std::min(h, e.shifts.size());
  }
  return h;
}

bool DisturbanceModel::stationary() const {
  for (const auto& [name, e] : entries_) {
    for (double s : e.shifts) {
      if (s != e.shifts.front()) return false;
    }
  }
  return true;
}

double DisturbanceModel::raw(const std::string& name, std::size_t t, unsigned k) const {
  const auto& e = entry(name);
  const double s = shift(name, t);
  return cache_->get(e.dist, s, 0, k, 0, [&] { return raw_moment(e.dist, s, k); });
}

double DisturbanceModel::trig(const std::string& name, std::size_t t, unsigned m, unsigned n) const {
  const auto& e = entry(name);
  const double s = shift(name, t);
  return cache_->get(e.dist, s, 1, m, n, [&] { return trig_moment(e.dist, s, m, n); });
}

double dist_moment(const DisturbanceModel& model, std::span<const DisturbanceLink> links,
                   const MultiIndex& beta_w, std::size_t t) {
  if (beta_w.size() != links.size()) {
    throw SpecError("disturbance multi-index does not match the disturbance variable list");
  }
  struct Exps {
    unsigned raw = 0, cos = 0, sin = 0;
  };
  std::map<std::string, Exps> per_source;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (beta_w[i] == 0) continue;
    auto& e = per_source[links[i].source];
    switch (links[i].role) {
      case DisturbanceLink::Role::Raw:
        e.raw += beta_w[i];
        break;
      case DisturbanceLink::Role::Cos:
        e.cos += beta_w[i];
        break;
      case DisturbanceLink::Role::Sin:
        e.sin += beta_w[i];
        break;
    }
  }
  double value = 1.0;
  for (const auto& [source, e] : per_source) {
    if (e.raw > 0 && e.cos + e.sin > 0) {
      throw UnsupportedError("disturbance '" + source + "' is used both polynomially and trigonometrically");
    }
    value *= e.raw > 0 ? model.raw(source, t, e.raw) : model.trig(source, t, e.cos, e.sin);
  }
  return value;
}

}  // namespace momentprop
