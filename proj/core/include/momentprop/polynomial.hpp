#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "momentprop/multi_index.hpp"

namespace momentprop {

using Rational = mpq_class;

/// Parses a decimal literal ("12", "0.04", "1e-8", "-2.5E3") into an exact rational.
Rational parse_decimal(const std::string& text);

/// Ordered list of variable names a polynomial lives over. Copies share storage.
class Ambient {
 public:
  Ambient() : names_(std::make_shared<const std::vector<std::string>>()) {}
  explicit Ambient(std::vector<std::string> names)
      : names_(std::make_shared<const std::vector<std::string>>(std::move(names))) {}

  std::size_t size() const noexcept { return names_->size(); }
  const std::vector<std::string>& names() const noexcept { return *names_; }
  const std::string& operator[](std::size_t i) const { return (*names_)[i]; }

  friend bool operator==(const Ambient& a, const Ambient& b) {
    return a.names_ == b.names_ || *a.names_ == *b.names_;
  }

 private:
  std::shared_ptr<const std::vector<std::string>> names_;
};

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Terms are kept in a map ordered by GradedLexLess and never hold a zero
/// coefficient, so structural equality is polynomial equality.
class Polynomial {
 public:
  using TermMap = std::map<MultiIndex, Rational, GradedLexLess>;

  explicit Polynomial(Ambient ambient) : ambient_(std::move(ambient)) {}

  static Polynomial constant(Ambient ambient, const Rational& value);
  static Polynomial variable(Ambient ambient, std::size_t index);
  static Polynomial monomial(Ambient ambient, MultiIndex exps, const Rational& coeff = 1);

  const Ambient& ambient() const noexcept { return ambient_; }
  const TermMap& terms() const noexcept { return terms_; }
  std::size_t term_count() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Coefficient of `exps`, zero when absent.
  Rational coefficient(const MultiIndex& exps) const;

  /// Adds `coeff * x^exps`, dropping the term if it cancels.
  void add_term(const MultiIndex& exps, const Rational& coeff);

  /// Maximum total degree over stored terms; 0 for the zero polynomial.
  std::uint64_t degree() const noexcept;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

  Polynomial pow(std::uint32_t n) const;

  Rational evaluate(std::span<const Rational> point) const;
  double evaluate(std::span<const double> point) const;

  /// Human-readable rendering, leading (largest) term first.
  std::string to_string() const;

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.ambient_ == b.ambient_ && a.terms_ == b.terms_;
  }

 private:
  void require_same_ambient(const Polynomial& other) const;

  Ambient ambient_;
  TermMap terms_;
};

std::vector<std::uint64_t> degree_vector(std::span<const Polynomial> pvec);

/// prod_i pvec[i]^alpha[i]. `alpha.size()` must equal `pvec.size()`.
Polynomial pow_multiindex(std::span<const Polynomial> pvec, const MultiIndex& alpha);

/// Evaluates x^alpha exactly.
Rational monomial_value(const MultiIndex& alpha, std::span<const Rational> point);
double monomial_value(const MultiIndex& alpha, std::span<const double> point);

}  // namespace momentprop
