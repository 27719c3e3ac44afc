#include "momentprop/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "momentprop/errors.hpp"

namespace momentprop {

Rational parse_decimal(const std::string& text) {
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  std::string digits;
  long scale = 0;
  bool seen_digit = false;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    digits += text[i++];
    seen_digit = true;
  }
  if (i < text.size() && text[i] == '.') {
    ++i;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      digits += text[i++];
      --scale;
      seen_digit = true;
    }
  }
  if (!seen_digit) throw SpecError("malformed number '" + text + "'");
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    ++i;
    bool eneg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
    long e = 0;
    bool edigit = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      e = e * 10 + (text[i++] - '0');
      edigit = true;
      if (e > 100000) throw SpecError("exponent out of range in '" + text + "'");
    }
    if (!edigit) throw SpecError("malformed exponent in '" + text + "'");
    scale += eneg ? -e : e;
  }
  if (i != text.size()) throw SpecError("malformed number '" + text + "'");

  mpz_class num(digits, 10);
  mpz_class pow10;
  mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(scale < 0 ? -scale : scale));
  Rational out;
  if (scale >= 0) {
    out = Rational(num * pow10);
  } else {
    out = Rational(num, pow10);
  }
  out.canonicalize();
  return negative ? Rational(-out) : out;
}

Polynomial Polynomial::constant(Ambient ambient, const Rational& value) {
  Polynomial p(ambient);
  p.add_term(MultiIndex(p.ambient_.size()), value);
  return p;
}

Polynomial Polynomial::variable(Ambient ambient, std::size_t index) {
  if (index >= ambient.size()) throw SpecError("variable index out of range");
  Polynomial p(ambient);
  p.add_term(MultiIndex::unit(p.ambient_.size(), index), 1);
  return p;
}

Polynomial Polynomial::monomial(Ambient ambient, MultiIndex exps, const Rational& coeff) {
  Polynomial p(std::move(ambient));
  if (exps.size() != p.ambient_.size()) throw SpecError("monomial length does not match ambient");
  p.add_term(exps, coeff);
  return p;
}

Rational Polynomial::coefficient(const MultiIndex& exps) const {
  const auto it = terms_.find(exps);
  return it == terms_.end() ? Rational(0) : it->second;
}

void Polynomial::add_term(const MultiIndex& exps, const Rational& coeff) {
  if (exps.size() != ambient_.size()) throw SpecError("term length does not match ambient");
  if (sgn(coeff) == 0) return;
  auto [it, inserted] = terms_.try_emplace(exps, coeff);
  if (!inserted) {
    it->second += coeff;
    if (sgn(it->second) == 0) terms_.erase(it);
  }
}

std::uint64_t Polynomial::degree() const noexcept {
  // The map is graded, so the last key has maximal total degree.
  return terms_.empty() ? 0 : terms_.rbegin()->first.total_degree();
}

void Polynomial::require_same_ambient(const Polynomial& other) const {
  if (!(ambient_ == other.ambient_)) throw SpecError("polynomial ambient variable lists differ");
}

Polynomial Polynomial::operator-() const {
  Polynomial out(*this);
  for (auto& [exps, c] : out.terms_) c = -c;
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  require_same_ambient(other);
  for (const auto& [exps, c] : other.terms_) add_term(exps, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  require_same_ambient(other);
  for (const auto& [exps, c] : other.terms_) add_term(exps, -c);
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.require_same_ambient(b);
  Polynomial out(a.ambient_);
  for (const auto& [ea, ca] : a.terms_) {
    for (const auto& [eb, cb] : b.terms_) out.add_term(ea + eb, ca * cb);
  }
  return out;
}

Polynomial Polynomial::pow(std::uint32_t n) const {
  Polynomial result = constant(ambient_, 1);
  Polynomial base = *this;
  while (n > 0) {
    if (n & 1U) result = result * base;
    n >>= 1U;
    if (n > 0) base = base * base;
  }
  return result;
}

Rational monomial_value(const MultiIndex& alpha, std::span<const Rational> point) {
  Rational v = 1;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (MultiIndex::value_type k = 0; k < alpha[i]; ++k) v *= point[i];
  }
  return v;
}

double monomial_value(const MultiIndex& alpha, std::span<const double> point) {
  double v = 1.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    for (MultiIndex::value_type k = 0; k < alpha[i]; ++k) v *= point[i];
  }
  return v;
}

Rational Polynomial::evaluate(std::span<const Rational> point) const {
  if (point.size() != ambient_.size()) throw SpecError("evaluation point has wrong dimension");
  Rational sum = 0;
  for (const auto& [exps, c] : terms_) sum += c * monomial_value(exps, point);
  return sum;
}

double Polynomial::evaluate(std::span<const double> point) const {
  if (point.size() != ambient_.size()) throw SpecError("evaluation point has wrong dimension");
  double sum = 0.0;
  for (const auto& [exps, c] : terms_) sum += c.get_d() * monomial_value(exps, point);
  return sum;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    const auto& [exps, c] = *it;
    Rational mag = abs(c);
    if (out.empty()) {
      if (sgn(c) < 0) out += "-";
    } else {
      out += sgn(c) < 0 ? " - " : " + ";
    }
    if (exps.is_zero() || mag != 1) out += mag.get_str();
    if (!exps.is_zero()) {
      if (mag != 1) out += '*';
      out += exps.monomial(ambient_.names());
    }
  }
  return out;
}

std::vector<std::uint64_t> degree_vector(std::span<const Polynomial> pvec) {
  std::vector<std::uint64_t> out;
  out.reserve(pvec.size());
  for (const auto& p : pvec) out.push_back(p.degree());
  return out;
}

Polynomial pow_multiindex(std::span<const Polynomial> pvec, const MultiIndex& alpha) {
  if (pvec.empty()) throw SpecError("pow_multiindex needs at least one component");
  if (alpha.size() != pvec.size()) {
    throw SpecError("multi-index length " + std::to_string(alpha.size()) +
                    " does not match component count " + std::to_string(pvec.size()));
  }
  Polynomial out = Polynomial::constant(pvec.front().ambient(), 1);
  for (std::size_t i = 0; i < pvec.size(); ++i) {
    if (alpha[i] > 0) out = out * pvec[i].pow(alpha[i]);
  }
  return out;
}

}  // namespace momentprop
