#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace momentprop {

/// Exponent vector over a fixed list of variables; x^alpha = prod_i x_i^alpha_i.
class MultiIndex {
 public:
  using value_type = std::uint32_t;

  MultiIndex() = default;
  explicit MultiIndex(std::size_t nvars) : exps_(nvars, 0) {}
  MultiIndex(std::initializer_list<value_type> exps) : exps_(exps) {}
  explicit MultiIndex(std::vector<value_type> exps) : exps_(std::move(exps)) {}

  static MultiIndex unit(std::size_t nvars, std::size_t i, value_type power = 1);

  std::size_t size() const noexcept { return exps_.size(); }
  value_type operator[](std::size_t i) const { return exps_[i]; }
  value_type& operator[](std::size_t i) { return exps_[i]; }

  auto begin() const noexcept { return exps_.begin(); }
  auto end() const noexcept { return exps_.end(); }
  std::span<const value_type> exponents() const noexcept { return exps_; }

  std::uint64_t total_degree() const noexcept;
  bool is_zero() const noexcept;

  /// Componentwise sum; sizes must match.
  MultiIndex operator+(const MultiIndex& other) const;

  /// Split into the first `n` entries and the rest.
  std::pair<MultiIndex, MultiIndex> split(std::size_t n) const;

  /// Concatenation of two exponent vectors.
  static MultiIndex concat(const MultiIndex& head, const MultiIndex& tail);

  /// Renders as a monomial, e.g. "x*v*s" or "x^2"; "1" for the zero index.
  std::string monomial(std::span<const std::string> names) const;

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

 private:
  std::vector<value_type> exps_;
};

/// Graded lexicographic order: total degree first, then lex with the first
/// variable most significant. Ascending under this comparator runs 1 < z < y < x < z^2 < ...
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const noexcept;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& m) const noexcept;
};

/// Parses a monomial such as "x^2*y" (factors separated by '*') against `names`.
/// Throws SpecError on unknown names or malformed input.
MultiIndex parse_monomial(const std::string& text, std::span<const std::string> names);

}  // namespace momentprop
