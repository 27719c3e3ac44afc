#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "momentprop/polynomial.hpp"

namespace momentprop {

/// Reference to a declared variable of a system spec.
struct Symbol {
  enum class Kind : std::uint8_t { State, Disturbance };
  Kind kind = Kind::State;
  std::size_t index = 0;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

/// Expression tree of a dynamics update, as written in a spec file.
class Expr {
 public:
  enum class Op : std::uint8_t { Number, Var, Add, Sub, Mul, Neg, Pow, Sin, Cos };

  static Expr number(Rational value);
  static Expr var(Symbol sym);
  static Expr add(Expr a, Expr b);
  static Expr sub(Expr a, Expr b);
  static Expr mul(Expr a, Expr b);
  static Expr neg(Expr a);
  static Expr pow(Expr base, std::uint32_t exponent);
  static Expr sin(Symbol sym);
  static Expr cos(Symbol sym);

  Op op() const noexcept { return op_; }
  const Rational& value() const noexcept { return value_; }
  const Symbol& symbol() const noexcept { return sym_; }
  std::uint32_t exponent() const noexcept { return exponent_; }
  const std::vector<Expr>& args() const noexcept { return args_; }

  bool is_number() const noexcept { return op_ == Op::Number; }
  bool is_zero() const { return op_ == Op::Number && sgn(value_) == 0; }
  bool is_one() const { return op_ == Op::Number && value_ == 1; }

  /// Numeric evaluation; sin/cos are evaluated with libm.
  double evaluate(std::span<const double> state, std::span<const double> dist) const;

  /// Symbolic partial derivative with light constant folding.
  Expr derivative(const Symbol& wrt) const;

  /// Calls `fn(symbol, inside_trig)` for every variable occurrence.
  void visit_symbols(const std::function<void(const Symbol&, bool)>& fn) const;

  std::string to_string(std::span<const std::string> state_names,
                        std::span<const std::string> dist_names) const;

 private:
  Op op_ = Op::Number;
  Rational value_;
  Symbol sym_;
  std::uint32_t exponent_ = 0;
  std::vector<Expr> args_;
};

}  // namespace momentprop
