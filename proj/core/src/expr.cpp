#include "momentprop/expr.hpp"

#include <cmath>

namespace momentprop {

Expr Expr::number(Rational value) {
  Expr e;
  e.op_ = Op::Number;
  e.value_ = std::move(value);
  return e;
}

Expr Expr::var(Symbol sym) {
  Expr e;
  e.op_ = Op::Var;
  e.sym_ = sym;
  return e;
}

Expr Expr::add(Expr a, Expr b) {
  Expr e;
  e.op_ = Op::Add;
  e.args_ = {std::move(a), std::move(b)};
  return e;
}

Expr Expr::sub(Expr a, Expr b) {
  Expr e;
  e.op_ = Op::Sub;
  e.args_ = {std::move(a), std::move(b)};
  return e;
}

Expr Expr::mul(Expr a, Expr b) {
  Expr e;
  e.op_ = Op::Mul;
  e.args_ = {std::move(a), std::move(b)};
  return e;
}

Expr Expr::neg(Expr a) {
  Expr e;
  e.op_ = Op::Neg;
  e.args_ = {std::move(a)};
  return e;
}

Expr Expr::pow(Expr base, std::uint32_t exponent) {
  Expr e;
  e.op_ = Op::Pow;
  e.exponent_ = exponent;
  e.args_ = {std::move(base)};
  return e;
}

Expr Expr::sin(Symbol sym) {
  Expr e;
  e.op_ = Op::Sin;
  e.sym_ = sym;
  return e;
}

Expr Expr::cos(Symbol sym) {
  Expr e;
  e.op_ = Op::Cos;
  e.sym_ = sym;
  return e;
}

namespace {

double lookup(const Symbol& s, std::span<const double> state, std::span<const double> dist) {
  return s.kind == Symbol::Kind::State ? state[s.index] : dist[s.index];
}

// Folding helpers used by derivative(); they keep Jacobian trees small.
Expr fold_add(Expr a, Expr b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_number() && b.is_number()) return Expr::number(a.value() + b.value());
  return Expr::add(std::move(a), std::move(b));
}

Expr fold_sub(Expr a, Expr b) {
  if (b.is_zero()) return a;
  if (a.is_number() && b.is_number()) return Expr::number(a.value() - b.value());
  if (a.is_zero()) return Expr::neg(std::move(b));
  return Expr::sub(std::move(a), std::move(b));
}

Expr fold_mul(Expr a, Expr b) {
  if (a.is_zero() || b.is_zero()) return Expr::number(0);
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_number() && b.is_number()) return Expr::number(a.value() * b.value());
  return Expr::mul(std::move(a), std::move(b));
}

}  // namespace

double Expr::evaluate(std::span<const double> state, std::span<const double> dist) const {
  switch (op_) {
    case Op::Number:
      return value_.get_d();
    case Op::Var:
      return lookup(sym_, state, dist);
    case Op::Add:
      return args_[0].evaluate(state, dist) + args_[1].evaluate(state, dist);
    case Op::Sub:
      return args_[0].evaluate(state, dist) - args_[1].evaluate(state, dist);
    case Op::Mul:
      return args_[0].evaluate(state, dist) * args_[1].evaluate(state, dist);
    case Op::Neg:
      return -args_[0].evaluate(state, dist);
    case Op::Pow: {
      const double b = args_[0].evaluate(state, dist);
      double r = 1.0;
      for (std::uint32_t k = 0; k < exponent_; ++k) r *= b;
      return r;
    }
    case Op::Sin:
      return std::sin(lookup(sym_, state, dist));
    case Op::Cos:
      return std::cos(lookup(sym_, state, dist));
  }
  return 0.0;
}

Expr Expr::derivative(const Symbol& wrt) const {
  switch (op_) {
    case Op::Number:
      return number(0);
    case Op::Var:
      return number(sym_ == wrt ? 1 : 0);
    case Op::Add:
      return fold_add(args_[0].derivative(wrt), args_[1].derivative(wrt));
    case Op::Sub:
      return fold_sub(args_[0].derivative(wrt), args_[1].derivative(wrt));
    case Op::Mul:
      return fold_add(fold_mul(args_[0].derivative(wrt), args_[1]),
                      fold_mul(args_[0], args_[1].derivative(wrt)));
    case Op::Neg: {
      Expr d = args_[0].derivative(wrt);
      return d.is_zero() ? d : neg(std::move(d));
    }
    case Op::Pow: {
      Expr d = args_[0].derivative(wrt);
      if (d.is_zero() || exponent_ == 0) return number(0);
      Expr lower = exponent_ == 1 ? number(1) : (exponent_ == 2 ? args_[0] : pow(args_[0], exponent_ - 1));
      return fold_mul(fold_mul(number(Rational(exponent_)), std::move(lower)), std::move(d));
    }
    case Op::Sin:
      return sym_ == wrt ? cos(sym_) : number(0);
    case Op::Cos:
      return sym_ == wrt ? neg(sin(sym_)) : number(0);
  }
  return number(0);
}

void Expr::visit_symbols(const std::function<void(const Symbol&, bool)>& fn) const {
  switch (op_) {
    case Op::Var:
      fn(sym_, false);
      return;
    case Op::Sin:
    case Op::Cos:
      fn(sym_, true);
      return;
    default:
      for (const auto& a : args_) a.visit_symbols(fn);
  }
}

std::string Expr::to_string(std::span<const std::string> state_names,
                            std::span<const std::string> dist_names) const {
  auto name = [&](const Symbol& s) {
    return s.kind == Symbol::Kind::State ? state_names[s.index] : dist_names[s.index];
  };
  // Operands of *, ^ and unary minus need parentheses when they are sums.
  auto tight = [&](const Expr& e) {
    const std::string text = e.to_string(state_names, dist_names);
    return e.op_ == Op::Add || e.op_ == Op::Sub ? "(" + text + ")" : text;
  };
  switch (op_) {
    case Op::Number:
      return value_.get_str();
    case Op::Var:
      return name(sym_);
    case Op::Add:
      return args_[0].to_string(state_names, dist_names) + " + " + args_[1].to_string(state_names, dist_names);
    case Op::Sub:
      return args_[0].to_string(state_names, dist_names) + " - " + tight(args_[1]);
    case Op::Mul:
      return tight(args_[0]) + "*" + tight(args_[1]);
    case Op::Neg:
      return "-" + tight(args_[0]);
    case Op::Pow: {
      const bool bare = args_[0].op_ == Op::Var || (args_[0].op_ == Op::Number && args_[0].value_ >= 0);
      const std::string base = args_[0].to_string(state_names, dist_names);
      return (bare ? base : "(" + base + ")") + "^" + std::to_string(exponent_);
    }
    case Op::Sin:
      return "sin(" + name(sym_) + ")";
    case Op::Cos:
      return "cos(" + name(sym_) + ")";
  }
  return {};
}

}  // namespace momentprop
