#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "momentprop/multi_index.hpp"
#include "momentprop/polynomial.hpp"
#include "momentprop/sysspec.hpp"

namespace momentprop {

/// One term c * E[w^beta_w] * prod_i E[x^{beta_x^(i)}] of a moment update form.
/// An empty factor list stands for E[x^0] = 1.
struct MufTerm {
  Rational coeff;
  MultiIndex dist_index;
  std::vector<MultiIndex> state_factors;

  friend bool operator==(const MufTerm&, const MufTerm&) = default;
};

/// E[x_{t+1}^target] as a sum of products of state and disturbance moments at t.
struct MomentUpdateForm {
  MultiIndex target;
  std::vector<MufTerm> terms;
  bool reduced = false;

  friend bool operator==(const MomentUpdateForm&, const MomentUpdateForm&) = default;
};

/// Ordered set of state multi-indices with O(1) lookup.
class MomentBasis {
 public:
  std::size_t size() const noexcept { return order_.size(); }
  bool empty() const noexcept { return order_.empty(); }
  const MultiIndex& operator[](std::size_t i) const { return order_[i]; }
  auto begin() const noexcept { return order_.begin(); }
  auto end() const noexcept { return order_.end(); }

  bool contains(const MultiIndex& m) const { return lookup_.count(m) != 0; }
  std::optional<std::size_t> index_of(const MultiIndex& m) const;

  /// Appends `m` unless already present; returns its index.
  std::size_t add(const MultiIndex& m);

  friend bool operator==(const MomentBasis& a, const MomentBasis& b) { return a.order_ == b.order_; }

 private:
  std::vector<MultiIndex> order_;
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> lookup_;
};

/// Compiled moment-state dynamical system: a complete basis and one form per element.
struct MomentStateSystem {
  std::vector<std::string> vars;
  std::vector<std::string> dist_vars;
  std::vector<DisturbanceLink> dist_links;
  std::vector<AnglePair> angle_pairs;
  MomentBasis basis;
  std::vector<MomentUpdateForm> forms;             // forms[i] updates basis[i]
  std::vector<MultiIndex> dist_requirements;       // graded-lex sorted, unique
  std::vector<std::size_t> seed_indices;           // basis positions of the seed moments
  bool reduced = false;

  std::string moment_name(std::size_t i) const { return basis[i].monomial(vars); }
  std::size_t term_count() const;

  /// "E[x^2] <- E[x^2] + 2*E[x*v*c] + ..." rendering of forms[i].
  std::string equation(std::size_t i) const;

  friend bool operator==(const MomentStateSystem&, const MomentStateSystem&) = default;
};

struct CompileOptions {
  std::size_t max_basis_size = 10000;
  std::uint64_t max_degree = 32;
};

/// Un-reduced moment update form of `alpha`.
MomentUpdateForm muf(const PolynomialSystem& system, const MultiIndex& alpha);

/// Factors every state moment of `form` along connected components of `graph`
/// and merges terms that become identical.
MomentUpdateForm reduce(const MomentUpdateForm& form, const DependenceGraph& graph);

/// Grows `seed` into a complete basis by depth-first expansion of missing moments.
/// Throws CompileError when a guard in `options` is exceeded.
MomentStateSystem treering(const PolynomialSystem& system, const std::vector<MultiIndex>& seed, bool reduced,
                           const CompileOptions& options = {});

bool is_complete(const MomentBasis& basis, std::span<const MomentUpdateForm> forms, bool reduced);

/// m_{t+1} = A m_t + b for an un-reduced system, given the values of
/// system.dist_requirements at time t (same order).
struct AffineStep {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};
AffineStep ltv_matrices(const MomentStateSystem& system, std::span<const double> dist_moments);

/// Exact evaluation of one form from exact state-moment and disturbance-moment lookups.
Rational evaluate_form_exact(const MomentUpdateForm& form,
                             const std::function<Rational(const MultiIndex&)>& state_moment,
                             const std::function<Rational(const MultiIndex&)>& dist_moment);

}  // namespace momentprop
