#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "momentprop/distmoments.hpp"
#include "momentprop/expr.hpp"
#include "momentprop/multi_index.hpp"
#include "momentprop/polynomial.hpp"

namespace momentprop {

/// Two sets of state variables declared mutually independent.
struct IndependenceDecl {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  std::size_t line = 0;
};

/// One additive term of an angle increment: sign * disturbance.
struct AngleIncrement {
  std::size_t disturbance = 0;
  int sign = 1;
};

/// A parsed, structurally validated system description.
struct SystemSpec {
  std::vector<std::string> state_vars;
  std::vector<bool> is_angle;                                   // per state var
  std::vector<std::pair<std::string, std::string>> angle_names;  // (cos, sin) per state var; empty for non-angles
  std::vector<std::vector<AngleIncrement>> angle_increments;    // per state var; empty for non-angles
  std::vector<std::string> disturbance_vars;
  std::vector<bool> disturbance_is_trig;                        // used inside sin/cos or in an angle increment
  std::vector<std::optional<Distribution>> distributions;       // per disturbance, from `dist` lines
  std::vector<Expr> updates;                                    // per state var
  std::vector<IndependenceDecl> independence;
  std::vector<std::string> target_moments;                      // monomials over encoded state names

  std::size_t state_index(const std::string& name) const;
  std::size_t disturbance_index(const std::string& name) const;

  /// State names after trig encoding: angles are replaced by their (cos, sin) pair.
  std::vector<std::string> encoded_state_names() const;

  /// Fills `model` with every declared `dist` line.
  DisturbanceModel disturbance_model() const;
};

/// Undirected dependence graph over encoded state variables; no self-loops.
class DependenceGraph {
 public:
  DependenceGraph() = default;
  static DependenceGraph complete(std::vector<std::string> vertices);
  static DependenceGraph edgeless(std::vector<std::string> vertices);

  std::size_t size() const noexcept { return vertices_.size(); }
  const std::vector<std::string>& vertices() const noexcept { return vertices_; }
  bool adjacent(std::size_t i, std::size_t j) const;
  void add_edge(std::size_t i, std::size_t j);
  void remove_edge(std::size_t i, std::size_t j);
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;

  /// Connected components, each sorted, ordered by smallest vertex.
  std::vector<std::vector<std::size_t>> components() const;

 private:
  std::vector<std::string> vertices_;
  std::vector<std::vector<bool>> adj_;
};

/// Pairs an angle state with its encoded (cos, sin) state variables.
struct AnglePair {
  std::string angle;
  std::size_t cos_index = 0;
  std::size_t sin_index = 0;

  bool operator==(const AnglePair&) const = default;
};

/// Polynomial form of a system after the trigonometric change of variables.
struct PolynomialSystem {
  std::vector<std::string> vars;             // encoded state variables
  std::vector<std::string> dist_vars;        // encoded disturbance variables
  std::vector<DisturbanceLink> dist_links;   // per encoded disturbance variable
  std::vector<AnglePair> angle_pairs;
  Ambient ambient;                           // vars followed by dist_vars
  std::vector<Polynomial> f;                 // one update per encoded state variable
  DependenceGraph graph;
  std::vector<MultiIndex> targets;           // resolved `moments` line, over vars

  std::size_t nx() const noexcept { return vars.size(); }
  std::size_t nw() const noexcept { return dist_vars.size(); }
};

/// Parses the line-oriented spec format. Throws SpecError with line and column.
SystemSpec parse_spec(const std::string& text);
SystemSpec load_spec_file(const std::string& path);

/// Replaces every angle by a (cos, sin) pair and every trig-used disturbance by
/// its (cos, sin) pair, yielding a polynomial system.
PolynomialSystem trig_encode(const SystemSpec& spec);

/// Splits the support of beta_x into connected components of the induced
/// subgraph, returning one multi-index per block in graded-lex order.
std::vector<MultiIndex> components_of_support(const DependenceGraph& graph, const MultiIndex& beta_x);

struct Diagnostic {
  enum class Severity { Warning, Error };
  Severity severity = Severity::Error;
  std::string message;
};

/// Static check that declared independences are consistent with the update structure.
std::vector<Diagnostic> validate_independence(const SystemSpec& spec);

}  // namespace momentprop
