#include "momentprop/compiler.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "momentprop/errors.hpp"

namespace momentprop {

std::optional<std::size_t> MomentBasis::index_of(const MultiIndex& m) const {
  const auto it = lookup_.find(m);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t MomentBasis::add(const MultiIndex& m) {
  const auto [it, inserted] = lookup_.try_emplace(m, order_.size());
  if (inserted) order_.push_back(m);
  return it->second;
}

std::size_t MomentStateSystem::term_count() const {
  std::size_t n = 0;
  for (const auto& f : forms) n += f.terms.size();
  return n;
}

std::string MomentStateSystem::equation(std::size_t i) const {
  std::ostringstream os;
  os << "E[" << moment_name(i) << "] <- ";
  const auto& form = forms.at(i);
  if (form.terms.empty()) os << "0";
  bool first = true;
  for (const auto& term : form.terms) {
    const Rational mag = abs(term.coeff);
    os << (first ? (sgn(term.coeff) < 0 ? "-" : "") : (sgn(term.coeff) < 0 ? " - " : " + "));
    first = false;
    std::vector<std::string> parts;
    if (mag != 1) parts.push_back(mag.get_str());
    if (!term.dist_index.is_zero()) parts.push_back("E[" + term.dist_index.monomial(dist_vars) + "]");
    for (const auto& f : term.state_factors) parts.push_back("E[" + f.monomial(vars) + "]");
    if (parts.empty()) parts.emplace_back("1");
    for (std::size_t k = 0; k < parts.size(); ++k) os << (k ? "*" : "") << parts[k];
  }
  return os.str();
}

namespace {

// Splits an expanded polynomial into un-reduced MUF terms.
MomentUpdateForm form_from_polynomial(const Polynomial& p, const MultiIndex& alpha, std::size_t nx) {
  MomentUpdateForm form;
  form.target = alpha;
  form.terms.reserve(p.term_count());
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    auto [bx, bw] = it->first.split(nx);
    MufTerm term{it->second, std::move(bw), {}};
    if (!bx.is_zero()) term.state_factors.push_back(std::move(bx));
    form.terms.push_back(std::move(term));
  }
  return form;
}

// Caches integer powers of each component of f across a compilation.
class PowerCache {
 public:
  explicit PowerCache(const PolynomialSystem& sys) : sys_(sys), powers_(sys.nx()) {}

  const Polynomial& power(std::size_t i, std::uint32_t k) {
    auto& list = powers_[i];
    if (list.empty()) list.push_back(Polynomial::constant(sys_.ambient, 1));
    while (list.size() <= k) list.push_back(list.back() * sys_.f[i]);
    return list[k];
  }

  Polynomial expand(const MultiIndex& alpha) {
    Polynomial out = Polynomial::constant(sys_.ambient, 1);
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] > 0) out = out * power(i, alpha[i]);
    }
    return out;
  }

 private:
  const PolynomialSystem& sys_;
  std::vector<std::vector<Polynomial>> powers_;
};

std::string render_chain(const std::vector<MultiIndex>& chain, const std::vector<std::string>& vars) {
  std::string out;
  const std::size_t start = chain.size() > 12 ? chain.size() - 12 : 0;
  if (start > 0) out += "... -> ";
  for (std::size_t i = start; i < chain.size(); ++i) {
    if (i > start) out += " -> ";
    out += chain[i].monomial(vars);
  }
  return out;
}

}  // namespace

MomentUpdateForm muf(const PolynomialSystem& system, const MultiIndex& alpha) {
  if (alpha.size() != system.nx()) throw SpecError("moment multi-index does not match the state dimension");
  return form_from_polynomial(pow_multiindex(system.f, alpha), alpha, system.nx());
}

MomentUpdateForm reduce(const MomentUpdateForm& form, const DependenceGraph& graph) {
  if (form.reduced) return form;
  MomentUpdateForm out;
  out.target = form.target;
  out.reduced = true;
  std::map<std::pair<MultiIndex, std::vector<MultiIndex>>, std::size_t> position;
  for (const auto& term : form.terms) {
    std::vector<MultiIndex> factors;
    for (const auto& f : term.state_factors) {
      auto blocks = components_of_support(graph, f);
      factors.insert(factors.end(), blocks.begin(), blocks.end());
    }
    std::sort(factors.begin(), factors.end(), GradedLexLess{});
    auto key = std::make_pair(term.dist_index, factors);
    const auto it = position.find(key);
    if (it == position.end()) {
      position.emplace(std::move(key), out.terms.size());
      out.terms.push_back({term.coeff, term.dist_index, std::move(factors)});
    } else {
      out.terms[it->second].coeff += term.coeff;
    }
  }
  std::erase_if(out.terms, [](const MufTerm& t) { return sgn(t.coeff) == 0; });
  return out;
}

bool is_complete(const MomentBasis& basis, std::span<const MomentUpdateForm> forms, bool /*reduced*/) {
  for (const auto& form : forms) {
    for (const auto& term : form.terms) {
      for (const auto& f : term.state_factors) {
        if (!basis.contains(f)) return false;
      }
    }
  }
  return true;
}

MomentStateSystem treering(const PolynomialSystem& system, const std::vector<MultiIndex>& seed, bool reduced,
                           const CompileOptions& options) {
  if (seed.empty()) throw SpecError("the seed moment basis is empty");
  for (const auto& a : seed) {
    if (a.size() != system.nx()) throw SpecError("seed moment does not match the state dimension");
    if (a.is_zero()) throw SpecError("the constant moment cannot be a basis element");
  }

  MomentStateSystem out;
  out.vars = system.vars;
  out.dist_vars = system.dist_vars;
  out.dist_links = system.dist_links;
  out.angle_pairs = system.angle_pairs;
  out.reduced = reduced;

  PowerCache cache(system);
  struct Frame {
    std::vector<MultiIndex> children;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  std::vector<MultiIndex> chain;

  auto expand = [&](const MultiIndex& alpha) {
    chain.push_back(alpha);
    if (alpha.total_degree() > options.max_degree) {
      throw CompileError("basis explosion: moment degree exceeds " + std::to_string(options.max_degree) +
                         " along " + render_chain(chain, system.vars));
    }
    if (out.basis.size() >= options.max_basis_size) {
      throw CompileError("basis explosion: basis size exceeds " + std::to_string(options.max_basis_size) +
                         " along " + render_chain(chain, system.vars));
    }
    MomentUpdateForm form = form_from_polynomial(cache.expand(alpha), alpha, system.nx());
    if (reduced) form = reduce(form, system.graph);
    out.basis.add(alpha);

    std::set<MultiIndex, GradedLexLess> children;
    for (const auto& term : form.terms) {
      children.insert(term.state_factors.begin(), term.state_factors.end());
    }
    out.forms.push_back(std::move(form));
    stack.push_back({std::vector<MultiIndex>(children.begin(), children.end()), 0});
  };

  for (const auto& s : seed) {
    if (!out.basis.contains(s)) {
      expand(s);
      while (!stack.empty()) {
        auto& top = stack.back();
        while (top.next < top.children.size() && out.basis.contains(top.children[top.next])) ++top.next;
        if (top.next == top.children.size()) {
          stack.pop_back();
          chain.pop_back();
          continue;
        }
        const MultiIndex child = top.children[top.next++];
        expand(child);
      }
    }
    out.seed_indices.push_back(*out.basis.index_of(s));
  }

  std::set<MultiIndex, GradedLexLess> dist;
  for (const auto& form : out.forms) {
    for (const auto& term : form.terms) dist.insert(term.dist_index);
  }
  out.dist_requirements.assign(dist.begin(), dist.end());

  if (!is_complete(out.basis, out.forms, reduced)) {
    throw std::logic_error("treering produced an incomplete basis");
  }
  return out;
}

AffineStep ltv_matrices(const MomentStateSystem& system, std::span<const double> dist_moments) {
  if (system.reduced) throw SpecError("affine step matrices require an un-reduced system");
  if (dist_moments.size() != system.dist_requirements.size()) {
    throw SpecError("expected " + std::to_string(system.dist_requirements.size()) + " disturbance moments");
  }
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> dist_pos;
  for (std::size_t k = 0; k < system.dist_requirements.size(); ++k) dist_pos[system.dist_requirements[k]] = k;

  const auto n = static_cast<Eigen::Index>(system.basis.size());
  AffineStep step{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  for (std::size_t i = 0; i < system.forms.size(); ++i) {
    for (const auto& term : system.forms[i].terms) {
      const double w = term.coeff.get_d() * dist_moments[dist_pos.at(term.dist_index)];
      if (term.state_factors.empty()) {
        step.b(static_cast<Eigen::Index>(i)) += w;
      } else {
        const auto j = system.basis.index_of(term.state_factors.front());
        step.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(*j)) += w;
      }
    }
  }
  return step;
}

Rational evaluate_form_exact(const MomentUpdateForm& form,
                             const std::function<Rational(const MultiIndex&)>& state_moment,
                             const std::function<Rational(const MultiIndex&)>& dist_moment) {
  Rational sum = 0;
  for (const auto& term : form.terms) {
    Rational v = term.coeff * dist_moment(term.dist_index);
    for (const auto& f : term.state_factors) v *= state_moment(f);
    sum += v;
  }
  return sum;
}

}  // namespace momentprop
