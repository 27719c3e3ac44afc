#include "momentprop/serialize.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "momentprop/csv.hpp"
#include "momentprop/errors.hpp"

namespace momentprop {

namespace {

constexpr const char* kMagic = "momentprop-moment-system";
constexpr int kVersion = 1;

std::string join_exps(const MultiIndex& m) {
  std::string out;
  for (std::size_t i = 0; i < m.size(); ++i) out += (i ? " " : "") + std::to_string(m[i]);
  return out;
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

MultiIndex parse_exps(const std::string& s, std::size_t n, std::size_t line) {
  const auto w = words(s);
  if (w.size() != n) throw SpecError("expected " + std::to_string(n) + " exponents", line, 1);
  MultiIndex m(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      m[i] = static_cast<MultiIndex::value_type>(std::stoul(w[i]));
    } catch (const std::exception&) {
      throw SpecError("bad exponent '" + w[i] + "'", line, 1);
    }
  }
  return m;
}

}  // namespace

std::string serialize_system(const MomentStateSystem& sys) {
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << '\n';
  os << "reduced " << (sys.reduced ? 1 : 0) << '\n';
  os << "vars";
  for (const auto& v : sys.vars) os << ' ' << v;
  os << "\ndist_vars";
  for (const auto& v : sys.dist_vars) os << ' ' << v;
  os << '\n';
  for (std::size_t i = 0; i < sys.dist_vars.size(); ++i) {
    os << "link " << sys.dist_vars[i] << ' ' << role_name(sys.dist_links[i].role) << ' '
       << sys.dist_links[i].source << '\n';
  }
  for (const auto& a : sys.angle_pairs) os << "angle " << a.angle << ' ' << a.cos_index << ' ' << a.sin_index << '\n';
  os << "seeds";
  for (auto s : sys.seed_indices) os << ' ' << s;
  os << "\nbasis " << sys.basis.size() << '\n';
  for (const auto& m : sys.basis) os << join_exps(m) << '\n';
  os << "terms " << sys.term_count() << '\n';
  for (std::size_t i = 0; i < sys.forms.size(); ++i) {
    for (const auto& term : sys.forms[i].terms) {
      os << i << " | " << term.coeff.get_num().get_str() << '/' << term.coeff.get_den().get_str() << " | "
         << join_exps(term.dist_index) << " |";
      for (const auto& f : term.state_factors) os << ' ' << *sys.basis.index_of(f);
      os << '\n';
    }
  }
  return os.str();
}

namespace {
MomentStateSystem deserialize_impl(const std::string& text);
}

MomentStateSystem deserialize_system(const std::string& text) {
  try {
    return deserialize_impl(text);
  } catch (const std::invalid_argument&) {
    throw SpecError("malformed number in compiled system");
  } catch (const std::out_of_range&) {
    throw SpecError("number out of range in compiled system");
  }
}

namespace {

MomentStateSystem deserialize_impl(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> std::string {
    if (!std::getline(is, line)) throw SpecError("unexpected end of compiled system", lineno + 1, 1);
    ++lineno;
    return line;
  };

  MomentStateSystem sys;
  {
    const auto w = words(next_line());
    if (w.size() != 2 || w[0] != kMagic) throw SpecError("not a compiled moment system", lineno, 1);
    if (w[1] != std::to_string(kVersion)) throw SpecError("unsupported format version " + w[1], lineno, 1);
  }
  std::size_t basis_size = 0;
  for (;;) {
    const auto w = words(next_line());
    if (w.empty()) continue;
    if (w[0] == "reduced" && w.size() == 2) {
      sys.reduced = w[1] == "1";
    } else if (w[0] == "vars") {
      sys.vars.assign(w.begin() + 1, w.end());
    } else if (w[0] == "dist_vars") {
      sys.dist_vars.assign(w.begin() + 1, w.end());
      sys.dist_links.assign(sys.dist_vars.size(), {});
    } else if (w[0] == "link" && w.size() == 4) {
      std::size_t idx = sys.dist_vars.size();
      for (std::size_t i = 0; i < sys.dist_vars.size(); ++i) {
        if (sys.dist_vars[i] == w[1]) idx = i;
      }
      if (idx == sys.dist_vars.size()) throw SpecError("link for unknown variable '" + w[1] + "'", lineno, 1);
      DisturbanceLink link{w[3], DisturbanceLink::Role::Raw};
      if (w[2] == "cos") {
        link.role = DisturbanceLink::Role::Cos;
      } else if (w[2] == "sin") {
        link.role = DisturbanceLink::Role::Sin;
      } else if (w[2] != "raw") {
        throw SpecError("unknown link role '" + w[2] + "'", lineno, 1);
      }
      sys.dist_links[idx] = link;
    } else if (w[0] == "angle" && w.size() == 4) {
      sys.angle_pairs.push_back({w[1], std::stoul(w[2]), std::stoul(w[3])});
    } else if (w[0] == "seeds") {
      for (std::size_t i = 1; i < w.size(); ++i) sys.seed_indices.push_back(std::stoul(w[i]));
    } else if (w[0] == "basis" && w.size() == 2) {
      basis_size = std::stoul(w[1]);
      break;
    } else {
      throw SpecError("unexpected line '" + line + "'", lineno, 1);
    }
  }
  for (std::size_t i = 0; i < basis_size; ++i) {
    sys.basis.add(parse_exps(next_line(), sys.vars.size(), lineno));
  }
  if (sys.basis.size() != basis_size) throw SpecError("duplicate basis element", lineno, 1);
  sys.forms.resize(basis_size);
  for (std::size_t i = 0; i < basis_size; ++i) {
    sys.forms[i].target = sys.basis[i];
    sys.forms[i].reduced = sys.reduced;
  }
  for (auto s : sys.seed_indices) {
    if (s >= basis_size) throw SpecError("seed index out of range");
  }

  const auto w = words(next_line());
  if (w.size() != 2 || w[0] != "terms") throw SpecError("expected 'terms <count>'", lineno, 1);
  const std::size_t nterms = std::stoul(w[1]);
  std::set<MultiIndex, GradedLexLess> dist;
  for (std::size_t k = 0; k < nterms; ++k) {
    const std::string l = next_line();
    std::vector<std::string> fields;
    std::size_t p = 0;
    for (;;) {
      const auto bar = l.find('|', p);
      fields.push_back(trim(l.substr(p, bar == std::string::npos ? std::string::npos : bar - p)));
      if (bar == std::string::npos) break;
      p = bar + 1;
    }
    if (fields.size() != 4) throw SpecError("term line needs 4 '|'-separated fields", lineno, 1);
    const std::size_t target = std::stoul(fields[0]);
    if (target >= basis_size) throw SpecError("term target out of range", lineno, 1);
    MufTerm term;
    term.coeff = Rational(fields[1]);
    term.coeff.canonicalize();
    if (sgn(term.coeff) == 0) throw SpecError("zero coefficient", lineno, 1);
    term.dist_index = parse_exps(fields[2], sys.dist_vars.size(), lineno);
    for (const auto& f : words(fields[3])) {
      const std::size_t idx = std::stoul(f);
      if (idx >= basis_size) throw SpecError("factor index out of range", lineno, 1);
      term.state_factors.push_back(sys.basis[idx]);
    }
    dist.insert(term.dist_index);
    sys.forms[target].terms.push_back(std::move(term));
  }
  sys.dist_requirements.assign(dist.begin(), dist.end());
  return sys;
}

}  // namespace

void save_system(const MomentStateSystem& system, const std::string& path) {
  write_file_atomic(path, serialize_system(system));
}

MomentStateSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open compiled system '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_system(ss.str());
}

}  // namespace momentprop
