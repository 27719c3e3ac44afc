#include <cstdlib>
#include "momentprop/sysspec.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "momentprop/errors.hpp"

namespace momentprop {

namespace {

struct Token {
  enum class Kind { Ident, Number, Punct, End };
  Kind kind = Kind::End;
  std::string text;
  std::size_t col = 0;  // 1-based
};

std::vector<Token> tokenize(const std::string& line, std::size_t lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char ch = line[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    Token tok;
    tok.col = i + 1;
    if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
      tok.kind = Token::Kind::Ident;
      tok.text = line.substr(i, j - i);
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(ch)) || (ch == '.' && i + 1 < line.size() &&
                                                                 std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      if (j < line.size() && line[j] == '.') {
        ++j;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      }
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          while (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) ++k;
          j = k;
        }
      }
      tok.kind = Token::Kind::Number;
      tok.text = line.substr(i, j - i);
      i = j;
    } else if (std::string_view("'=+-*^(){},").find(ch) != std::string_view::npos) {
      tok.kind = Token::Kind::Punct;
      tok.text = std::string(1, ch);
      ++i;
    } else {
      throw SpecError(std::string("unexpected character '") + ch + "'", lineno, i + 1);
    }
    out.push_back(std::move(tok));
  }
  Token end;
  end.kind = Token::Kind::End;
  end.col = line.size() + 1;
  // Trailing sentinels so fixed-position lookahead never runs off the end.
  out.insert(out.end(), 8, end);
  return out;
}

struct Occurrence {
  std::size_t dist = 0;
  bool trig = false;
  std::size_t line = 0;
  std::size_t col = 0;
};

class ExprParser {
 public:
  ExprParser(const SystemSpec& spec, const std::vector<Token>& toks, std::size_t pos, std::size_t line,
             bool angle_update, std::vector<Occurrence>& uses)
      : spec_(spec), toks_(toks), pos_(pos), line_(line), angle_update_(angle_update), uses_(uses) {}

  Expr parse() {
    Expr e = expr();
    if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "'");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool accept(const char* punct) {
    if (peek().kind == Token::Kind::Punct && peek().text == punct) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(const char* punct) {
    if (!accept(punct)) fail(std::string("expected '") + punct + "'");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw SpecError(msg, line_, peek().col); }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept("+")) {
        e = Expr::add(std::move(e), term());
      } else if (accept("-")) {
        e = Expr::sub(std::move(e), term());
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = factor();
    while (accept("*")) e = Expr::mul(std::move(e), factor());
    return e;
  }

  Expr factor() {
    if (accept("-")) return Expr::neg(factor());
    Expr b = base();
    if (accept("^")) {
      const Token& t = peek();
      if (t.kind != Token::Kind::Number || t.text.find_first_not_of("0123456789") != std::string::npos) {
        fail("exponent must be a non-negative integer");
      }
      next();
      const unsigned long n = std::stoul(t.text);
      if (n > 64) fail("exponent too large");
      return Expr::pow(std::move(b), static_cast<std::uint32_t>(n));
    }
    return b;
  }

  Expr base() {
    const Token& t = peek();
    if (t.kind == Token::Kind::Number) {
      next();
      return Expr::number(parse_decimal(t.text));
    }
    if (accept("(")) {
      Expr e = expr();
      expect(")");
      return e;
    }
    if (t.kind != Token::Kind::Ident) fail("expected a variable, number or '('");
    next();
    if ((t.text == "sin" || t.text == "cos") && peek().kind == Token::Kind::Punct && peek().text == "(") {
      next();
      const Token& arg = peek();
      if (arg.kind != Token::Kind::Ident) fail("sin/cos take a single variable name");
      next();
      expect(")");
      const Symbol sym = trig_symbol(arg);
      return t.text == "sin" ? Expr::sin(sym) : Expr::cos(sym);
    }
    return Expr::var(plain_symbol(t));
  }

  Symbol trig_symbol(const Token& t) {
    if (auto s = find_state(t.text)) {
      if (!spec_.is_angle[*s]) {
        throw SpecError("sin/cos argument '" + t.text + "' is not a declared angle", line_, t.col);
      }
      return {Symbol::Kind::State, *s};
    }
    if (auto d = find_dist(t.text)) {
      uses_.push_back({*d, true, line_, t.col});
      return {Symbol::Kind::Disturbance, *d};
    }
    throw SpecError("undeclared symbol '" + t.text + "'", line_, t.col);
  }

  Symbol plain_symbol(const Token& t) {
    if (auto s = find_state(t.text)) {
      if (spec_.is_angle[*s] && !angle_update_) {
        throw SpecError("angle '" + t.text + "' may only appear inside sin/cos", line_, t.col);
      }
      return {Symbol::Kind::State, *s};
    }
    if (auto d = find_dist(t.text)) {
      // Angle increments are classified after the whole update is parsed.
      if (!angle_update_) uses_.push_back({*d, false, line_, t.col});
      return {Symbol::Kind::Disturbance, *d};
    }
    throw SpecError("undeclared symbol '" + t.text + "'", line_, t.col);
  }

  std::optional<std::size_t> find_state(const std::string& n) const {
    const auto it = std::find(spec_.state_vars.begin(), spec_.state_vars.end(), n);
    if (it == spec_.state_vars.end()) return std::nullopt;
    return static_cast<std::size_t>(it - spec_.state_vars.begin());
  }
  std::optional<std::size_t> find_dist(const std::string& n) const {
    const auto it = std::find(spec_.disturbance_vars.begin(), spec_.disturbance_vars.end(), n);
    if (it == spec_.disturbance_vars.end()) return std::nullopt;
    return static_cast<std::size_t>(it - spec_.disturbance_vars.begin());
  }

  const SystemSpec& spec_;
  const std::vector<Token>& toks_;
  std::size_t pos_;
  std::size_t line_;
  bool angle_update_;
  std::vector<Occurrence>& uses_;
};

// Flattens + / - / unary - into signed leaves.
void flatten_sum(const Expr& e, int sign, std::vector<std::pair<int, const Expr*>>& out) {
  switch (e.op()) {
    case Expr::Op::Add:
      flatten_sum(e.args()[0], sign, out);
      flatten_sum(e.args()[1], sign, out);
      return;
    case Expr::Op::Sub:
      flatten_sum(e.args()[0], sign, out);
      flatten_sum(e.args()[1], -sign, out);
      return;
    case Expr::Op::Neg:
      flatten_sum(e.args()[0], -sign, out);
      return;
    default:
      out.emplace_back(sign, &e);
  }
}

std::string strip_comment(const std::string& line) {
  const auto hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

double parse_signed_number(const std::vector<Token>& toks, std::size_t& pos, std::size_t line) {
  bool neg = false;
  if (toks[pos].kind == Token::Kind::Punct && (toks[pos].text == "-" || toks[pos].text == "+")) {
    neg = toks[pos].text == "-";
    ++pos;
  }
  if (toks[pos].kind != Token::Kind::Number) throw SpecError("expected a number", line, toks[pos].col);
  const double v = std::strtod(toks[pos].text.c_str(), nullptr);
  ++pos;
  return neg ? -v : v;
}

}  // namespace

std::size_t SystemSpec::state_index(const std::string& name) const {
  const auto it = std::find(state_vars.begin(), state_vars.end(), name);
  if (it == state_vars.end()) throw SpecError("unknown state variable '" + name + "'");
  return static_cast<std::size_t>(it - state_vars.begin());
}

std::size_t SystemSpec::disturbance_index(const std::string& name) const {
  const auto it = std::find(disturbance_vars.begin(), disturbance_vars.end(), name);
  if (it == disturbance_vars.end()) throw SpecError("unknown disturbance '" + name + "'");
  return static_cast<std::size_t>(it - disturbance_vars.begin());
}

std::vector<std::string> SystemSpec::encoded_state_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < state_vars.size(); ++i) {
    if (is_angle[i]) {
      out.push_back(angle_names[i].first);
      out.push_back(angle_names[i].second);
    } else {
      out.push_back(state_vars[i]);
    }
  }
  return out;
}

DisturbanceModel SystemSpec::disturbance_model() const {
  DisturbanceModel model;
  for (std::size_t i = 0; i < disturbance_vars.size(); ++i) {
    if (distributions[i]) model.set(disturbance_vars[i], *distributions[i]);
  }
  return model;
}

SystemSpec parse_spec(const std::string& text) {
  SystemSpec spec;
  std::vector<std::string> lines;
  {
    std::istringstream is(text);
    std::string l;
    while (std::getline(is, l)) {
      if (!l.empty() && l.back() == '\r') l.pop_back();
      lines.push_back(strip_comment(l));
    }
  }

  std::set<std::string> declared;
  std::vector<std::size_t> state_line;
  auto declare = [&](const Token& t, std::size_t lineno) {
    if (t.kind != Token::Kind::Ident) throw SpecError("expected a variable name", lineno, t.col);
    if (t.text == "sin" || t.text == "cos") throw SpecError("'" + t.text + "' is reserved", lineno, t.col);
    if (!declared.insert(t.text).second) throw SpecError("duplicate name '" + t.text + "'", lineno, t.col);
  };

  // Pass 1: declarations.
  std::vector<std::pair<std::size_t, std::vector<Token>>> angle_lines;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t lineno = li + 1;
    const auto toks = tokenize(lines[li], lineno);
    if (toks.front().kind == Token::Kind::End) continue;
    const std::string& kw = toks.front().text;
    if (kw == "state" || kw == "disturbance") {
      if (toks.size() < 3) throw SpecError("'" + kw + "' needs at least one name", lineno, toks.front().col);
      for (std::size_t i = 1; toks[i].kind != Token::Kind::End; ++i) {
        declare(toks[i], lineno);
        if (kw == "state") {
          spec.state_vars.push_back(toks[i].text);
          state_line.push_back(lineno);
        } else {
          spec.disturbance_vars.push_back(toks[i].text);
        }
      }
    } else if (kw == "angle") {
      angle_lines.emplace_back(lineno, toks);
    } else if (kw != "dyn" && kw != "dist" && kw != "independent" && kw != "moments") {
      throw SpecError("unknown statement '" + kw + "'", lineno, toks.front().col);
    }
  }
  if (spec.state_vars.empty()) throw SpecError("no state variables declared");

  const std::size_t nx = spec.state_vars.size();
  const std::size_t nw = spec.disturbance_vars.size();
  spec.is_angle.assign(nx, false);
  spec.angle_names.assign(nx, {});
  spec.angle_increments.assign(nx, {});
  spec.disturbance_is_trig.assign(nw, false);
  spec.distributions.assign(nw, std::nullopt);

  std::set<std::string> encoded_names;
  for (const auto& [lineno, toks] : angle_lines) {
    std::size_t i = 1;
    if (toks[i].kind == Token::Kind::End) throw SpecError("'angle' needs at least one name", lineno, toks[0].col);
    while (toks[i].kind != Token::Kind::End) {
      const Token& t = toks[i++];
      const auto it = std::find(spec.state_vars.begin(), spec.state_vars.end(), t.text);
      if (t.kind != Token::Kind::Ident || it == spec.state_vars.end()) {
        throw SpecError("angle '" + t.text + "' is not a declared state variable", lineno, t.col);
      }
      const auto idx = static_cast<std::size_t>(it - spec.state_vars.begin());
      if (spec.is_angle[idx]) throw SpecError("angle '" + t.text + "' declared twice", lineno, t.col);
      spec.is_angle[idx] = true;
      std::pair<std::string, std::string> names{"cos_" + t.text, "sin_" + t.text};
      if (toks[i].kind == Token::Kind::Ident && toks[i].text == "as") {
        if (toks[i + 1].kind != Token::Kind::Ident || toks[i + 2].kind != Token::Kind::Ident) {
          throw SpecError("'as' must be followed by the cosine and sine names", lineno, toks[i].col);
        }
        declare(toks[i + 1], lineno);
        declare(toks[i + 2], lineno);
        names = {toks[i + 1].text, toks[i + 2].text};
        i += 3;
      }
      spec.angle_names[idx] = names;
    }
  }
  // Generated names must not shadow declared ones.
  for (std::size_t i = 0; i < nx; ++i) {
    if (!spec.is_angle[i]) continue;
    for (const auto* n : {&spec.angle_names[i].first, &spec.angle_names[i].second}) {
      if (!encoded_names.insert(*n).second ||
          (std::find(spec.state_vars.begin(), spec.state_vars.end(), *n) != spec.state_vars.end()) ||
          (std::find(spec.disturbance_vars.begin(), spec.disturbance_vars.end(), *n) !=
           spec.disturbance_vars.end())) {
        throw SpecError("encoded name '" + *n + "' clashes with another variable");
      }
    }
  }

  // Pass 2: dynamics, distributions, independence, moments.
  std::vector<Occurrence> uses;
  std::vector<bool> has_update(nx, false);
  spec.updates.assign(nx, Expr::number(0));
  const auto encoded = spec.encoded_state_names();

  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::size_t lineno = li + 1;
    const auto toks = tokenize(lines[li], lineno);
    if (toks.front().kind == Token::Kind::End) continue;
    const std::string& kw = toks.front().text;

    if (kw == "dyn") {
      const Token& name = toks[1];
      if (name.kind != Token::Kind::Ident) throw SpecError("expected a state name after 'dyn'", lineno, name.col);
      const auto it = std::find(spec.state_vars.begin(), spec.state_vars.end(), name.text);
      if (it == spec.state_vars.end()) {
        throw SpecError("'" + name.text + "' is not a declared state variable", lineno, name.col);
      }
      const auto idx = static_cast<std::size_t>(it - spec.state_vars.begin());
      if (toks[2].kind != Token::Kind::Punct || toks[2].text != "'") throw SpecError("expected \"'\"", lineno, toks[2].col);
      if (toks[3].kind != Token::Kind::Punct || toks[3].text != "=") throw SpecError("expected '='", lineno, toks[3].col);
      if (has_update[idx]) throw SpecError("second update for '" + name.text + "'", lineno, name.col);
      has_update[idx] = true;
      ExprParser parser(spec, toks, 4, lineno, spec.is_angle[idx], uses);
      spec.updates[idx] = parser.parse();

      if (spec.is_angle[idx]) {
        std::vector<std::pair<int, const Expr*>> leaves;
        flatten_sum(spec.updates[idx], 1, leaves);
        bool self_seen = false;
        for (const auto& [sign, leaf] : leaves) {
          const bool is_self = leaf->op() == Expr::Op::Var && leaf->symbol().kind == Symbol::Kind::State &&
                               leaf->symbol().index == idx && sign > 0 && !self_seen;
          if (is_self) {
            self_seen = true;
          } else if (leaf->op() == Expr::Op::Var && leaf->symbol().kind == Symbol::Kind::Disturbance) {
            spec.angle_increments[idx].push_back({leaf->symbol().index, sign});
            uses.push_back({leaf->symbol().index, true, lineno, toks[4].col});
          } else {
            throw SpecError("angle update must have the form " + name.text + " + (sum of +/- disturbances)",
                            lineno, toks[4].col);
          }
        }
        if (!self_seen) {
          throw SpecError("angle update must have the form " + name.text + " + (sum of +/- disturbances)",
                          lineno, toks[4].col);
        }
      }
    } else if (kw == "dist") {
      const Token& name = toks[1];
      const auto it = std::find(spec.disturbance_vars.begin(), spec.disturbance_vars.end(), name.text);
      if (name.kind != Token::Kind::Ident || it == spec.disturbance_vars.end()) {
        throw SpecError("'" + name.text + "' is not a declared disturbance", lineno, name.col);
      }
      const auto idx = static_cast<std::size_t>(it - spec.disturbance_vars.begin());
      if (spec.distributions[idx]) throw SpecError("second distribution for '" + name.text + "'", lineno, name.col);
      if (toks[2].text != "=") throw SpecError("expected '='", lineno, toks[2].col);
      const Token& kind = toks[3];
      if (toks[4].text != "(") throw SpecError("expected '('", lineno, toks[4].col);
      std::size_t pos = 5;
      std::vector<double> args;
      args.push_back(parse_signed_number(toks, pos, lineno));
      while (toks[pos].kind == Token::Kind::Punct && toks[pos].text == ",") {
        ++pos;
        args.push_back(parse_signed_number(toks, pos, lineno));
      }
      if (toks[pos].text != ")") throw SpecError("expected ')'", lineno, toks[pos].col);
      if (toks[pos + 1].kind != Token::Kind::End) throw SpecError("trailing input", lineno, toks[pos + 1].col);
      const std::size_t want = kind.text == "degenerate" ? 1 : 2;
      if (kind.text != "gaussian" && kind.text != "uniform" && kind.text != "beta" && kind.text != "degenerate") {
        throw SpecError("unknown distribution '" + kind.text + "'", lineno, kind.col);
      }
      if (args.size() != want) {
        throw SpecError(kind.text + " takes " + std::to_string(want) + " argument(s)", lineno, kind.col);
      }
      try {
        if (kind.text == "gaussian") {
          spec.distributions[idx] = Distribution::gaussian(args[0], args[1]);
        } else if (kind.text == "uniform") {
          spec.distributions[idx] = Distribution::uniform(args[0], args[1]);
        } else if (kind.text == "beta") {
          spec.distributions[idx] = Distribution::beta(args[0], args[1]);
        } else {
          spec.distributions[idx] = Distribution::degenerate(args[0]);
        }
      } catch (const SpecError& e) {
        throw SpecError(e.what(), lineno, kind.col);
      }
    } else if (kw == "independent") {
      IndependenceDecl decl;
      decl.line = lineno;
      std::size_t pos = 1;
      for (auto* group : {&decl.first, &decl.second}) {
        if (toks[pos].text != "{") throw SpecError("expected '{'", lineno, toks[pos].col);
        ++pos;
        while (toks[pos].kind == Token::Kind::Ident) {
          const Token& t = toks[pos++];
          std::size_t idx = nx;
          for (std::size_t i = 0; i < nx; ++i) {
            if (spec.state_vars[i] == t.text ||
                (spec.is_angle[i] && (spec.angle_names[i].first == t.text || spec.angle_names[i].second == t.text))) {
              idx = i;
            }
          }
          if (idx == nx) throw SpecError("'" + t.text + "' is not a state variable", lineno, t.col);
          if (std::find(group->begin(), group->end(), idx) == group->end()) group->push_back(idx);
        }
        if (toks[pos].text != "}") throw SpecError("expected '}'", lineno, toks[pos].col);
        ++pos;
        if (group->empty()) throw SpecError("empty independence group", lineno, toks[pos - 1].col);
      }
      if (toks[pos].kind != Token::Kind::End) throw SpecError("trailing input", lineno, toks[pos].col);
      for (auto a : decl.first) {
        if (std::find(decl.second.begin(), decl.second.end(), a) != decl.second.end()) {
          throw SpecError("'" + spec.state_vars[a] + "' cannot be independent of itself", lineno, toks[1].col);
        }
      }
      spec.independence.push_back(std::move(decl));
    } else if (kw == "moments") {
      const std::string& raw = lines[li];
      std::size_t p = raw.find("moments") + 7;
      while (p < raw.size()) {
        while (p < raw.size() && std::isspace(static_cast<unsigned char>(raw[p]))) ++p;
        if (p >= raw.size()) break;
        std::size_t q = p;
        while (q < raw.size() && !std::isspace(static_cast<unsigned char>(raw[q]))) ++q;
        const std::string mono = raw.substr(p, q - p);
        try {
          const MultiIndex m = parse_monomial(mono, encoded);
          if (m.is_zero()) throw SpecError("the constant moment cannot be requested");
        } catch (const SpecError& e) {
          throw SpecError(e.what(), lineno, p + 1);
        }
        spec.target_moments.push_back(mono);
        p = q;
      }
    }
  }

  for (std::size_t i = 0; i < nx; ++i) {
    if (!has_update[i]) throw SpecError("no 'dyn' update for state '" + spec.state_vars[i] + "'", state_line[i], 1);
  }

  // Each disturbance is used either polynomially or trigonometrically.
  std::vector<std::optional<Occurrence>> first_use(nw);
  for (const auto& u : uses) {
    if (!first_use[u.dist]) {
      first_use[u.dist] = u;
      spec.disturbance_is_trig[u.dist] = u.trig;
    } else if (first_use[u.dist]->trig != u.trig) {
      throw SpecError("disturbance '" + spec.disturbance_vars[u.dist] +
                          "' is used both polynomially and inside sin/cos",
                      u.line, u.col);
    }
  }
  return spec;
}

SystemSpec load_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_spec(ss.str());
}

DependenceGraph DependenceGraph::complete(std::vector<std::string> vertices) {
  DependenceGraph g;
  const std::size_t n = vertices.size();
  g.vertices_ = std::move(vertices);
  g.adj_.assign(n, std::vector<bool>(n, true));
  for (std::size_t i = 0; i < n; ++i) g.adj_[i][i] = false;
  return g;
}

DependenceGraph DependenceGraph::edgeless(std::vector<std::string> vertices) {
  DependenceGraph g;
  const std::size_t n = vertices.size();
  g.vertices_ = std::move(vertices);
  g.adj_.assign(n, std::vector<bool>(n, false));
  return g;
}

bool DependenceGraph::adjacent(std::size_t i, std::size_t j) const { return adj_.at(i).at(j); }

void DependenceGraph::add_edge(std::size_t i, std::size_t j) {
  if (i == j) return;
  adj_.at(i).at(j) = true;
  adj_.at(j).at(i) = true;
}

void DependenceGraph::remove_edge(std::size_t i, std::size_t j) {
  adj_.at(i).at(j) = false;
  adj_.at(j).at(i) = false;
}

std::vector<std::pair<std::size_t, std::size_t>> DependenceGraph::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) {
      if (adj_[i][j]) out.emplace_back(i, j);
    }
  }
  return out;
}

std::vector<std::vector<std::size_t>> DependenceGraph::components() const {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> seen(size(), false);
  for (std::size_t s = 0; s < size(); ++s) {
    if (seen[s]) continue;
    std::vector<std::size_t> comp{s}, stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < size(); ++v) {
        if (adj_[u][v] && !seen[v]) {
          seen[v] = true;
          comp.push_back(v);
          stack.push_back(v);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

std::vector<MultiIndex> components_of_support(const DependenceGraph& graph, const MultiIndex& beta_x) {
  if (beta_x.size() != graph.size()) throw SpecError("multi-index does not match the dependence graph");
  std::vector<MultiIndex> blocks;
  std::vector<bool> seen(beta_x.size(), false);
  for (std::size_t s = 0; s < beta_x.size(); ++s) {
    if (beta_x[s] == 0 || seen[s]) continue;
    MultiIndex block(beta_x.size());
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      block[u] = beta_x[u];
      for (std::size_t v = 0; v < beta_x.size(); ++v) {
        if (beta_x[v] > 0 && !seen[v] && graph.adjacent(u, v)) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    blocks.push_back(std::move(block));
  }
  std::sort(blocks.begin(), blocks.end(), GradedLexLess{});
  return blocks;
}

namespace {

class Encoder {
 public:
  Encoder(const SystemSpec& spec, const PolynomialSystem& sys,
          std::vector<std::size_t> state_map, std::vector<std::size_t> dist_map)
      : spec_(spec), sys_(sys), state_map_(std::move(state_map)), dist_map_(std::move(dist_map)) {}

  Polynomial var(std::size_t encoded) const { return Polynomial::variable(sys_.ambient, encoded); }

  // Encoded index of the cos variable of a state angle or trig disturbance (sin is +1).
  std::size_t cos_of(const Symbol& s) const {
    return s.kind == Symbol::Kind::State ? state_map_[s.index] : sys_.nx() + dist_map_[s.index];
  }

  Polynomial convert(const Expr& e) const {
    switch (e.op()) {
      case Expr::Op::Number:
        return Polynomial::constant(sys_.ambient, e.value());
      case Expr::Op::Var: {
        const auto& s = e.symbol();
        return var(s.kind == Symbol::Kind::State ? state_map_[s.index] : sys_.nx() + dist_map_[s.index]);
      }
      case Expr::Op::Add:
        return convert(e.args()[0]) + convert(e.args()[1]);
      case Expr::Op::Sub:
        return convert(e.args()[0]) - convert(e.args()[1]);
      case Expr::Op::Mul:
        return convert(e.args()[0]) * convert(e.args()[1]);
      case Expr::Op::Neg:
        return -convert(e.args()[0]);
      case Expr::Op::Pow:
        return convert(e.args()[0]).pow(e.exponent());
      case Expr::Op::Cos:
        return var(cos_of(e.symbol()));
      case Expr::Op::Sin:
        return var(cos_of(e.symbol()) + 1);
    }
    return Polynomial(sys_.ambient);
  }

 private:
  const SystemSpec& spec_;
  const PolynomialSystem& sys_;
  std::vector<std::size_t> state_map_;
  std::vector<std::size_t> dist_map_;
};

}  // namespace

PolynomialSystem trig_encode(const SystemSpec& spec) {
  PolynomialSystem sys;
  std::vector<std::size_t> state_map(spec.state_vars.size());
  for (std::size_t i = 0; i < spec.state_vars.size(); ++i) {
    state_map[i] = sys.vars.size();
    if (spec.is_angle[i]) {
      sys.angle_pairs.push_back({spec.state_vars[i], sys.vars.size(), sys.vars.size() + 1});
      sys.vars.push_back(spec.angle_names[i].first);
      sys.vars.push_back(spec.angle_names[i].second);
    } else {
      sys.vars.push_back(spec.state_vars[i]);
    }
  }
  std::vector<std::size_t> dist_map(spec.disturbance_vars.size());
  for (std::size_t i = 0; i < spec.disturbance_vars.size(); ++i) {
    const auto& name = spec.disturbance_vars[i];
    dist_map[i] = sys.dist_vars.size();
    if (spec.disturbance_is_trig[i]) {
      sys.dist_vars.push_back("cos_" + name);
      sys.dist_links.push_back({name, DisturbanceLink::Role::Cos});
      sys.dist_vars.push_back("sin_" + name);
      sys.dist_links.push_back({name, DisturbanceLink::Role::Sin});
    } else {
      sys.dist_vars.push_back(name);
      sys.dist_links.push_back({name, DisturbanceLink::Role::Raw});
    }
  }
  std::vector<std::string> all = sys.vars;
  all.insert(all.end(), sys.dist_vars.begin(), sys.dist_vars.end());
  sys.ambient = Ambient(std::move(all));

  Encoder enc(spec, sys, state_map, dist_map);
  sys.f.assign(sys.nx(), Polynomial(sys.ambient));
  for (std::size_t i = 0; i < spec.state_vars.size(); ++i) {
    if (!spec.is_angle[i]) {
      sys.f[state_map[i]] = enc.convert(spec.updates[i]);
      continue;
    }
    // cos(a + w) = cos a cos w - sin a sin w ; sin(a + w) = sin a cos w + cos a sin w
    Polynomial c = enc.var(state_map[i]);
    Polynomial s = enc.var(state_map[i] + 1);
    for (const auto& inc : spec.angle_increments[i]) {
      const std::size_t cw_idx = sys.nx() + dist_map[inc.disturbance];
      const Polynomial cw = enc.var(cw_idx);
      const Polynomial sw = inc.sign > 0 ? enc.var(cw_idx + 1) : -enc.var(cw_idx + 1);
      Polynomial nc = c * cw - s * sw;
      Polynomial ns = s * cw + c * sw;
      c = std::move(nc);
      s = std::move(ns);
    }
    sys.f[state_map[i]] = std::move(c);
    sys.f[state_map[i] + 1] = std::move(s);
  }

  sys.graph = DependenceGraph::complete(sys.vars);
  auto expand = [&](std::size_t state) {
    std::vector<std::size_t> out{state_map[state]};
    if (spec.is_angle[state]) out.push_back(state_map[state] + 1);
    return out;
  };
  for (const auto& decl : spec.independence) {
    for (auto a : decl.first) {
      for (auto b : decl.second) {
        for (auto ea : expand(a)) {
          for (auto eb : expand(b)) sys.graph.remove_edge(ea, eb);
        }
      }
    }
  }
  for (const auto& pair : sys.angle_pairs) sys.graph.add_edge(pair.cos_index, pair.sin_index);

  for (const auto& m : spec.target_moments) sys.targets.push_back(parse_monomial(m, sys.vars));
  return sys;
}

std::vector<Diagnostic> validate_independence(const SystemSpec& spec) {
  const std::size_t nx = spec.state_vars.size();
  const std::size_t nw = spec.disturbance_vars.size();
  std::vector<std::vector<bool>> reads(nx, std::vector<bool>(nx, false));
  std::vector<std::vector<bool>> dists(nx, std::vector<bool>(nw, false));
  for (std::size_t i = 0; i < nx; ++i) {
    spec.updates[i].visit_symbols([&](const Symbol& s, bool) {
      if (s.kind == Symbol::Kind::State) {
        reads[i][s.index] = true;
      } else {
        dists[i][s.index] = true;
      }
    });
  }
  // Transitive closure of the read relation.
  auto reach = reads;
  for (std::size_t k = 0; k < nx; ++k) {
    for (std::size_t i = 0; i < nx; ++i) {
      if (!reach[i][k]) continue;
      for (std::size_t j = 0; j < nx; ++j) {
        if (reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::vector<std::vector<bool>> dist_support(nx, std::vector<bool>(nw, false));
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      if (i != j && !reach[i][j]) continue;
      for (std::size_t d = 0; d < nw; ++d) {
        if (dists[j][d]) dist_support[i][d] = true;
      }
    }
  }

  std::vector<Diagnostic> out;
  for (const auto& decl : spec.independence) {
    for (auto a : decl.first) {
      for (auto b : decl.second) {
        const auto& na = spec.state_vars[a];
        const auto& nb = spec.state_vars[b];
        if (reach[a][b] || reach[b][a]) {
          out.push_back({Diagnostic::Severity::Error,
                         "line " + std::to_string(decl.line) + ": '" + na + "' and '" + nb +
                             "' are declared independent but one update depends on the other"});
        }
        for (std::size_t d = 0; d < nw; ++d) {
          if (dist_support[a][d] && dist_support[b][d]) {
            out.push_back({Diagnostic::Severity::Error,
                           "line " + std::to_string(decl.line) + ": '" + na + "' and '" + nb +
                               "' are declared independent but both depend on disturbance '" +
                               spec.disturbance_vars[d] + "'"});
          }
        }
      }
    }
  }
  return out;
}

}  // namespace momentprop
