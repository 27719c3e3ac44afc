#include "momentprop/multi_index.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include "momentprop/errors.hpp"

namespace momentprop {

SpecError::SpecError(const std::string& message, std::size_t line, std::size_t column)
    : Error(line == 0 ? message
                      : std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

MultiIndex MultiIndex::unit(std::size_t nvars, std::size_t i, value_type power) {
  MultiIndex m(nvars);
  m.exps_.at(i) = power;
  return m;
}

std::uint64_t MultiIndex::total_degree() const noexcept {
  return std::accumulate(exps_.begin(), exps_.end(), std::uint64_t{0});
}

bool MultiIndex::is_zero() const noexcept {
  return std::all_of(exps_.begin(), exps_.end(), [](value_type e) { return e == 0; });
}

MultiIndex MultiIndex::operator+(const MultiIndex& other) const {
  if (other.size() != size()) {
    throw SpecError("multi-index length mismatch: " + std::to_string(size()) + " vs " +
                    std::to_string(other.size()));
  }
  MultiIndex out(*this);
  for (std::size_t i = 0; i < size(); ++i) out.exps_[i] += other.exps_[i];
  return out;
}

std::pair<MultiIndex, MultiIndex> MultiIndex::split(std::size_t n) const {
  n = std::min(n, size());
  return {MultiIndex(std::vector<value_type>(exps_.begin(), exps_.begin() + n)),
          MultiIndex(std::vector<value_type>(exps_.begin() + n, exps_.end()))};
}

MultiIndex MultiIndex::concat(const MultiIndex& head, const MultiIndex& tail) {
  std::vector<value_type> e(head.exps_);
  e.insert(e.end(), tail.exps_.begin(), tail.exps_.end());
  return MultiIndex(std::move(e));
}

std::string MultiIndex::monomial(std::span<const std::string> names) const {
  std::string out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (exps_[i] == 0) continue;
    if (!out.empty()) out += '*';
    out += i < names.size() ? names[i] : "v" + std::to_string(i);
    if (exps_[i] > 1) out += '^' + std::to_string(exps_[i]);
  }
  return out.empty() ? "1" : out;
}

bool GradedLexLess::operator()(const MultiIndex& a, const MultiIndex& b) const noexcept {
  const auto da = a.total_degree();
  const auto db = b.total_degree();
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::size_t MultiIndexHash::operator()(const MultiIndex& m) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto e : m) {
    h ^= e + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

MultiIndex parse_monomial(const std::string& text, std::span<const std::string> names) {
  MultiIndex out(names.size());
  if (text == "1") return out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto star = text.find('*', pos);
    const std::string factor =
        text.substr(pos, star == std::string::npos ? std::string::npos : star - pos);
    if (factor.empty()) throw SpecError("malformed monomial '" + text + "'");
    const auto caret = factor.find('^');
    const std::string name = factor.substr(0, caret);
    MultiIndex::value_type power = 1;
    if (caret != std::string::npos) {
      const std::string ptext = factor.substr(caret + 1);
      const auto res = std::from_chars(ptext.data(), ptext.data() + ptext.size(), power);
      if (res.ec != std::errc{} || res.ptr != ptext.data() + ptext.size() || power == 0) {
        throw SpecError("malformed exponent in monomial '" + text + "'");
      }
    }
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SpecError("unknown variable '" + name + "' in monomial '" + text + "'");
    out[static_cast<std::size_t>(it - names.begin())] += power;
    if (star == std::string::npos) break;
    pos = star + 1;
  }
  return out;
}

}  // namespace momentprop
