#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "momentprop/errors.hpp"
#include "momentprop/oracle.hpp"

namespace momentprop {

std::optional<std::size_t> MomentTable::find(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

CsvDocument MomentTable::to_csv(std::vector<std::string> comments) const {
  CsvDocument doc;
  doc.comments = std::move(comments);
  doc.header.push_back("t");
  doc.header.insert(doc.header.end(), columns.begin(), columns.end());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> row{std::to_string(times[r])};
    for (double v : rows[r]) row.push_back(format_double(v));
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

MomentTable MomentTable::from_csv(const CsvDocument& doc) {
  if (doc.header.empty() || doc.header.front() != "t") throw SpecError("moment table must start with a 't' column");
  MomentTable table;
  table.columns.assign(doc.header.begin() + 1, doc.header.end());
  for (const auto& row : doc.rows) {
    if (row.size() != doc.header.size()) throw SpecError("ragged row in moment table");
    table.times.push_back(static_cast<std::size_t>(parse_double(row[0])));
    std::vector<double> values;
    for (std::size_t i = 1; i < row.size(); ++i) values.push_back(parse_double(row[i]));
    table.rows.push_back(std::move(values));
  }
  return table;
}

MomentTable exact_table(const MomentStateSystem& system, const MomentTrajectory& traj) {
  MomentTable table;
  for (std::size_t i = 0; i < system.basis.size(); ++i) table.columns.push_back(system.moment_name(i));
  for (const auto& s : traj.states) {
    table.times.push_back(s.time);
    table.rows.push_back(s.values);
  }
  add_covariances(table, system.vars);
  return table;
}

void add_covariances(MomentTable& table, const std::vector<std::string>& vars) {
  const std::size_t n = vars.size();
  const auto find_moment = [&](const MultiIndex& m) { return table.find(m.monomial(vars)); };
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> derivable;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const auto name = covariance_name(vars[i], vars[j]);
      if (table.find(name)) continue;
      const auto a = find_moment(MultiIndex::unit(n, i));
      const auto b = find_moment(MultiIndex::unit(n, j));
      const auto ab = find_moment(MultiIndex::unit(n, i) + MultiIndex::unit(n, j));
      if (!a || !b || !ab) continue;
      derivable.emplace_back(*a, *b, *ab);
      names.push_back(name);
    }
  }
  table.columns.insert(table.columns.end(), names.begin(), names.end());
  for (auto& row : table.rows) {
    for (const auto& [a, b, ab] : derivable) row.push_back(row[ab] - row[a] * row[b]);
  }
}

MomentTable mc_table(const McEstimate& est) {
  MomentTable table;
  for (const auto& c : est.columns) {
    table.columns.push_back(c);
    table.columns.push_back("se(" + c + ")");
  }
  for (std::size_t t = 0; t < est.mean.size(); ++t) {
    table.times.push_back(t);
    std::vector<double> row;
    for (std::size_t k = 0; k < est.columns.size(); ++k) {
      row.push_back(est.mean[t][k]);
      row.push_back(est.se[t][k]);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

MomentTable linear_table(const SystemSpec& spec, const LinearTrajectory& lin) {
  MomentTable table;
  const auto& vars = spec.state_vars;
  const std::size_t n = vars.size();
  table.columns = vars;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) table.columns.push_back(covariance_name(vars[i], vars[j]));
  }
  for (std::size_t t = 0; t < lin.mean.size(); ++t) {
    table.times.push_back(t);
    std::vector<double> row(lin.mean[t].data(), lin.mean[t].data() + lin.mean[t].size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        row.push_back(lin.cov[t](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

double z_score(double value, double mc_mean, double se) {
  const double denom = std::max(se, 1e-12 * std::max(1.0, std::abs(mc_mean)));
  return (value - mc_mean) / denom;
}

CompareReport compare(const MomentTable& exact, const MomentTable& mc, const MomentTable* linear, double threshold) {
  if (exact.times != mc.times) throw SpecError("exact and Monte Carlo tables cover different steps");
  if (linear != nullptr && linear->times != exact.times) {
    throw SpecError("linearized table covers different steps");
  }
  CompareReport report;
  report.threshold = threshold;

  struct Column {
    std::string name;
    std::size_t exact, mean, se;
    std::optional<std::size_t> lin;
  };
  std::vector<Column> cols;
  for (std::size_t k = 0; k < exact.columns.size(); ++k) {
    const auto& name = exact.columns[k];
    const auto mean = mc.find(name);
    const auto se = mc.find("se(" + name + ")");
    if (!mean || !se) continue;
    cols.push_back({name, k, *mean, *se, linear != nullptr ? linear->find(name) : std::nullopt});
  }
  if (cols.empty()) throw SpecError("exact and Monte Carlo tables share no columns");

  for (std::size_t r = 0; r < exact.rows.size(); ++r) {
    for (const auto& c : cols) {
      CompareRow row;
      row.t = exact.times[r];
      row.moment = c.name;
      row.exact = exact.rows[r][c.exact];
      row.mc_mean = mc.rows[r][c.mean];
      row.mc_se = mc.rows[r][c.se];
      row.z_exact = z_score(row.exact, row.mc_mean, row.mc_se);
      report.max_abs_z_exact = std::max(report.max_abs_z_exact, std::abs(row.z_exact));
      if (std::abs(row.z_exact) > threshold) ++report.flagged_exact;
      if (c.lin) {
        row.linear = linear->rows[r][*c.lin];
        row.z_linear = z_score(*row.linear, row.mc_mean, row.mc_se);
        report.max_abs_z_linear = std::max(report.max_abs_z_linear, std::abs(*row.z_linear));
        if (std::abs(*row.z_linear) > threshold) ++report.flagged_linear;
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

CsvDocument CompareReport::to_csv() const {
  CsvDocument doc;
  doc.comments.push_back(" threshold " + format_double(threshold));
  doc.comments.push_back(" max_abs_z_exact " + format_double(max_abs_z_exact) + " flagged " +
                         std::to_string(flagged_exact));
  doc.comments.push_back(" max_abs_z_linear " + format_double(max_abs_z_linear) + " flagged " +
                         std::to_string(flagged_linear));
  doc.header = {"t", "moment", "exact", "mc_mean", "mc_se", "linear", "z_exact", "z_linear", "flag"};
  for (const auto& r : rows) {
    const bool flag = std::abs(r.z_exact) > threshold || (r.z_linear && std::abs(*r.z_linear) > threshold);
    doc.rows.push_back({std::to_string(r.t), r.moment, format_double(r.exact), format_double(r.mc_mean),
                        format_double(r.mc_se), r.linear ? format_double(*r.linear) : "",
                        format_double(r.z_exact), r.z_linear ? format_double(*r.z_linear) : "", flag ? "1" : "0"});
  }
  return doc;
}

CsvDocument CompareReport::plot_data() const {
  std::vector<std::string> moments;
  std::map<std::size_t, std::map<std::string, const CompareRow*>> by_time;
  for (const auto& r : rows) {
    if (std::find(moments.begin(), moments.end(), r.moment) == moments.end()) moments.push_back(r.moment);
    by_time[r.t][r.moment] = &r;
  }
  CsvDocument doc;
  doc.header.push_back("t");
  for (const auto& m : moments) {
    for (const char* suffix : {"exact", "mc", "mc_se", "linear"}) doc.header.push_back(m + ":" + suffix);
  }
  for (const auto& [t, entries] : by_time) {
    std::vector<std::string> row{std::to_string(t)};
    for (const auto& m : moments) {
      const auto it = entries.find(m);
      if (it == entries.end()) {
        row.insert(row.end(), 4, "");
        continue;
      }
      const CompareRow& r = *it->second;
      row.push_back(format_double(r.exact));
      row.push_back(format_double(r.mc_mean));
      row.push_back(format_double(r.mc_se));
      row.push_back(r.linear ? format_double(*r.linear) : "");
    }
    doc.rows.push_back(std::move(row));
  }
  return doc;
}

}  // namespace momentprop
