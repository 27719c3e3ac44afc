#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace momentprop::cli {

enum ExitCode : int { kOk = 0, kRuntime = 1, kInput = 2, kNoPlan = 3 };

struct CompileConfig {
  std::string spec;
  std::string output;
  std::optional<std::string> equations;  // listing file; stdout when absent
  std::vector<std::string> moments;      // overrides the spec's `moments` line
  bool unreduced = false;
};

struct PropagateConfig {
  std::string compiled;
  std::string init;  // CSV path or inline "name=value,..."
  std::string dist;  // spec file carrying `dist` lines
  std::size_t steps = 0;
  std::string output;
  bool fast_stationary = false;
};

struct McConfig {
  std::string spec;
  std::string init;
  std::optional<std::string> compiled;  // moments to estimate; defaults to the spec's completion
  std::size_t steps = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string output;
};

struct LinearizeConfig {
  std::string spec;
  std::string init;
  std::size_t steps = 0;
  double dt = 1.0;
  std::string output;
};

struct CompareConfig {
  std::string exact;
  std::string mc;
  std::optional<std::string> linear;
  std::string output;
  std::optional<std::string> plot;
  double threshold = 5.0;
};

struct PlanConfig {
  std::string spec;
  std::string env;
  double eps = 0.1;
  std::uint64_t seed = 0;
  std::string output;
  std::optional<std::string> tree;
  std::optional<std::string> controls;
  std::size_t iterations = 2000;
  double speed = 0.25;
  double turn_radius = 1.0;
  double max_edge = 2.0;
  double goal_bias = 0.05;
  bool unreduced = false;
};

/// Each command writes its outputs, reports to `out`/`err`, and returns an ExitCode.
int cmd_compile(const CompileConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_propagate(const PropagateConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_mc(const McConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_linearize(const LinearizeConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_plan(const PlanConfig& cfg, std::ostream& out, std::ostream& err);

/// Initial values by name from a CSV file (header + one row) or "a=1,b=2".
std::vector<std::pair<std::string, double>> read_assignments(const std::string& arg);

}  // namespace momentprop::cli
