#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mcgrad::config {

struct Entry {
  std::string value;
  int line = 0;
};

/// INI document: `[section]` headers and `key = value` lines; `#` and `;`
/// start comments. Keys outside a section or repeated keys are errors.
struct IniFile {
  std::string source = "<config>";
  std::map<std::string, std::map<std::string, Entry>> sections;
  /// Line of each section header.
  std::map<std::string, int> section_lines;

  bool has(const std::string& section, const std::string& key) const;
  const Entry* find(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, std::string value);
};

/// Throws ConfigError with "source:line: message".
IniFile parse_ini(std::istream& is, std::string source = "<config>");
IniFile parse_ini_file(const std::string& path);

/// One `section.key=value` line per entry, sections and keys sorted.
std::string canonical_serialization(const IniFile& ini);
std::uint64_t fnv1a64(std::string_view data);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

enum class ExperimentKind {
  CheckConditions,
  SolveRadial,
  Solve2D,
  ValidateBounds,
  FitDecay,
  BernsteinDiagnose,
  Sweep
};

std::string to_string(ExperimentKind k);
/// Accepts the CLI subcommand names (check-conditions, solve-radial, ...).
ExperimentKind parse_kind(std::string_view s);

/// Typed view of a validated configuration. Every key the file may contain
/// is listed here; anything else is rejected with its line number.
struct ExperimentConfig {
  IniFile ini;
  ExperimentKind kind = ExperimentKind::Solve2D;
  std::string model = "zero";
  std::uint64_t seed = 1;
  std::string out = "out";

  // [geometry]
  int n = 2;
  double R = 1.0;
  std::vector<double> R_list;
  int grid = 33;
  std::optional<double> r_in;
  std::optional<double> r_out;

  // [boundary]
  std::string data = "const:0";
  double u0 = 0.0;
  std::optional<double> u_in;
  std::optional<double> u_out;
  double amplitude = 1.0;
  /// Compare the solution against `data` as an exact solution.
  bool exact = false;

  // [theorem]
  std::string bound_case = "E";
  double theta = 1.0;
  double eta = 0.5;
  std::optional<double> C;

  // [condition]
  std::string tag = "A1";
  std::optional<double> m1;
  std::optional<double> m2;
  std::optional<double> m3;
  std::optional<double> cond_theta;
  int magnitudes = 64;
  int directions = 32;

  // [bernstein]
  std::string F = "z";
  std::string h = "one";
  double b = 2.0;
  bool plus_one = true;
  std::optional<double> alpha;
  double z_min = 1e-6;
  std::optional<double> C_suite;

  // [solver]
  double tol = 1e-10;
  double delta_blow = 1e-6;
  std::optional<double> newton_atol;
  int max_newton = 50;
  double krylov_rtol = 1e-4;

  // [sweep]
  std::string sweep = "liouville";
  std::string mode = "grid";
  std::vector<double> eps_list;
  double window_min = 1e-6;
  double window_max = 1e-2;

  // [fit]
  std::vector<std::pair<double, double>> pairs;

  std::string canonical() const { return canonical_serialization(ini); }
  std::uint64_t cache_key() const { return fnv1a64(canonical()); }
};

/// Validates keys and values; throws ConfigError with line numbers.
ExperimentConfig load_config(const IniFile& ini);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace mcgrad::config
