#include "mcgrad/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "mcgrad/error.hpp"
#include "mcgrad/nonlinearity.hpp"

namespace mcgrad::config {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw ConfigError(source + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

bool IniFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const Entry* IniFile::find(const std::string& section, const std::string& key) const {
  auto s = sections.find(section);
  if (s == sections.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void IniFile::set(const std::string& section, const std::string& key, std::string value) {
  sections[section][key] = Entry{std::move(value), 0};
}

IniFile parse_ini(std::istream& is, std::string source) {
  IniFile ini;
  ini.source = std::move(source);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(ini.source, line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail(ini.source, line_no, "empty section name");
      if (ini.section_lines.count(section)) fail(ini.source, line_no, "duplicate section [" + section + "]");
      ini.sections[section];
      ini.section_lines[section] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ini.source, line_no, "expected 'key = value'");
    if (section.empty()) fail(ini.source, line_no, "key outside of a section");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail(ini.source, line_no, "empty key");
    auto& sec = ini.sections[section];
    if (sec.count(key)) fail(ini.source, line_no, "duplicate key '" + key + "'");
    sec[key] = Entry{value, line_no};
  }
  return ini;
}

IniFile parse_ini_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  return parse_ini(is, path);
}

std::string canonical_serialization(const IniFile& ini) {
  // std::map iteration is already sorted by section and key.
  std::string out;
  for (const auto& [section, keys] : ini.sections) {
    for (const auto& [key, entry] : keys) {
      out += section + "." + key + "=" + entry.value + "\n";
    }
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::CheckConditions: return "check-conditions";
    case ExperimentKind::SolveRadial: return "solve-radial";
    case ExperimentKind::Solve2D: return "solve-2d";
    case ExperimentKind::ValidateBounds: return "validate-bounds";
    case ExperimentKind::FitDecay: return "fit-decay";
    case ExperimentKind::BernsteinDiagnose: return "bernstein";
    case ExperimentKind::Sweep: return "sweep";
  }
  return "?";
}

ExperimentKind parse_kind(std::string_view s) {
  for (auto k : {ExperimentKind::CheckConditions, ExperimentKind::SolveRadial,
                 ExperimentKind::Solve2D, ExperimentKind::ValidateBounds, ExperimentKind::FitDecay,
                 ExperimentKind::BernsteinDiagnose, ExperimentKind::Sweep}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + std::string(s) + "'");
}

namespace {

struct Ctx {
  const std::string& source;
  const Entry& e;
  const std::string& key;

  [[noreturn]] void bad(const std::string& what) const {
    fail(source, e.line, "key '" + key + "': " + what + " (got '" + e.value + "')");
  }

  double number() const {
    double v = 0.0;
    const char* first = e.value.data();
    const char* last = first + e.value.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) bad("expected a number");
    return v;
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) bad("expected a positive number");
    return v;
  }
  long long integer(long long lo, long long hi) const {
    long long v = 0;
    auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size()) bad("expected an integer");
    if (v < lo || v > hi) bad("integer out of range");
    return v;
  }
  std::uint64_t unsigned64() const {
    std::uint64_t v = 0;
    auto res = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (res.ec != std::errc() || res.ptr != e.value.data() + e.value.size()) bad("expected an unsigned integer");
    return v;
  }
  bool boolean() const {
    if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
    if (e.value == "false" || e.value == "0" || e.value == "no") return false;
    bad("expected true or false");
  }
  std::string one_of(std::initializer_list<const char*> options) const {
    for (const char* o : options) {
      if (e.value == o) return e.value;
    }
    std::string list;
    for (const char* o : options) list += std::string(list.empty() ? "" : ", ") + o;
    bad("expected one of " + list);
  }
  std::vector<double> numbers() const {
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      double v = 0.0;
      auto res = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() ||
          !(v > 0.0)) {
        bad("expected a comma-separated list of positive numbers");
      }
      out.push_back(v);
    }
    if (out.empty()) bad("empty list");
    return out;
  }
  std::vector<std::pair<double, double>> pairs() const {
    std::vector<std::pair<double, double>> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      const auto colon = item.find(':');
      if (colon == std::string::npos) bad("expected R:g pairs separated by commas");
      const std::string a = trim(std::string_view(item).substr(0, colon));
      const std::string b = trim(std::string_view(item).substr(colon + 1));
      double x = 0.0, y = 0.0;
      auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
      auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
      if (ra.ec != std::errc() || rb.ec != std::errc() || ra.ptr != a.data() + a.size() ||
          rb.ptr != b.data() + b.size()) {
        bad("malformed R:g pair");
      }
      out.emplace_back(x, y);
    }
    return out;
  }
};

using Handler = std::function<void(ExperimentConfig&, const Ctx&)>;

const std::map<std::string, std::map<std::string, Handler>>& schema() {
  static const std::map<std::string, std::map<std::string, Handler>> table = {
      {"experiment",
       {
           {"kind", [](auto& c, const Ctx& x) { c.kind = parse_kind(x.e.value); }},
           {"model", [](auto& c, const Ctx& x) {
              c.model = NonlinearityModel::parse(x.e.value).to_string();
            }},
           {"seed", [](auto& c, const Ctx& x) { c.seed = x.unsigned64(); }},
           {"out", [](auto& c, const Ctx& x) { c.out = x.e.value; }},
       }},
      {"geometry",
       {
           {"n", [](auto& c, const Ctx& x) { c.n = static_cast<int>(x.integer(2, 64)); }},
           {"R", [](auto& c, const Ctx& x) { c.R = x.positive(); }},
           {"R_list", [](auto& c, const Ctx& x) { c.R_list = x.numbers(); }},
           {"grid", [](auto& c, const Ctx& x) { c.grid = static_cast<int>(x.integer(3, 4097)); }},
           {"r_in", [](auto& c, const Ctx& x) { c.r_in = x.positive(); }},
           {"r_out", [](auto& c, const Ctx& x) { c.r_out = x.positive(); }},
       }},
      {"boundary",
       {
           {"data", [](auto& c, const Ctx& x) { c.data = x.e.value; }},
           {"u0", [](auto& c, const Ctx& x) { c.u0 = x.number(); }},
           {"u_in", [](auto& c, const Ctx& x) { c.u_in = x.number(); }},
           {"u_out", [](auto& c, const Ctx& x) { c.u_out = x.number(); }},
           {"amplitude", [](auto& c, const Ctx& x) { c.amplitude = x.number(); }},
           {"exact", [](auto& c, const Ctx& x) { c.exact = x.boolean(); }},
       }},
      {"theorem",
       {
           {"case", [](auto& c, const Ctx& x) {
              c.bound_case = x.one_of({"A", "B", "C", "C-sq", "C-lin", "D", "E"});
            }},
           {"theta", [](auto& c, const Ctx& x) { c.theta = x.positive(); }},
           {"eta", [](auto& c, const Ctx& x) { c.eta = x.positive(); }},
           {"C", [](auto& c, const Ctx& x) { c.C = x.number(); }},
       }},
      {"condition",
       {
           {"tag", [](auto& c, const Ctx& x) { c.tag = x.one_of({"A1", "A2", "A3", "A4"}); }},
           {"m1", [](auto& c, const Ctx& x) { c.m1 = x.number(); }},
           {"m2", [](auto& c, const Ctx& x) { c.m2 = x.number(); }},
           {"m3", [](auto& c, const Ctx& x) { c.m3 = x.number(); }},
           {"theta", [](auto& c, const Ctx& x) { c.cond_theta = x.number(); }},
           {"magnitudes", [](auto& c, const Ctx& x) { c.magnitudes = static_cast<int>(x.integer(2, 100000)); }},
           {"directions", [](auto& c, const Ctx& x) { c.directions = static_cast<int>(x.integer(1, 100000)); }},
       }},
      {"bernstein",
       {
           {"F", [](auto& c, const Ctx& x) { c.F = x.one_of({"z", "log1pz"}); }},
           {"h", [](auto& c, const Ctx& x) { c.h = x.one_of({"one", "power"}); }},
           {"b", [](auto& c, const Ctx& x) { c.b = x.positive(); }},
           {"plus_one", [](auto& c, const Ctx& x) { c.plus_one = x.boolean(); }},
           {"alpha", [](auto& c, const Ctx& x) {
              c.alpha = x.number();
              if (!(*c.alpha >= 1.0)) x.bad("alpha must be >= 1");
            }},
           {"z_min", [](auto& c, const Ctx& x) { c.z_min = x.positive(); }},
           {"C_suite", [](auto& c, const Ctx& x) { c.C_suite = x.number(); }},
       }},
      {"solver",
       {
           {"tol", [](auto& c, const Ctx& x) { c.tol = x.positive(); }},
           {"delta_blow", [](auto& c, const Ctx& x) { c.delta_blow = x.positive(); }},
           {"newton_atol", [](auto& c, const Ctx& x) { c.newton_atol = x.positive(); }},
           {"max_newton", [](auto& c, const Ctx& x) { c.max_newton = static_cast<int>(x.integer(0, 10000)); }},
           {"krylov_rtol", [](auto& c, const Ctx& x) {
              c.krylov_rtol = x.positive();
              if (c.krylov_rtol >= 1.0) x.bad("krylov_rtol must lie in (0, 1)");
            }},
       }},
      {"sweep",
       {
           {"kind", [](auto& c, const Ctx& x) { c.sweep = x.one_of({"liouville", "imcf-envelope"}); }},
           {"mode", [](auto& c, const Ctx& x) { c.mode = x.one_of({"grid", "radial"}); }},
           {"eps_list", [](auto& c, const Ctx& x) { c.eps_list = x.numbers(); }},
           {"window_min", [](auto& c, const Ctx& x) { c.window_min = x.positive(); }},
           {"window_max", [](auto& c, const Ctx& x) { c.window_max = x.positive(); }},
       }},
      {"fit",
       {
           {"pairs", [](auto& c, const Ctx& x) { c.pairs = x.pairs(); }},
       }},
  };
  return table;
}

}  // namespace

ExperimentConfig load_config(const IniFile& ini) {
  ExperimentConfig cfg;
  cfg.ini = ini;
  const auto& table = schema();
  for (const auto& [section, keys] : ini.sections) {
    auto sec = table.find(section);
    if (sec == table.end()) {
      const auto at = ini.section_lines.find(section);
      fail(ini.source, at == ini.section_lines.end() ? 0 : at->second, "unknown section [" + section + "]");
    }
    for (const auto& [key, entry] : keys) {
      auto handler = sec->second.find(key);
      if (handler == sec->second.end()) {
        fail(ini.source, entry.line, "unknown key '" + key + "' in section [" + section + "]");
      }
      try {
        handler->second(cfg, Ctx{ini.source, entry, key});
      } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind(ini.source + ":", 0) == 0) throw;
        fail(ini.source, entry.line, msg);
      }
    }
  }
  if (cfg.eta >= 1.0) {
    const Entry* e = ini.find("theorem", "eta");
    fail(ini.source, e ? e->line : 0, "eta must lie in (0, 1)");
  }
  if (cfg.window_min >= cfg.window_max) {
    const Entry* e = ini.find("sweep", "window_max");
    fail(ini.source, e ? e->line : 0, "window_min must be below window_max");
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) { return load_config(parse_ini_file(path)); }

}  // namespace mcgrad::config
