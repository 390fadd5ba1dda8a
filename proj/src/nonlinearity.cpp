#include "mcgrad/nonlinearity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcgrad/error.hpp"
#include "mcgrad/rng.hpp"

namespace mcgrad {

namespace {

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s, std::string_view whole) {
  double v = 0.0;
  auto first = s.data();
  auto last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ConfigError("invalid number '" + std::string(s) + "' in model spec '" +
                      std::string(whole) + "'");
  }
  if (!std::isfinite(v)) {
    throw ConfigError("non-finite parameter in model spec '" + std::string(whole) + "'");
  }
  return v;
}

void require_positive(double v, const char* name, std::string_view whole) {
  if (!(v > 0.0)) {
    throw ConfigError(std::string(name) + " must be positive in model spec '" +
                      std::string(whole) + "'");
  }
}

}  // namespace

NonlinearityModel NonlinearityModel::zero() { return {Family::Zero, 0, 0, 0, 0}; }

NonlinearityModel NonlinearityModel::power(double theta) {
  if (!(theta > 0.0)) throw ParameterError("power: theta must be positive");
  return {Family::Power, theta, 0, 0, 0};
}

NonlinearityModel NonlinearityModel::imcf(double eps) {
  if (!(eps > 0.0)) throw ParameterError("imcf: eps must be positive");
  return {Family::Imcf, 0, eps, 0, 0};
}

NonlinearityModel NonlinearityModel::log_power(double theta, double m1) {
  if (!(theta > 0.0) || !(m1 > 0.0)) {
    throw ParameterError("logpow: theta and m1 must be positive");
  }
  return {Family::LogPower, theta, 0, m1, 0};
}

NonlinearityModel NonlinearityModel::bounded_ratio() { return {Family::BoundedRatio, 0, 0, 0, 0}; }

NonlinearityModel NonlinearityModel::constant(double H) {
  if (!std::isfinite(H)) throw ParameterError("const: H must be finite");
  return {Family::Constant, 0, 0, 0, H};
}

NonlinearityModel NonlinearityModel::parse(std::string_view spec) {
  const std::string_view whole = spec;
  auto colon = spec.find(':');
  std::string_view name = spec.substr(0, colon);
  std::string_view args = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  const bool has_args = colon != std::string_view::npos;

  auto no_args = [&] {
    if (has_args) throw ConfigError("model '" + std::string(name) + "' takes no parameters");
  };
  auto one_arg = [&] {
    if (!has_args) throw ConfigError("model '" + std::string(name) + "' requires a parameter");
    return parse_double(args, whole);
  };

  if (name == "zero") {
    no_args();
    return zero();
  }
  if (name == "ratio") {
    no_args();
    return bounded_ratio();
  }
  if (name == "power") {
    double theta = one_arg();
    require_positive(theta, "theta", whole);
    return power(theta);
  }
  if (name == "imcf") {
    double eps = one_arg();
    require_positive(eps, "eps", whole);
    return imcf(eps);
  }
  if (name == "const") {
    return constant(one_arg());
  }
  if (name == "logpow") {
    if (!has_args) throw ConfigError("model 'logpow' requires 'theta,m1'");
    auto comma = args.find(',');
    if (comma == std::string_view::npos) throw ConfigError("model 'logpow' requires 'theta,m1'");
    double theta = parse_double(args.substr(0, comma), whole);
    double m1 = parse_double(args.substr(comma + 1), whole);
    require_positive(theta, "theta", whole);
    require_positive(m1, "m1", whole);
    return log_power(theta, m1);
  }
  throw ConfigError("unknown model '" + std::string(whole) + "'");
}

std::string NonlinearityModel::to_string() const {
  switch (family_) {
    case Family::Zero: return "zero";
    case Family::Power: return "power:" + format_double(theta_);
    case Family::Imcf: return "imcf:" + format_double(eps_);
    case Family::LogPower: return "logpow:" + format_double(theta_) + "," + format_double(m1_);
    case Family::BoundedRatio: return "ratio";
    case Family::Constant: return "const:" + format_double(H_);
  }
  return "?";
}

double NonlinearityModel::value_from_z(double z) const {
  switch (family_) {
    case Family::Zero: return 0.0;
    case Family::Power: return std::pow(z, 0.5 * theta_);
    case Family::Imcf: return eps_ * std::sqrt(1.0 + z);
    case Family::LogPower: return m1_ * std::pow(std::log1p(z), theta_);
    case Family::BoundedRatio: return std::sqrt(z / (1.0 + z));
    case Family::Constant: return H_;
  }
  return 0.0;
}

double NonlinearityModel::radial_slope(double s) const {
  s = std::abs(s);
  const double z = s * s;
  switch (family_) {
    case Family::Zero:
    case Family::Constant:
      return 0.0;
    case Family::Power:
      if (s == 0.0) return 0.0;
      return theta_ * std::pow(s, theta_ - 1.0);
    case Family::Imcf:
      return eps_ * s / std::sqrt(1.0 + z);
    case Family::LogPower:
      if (s == 0.0) return 0.0;
      return m1_ * theta_ * std::pow(std::log1p(z), theta_ - 1.0) * 2.0 * s / (1.0 + z);
    case Family::BoundedRatio:
      if (s == 0.0) return 0.0;
      return 1.0 / ((1.0 + z) * std::sqrt(1.0 + z));
  }
  return 0.0;
}

double NonlinearityModel::value_at_infinity() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (family_) {
    case Family::Zero: return 0.0;
    case Family::Power:
    case Family::Imcf:
    case Family::LogPower:
      return inf;
    case Family::BoundedRatio: return 1.0;
    case Family::Constant: return H_;
  }
  return inf;
}

double NonlinearityModel::value(std::span<const double> p) const {
  double z = 0.0;
  for (double pi : p) z += pi * pi;
  return value_from_z(z);
}

std::vector<double> NonlinearityModel::gradient(std::span<const double> p) const {
  std::vector<double> g(p.size(), 0.0);
  double z = 0.0;
  for (double pi : p) z += pi * pi;
  if (z == 0.0) return g;
  const double s = std::sqrt(z);
  const double k = radial_slope(s) / s;
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = k * p[i];
  return g;
}

void NonlinearityModel::gradient2(double px, double py, double& gx, double& gy) const {
  const double z = px * px + py * py;
  if (z == 0.0) {
    gx = gy = 0.0;
    return;
  }
  const double s = std::sqrt(z);
  const double k = radial_slope(s) / s;
  gx = k * px;
  gy = k * py;
}

bool NonlinearityModel::non_smooth_at_origin() const {
  switch (family_) {
    case Family::Power: return theta_ <= 1.0;
    case Family::LogPower: return theta_ <= 0.5;
    case Family::BoundedRatio: return true;
    default: return false;
  }
}

// ---------------------------------------------------------------------------

std::string to_string(ConditionTag tag) {
  switch (tag) {
    case ConditionTag::A1: return "A1";
    case ConditionTag::A2: return "A2";
    case ConditionTag::A3: return "A3";
    case ConditionTag::A4: return "A4";
  }
  return "?";
}

ConditionTag parse_condition_tag(std::string_view s) {
  if (s == "A1" || s == "a1") return ConditionTag::A1;
  if (s == "A2" || s == "a2") return ConditionTag::A2;
  if (s == "A3" || s == "a3") return ConditionTag::A3;
  if (s == "A4" || s == "a4") return ConditionTag::A4;
  throw ConfigError("unknown condition tag '" + std::string(s) + "'");
}

void ConditionSpec::validate() const {
  auto need = [&](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(to_string(tag) + ": constant " + name + " must be positive");
    }
  };
  switch (tag) {
    case ConditionTag::A1:
      need(m1, "m1");
      need(m2, "m2");
      if (!(theta > 0.0)) throw ConfigError("A1: theta must be > 0");
      break;
    case ConditionTag::A2:
      need(m1, "m1");
      need(m2, "m2");
      need(m3, "m3");
      if (!(theta > 1.0)) throw ConfigError("A2: theta must be > 1");
      break;
    case ConditionTag::A3:
      need(m1, "m1");
      if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("A3: theta must lie in (0, 1]");
      break;
    case ConditionTag::A4:
      need(m1, "m1");
      need(m2, "m2");
      break;
  }
}

std::vector<std::vector<double>> condition_samples(const SampleSpec& sampling, bool skip_origin) {
  if (sampling.magnitudes < 1 || sampling.directions < 1 || sampling.dim < 1 ||
      !(sampling.min_magnitude > 0.0) || !(sampling.max_magnitude >= sampling.min_magnitude)) {
    throw ConfigError("invalid sampling specification");
  }
  SplitMix64 rng(sampling.seed);
  std::vector<std::vector<double>> dirs;
  dirs.reserve(sampling.directions);
  for (int d = 0; d < sampling.directions; ++d) {
    std::vector<double> v(sampling.dim);
    double n2 = 0.0;
    do {
      n2 = 0.0;
      for (auto& vi : v) {
        vi = rng.normal();
        n2 += vi * vi;
      }
    } while (n2 < 1e-24);
    const double inv = 1.0 / std::sqrt(n2);
    for (auto& vi : v) vi *= inv;
    dirs.push_back(std::move(v));
  }

  const double lo = std::log(sampling.min_magnitude);
  const double hi = std::log(sampling.max_magnitude);
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(sampling.magnitudes) * sampling.directions);
  for (int k = 0; k < sampling.magnitudes; ++k) {
    const double t = sampling.magnitudes == 1 ? 0.0 : static_cast<double>(k) / (sampling.magnitudes - 1);
    const double mag = std::exp(lo + t * (hi - lo));
    if (skip_origin && mag < 1e-8) continue;
    for (const auto& d : dirs) {
      std::vector<double> p(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) p[i] = mag * d[i];
      out.push_back(std::move(p));
    }
  }
  return out;
}

namespace {

struct PointData {
  double z;
  double f;
  double grad2;
  double logz;  // log(1 + z)
};

PointData evaluate_point(const NonlinearityModel& model, std::span<const double> p) {
  PointData d{};
  d.z = 0.0;
  for (double pi : p) d.z += pi * pi;
  d.f = model.value(p);
  auto g = model.gradient(p);
  d.grad2 = 0.0;
  for (double gi : g) d.grad2 += gi * gi;
  d.logz = std::log1p(d.z);
  return d;
}

double rel_margin(double diff, double scale) {
  if (scale == 0.0 || !std::isfinite(scale)) return diff >= 0.0 ? 0.0 : -1.0;
  double m = diff / scale;
  if (std::abs(m) <= 1e-12) m = 0.0;
  return m;
}

double point_margin(const ConditionSpec& spec, const PointData& d) {
  const double f2 = d.f * d.f;
  switch (spec.tag) {
    case ConditionTag::A1: {
      const double sub = spec.m1 * d.z * d.grad2;
      const double rhs = spec.m2 * std::pow(d.z, spec.theta);
      return rel_margin(f2 - sub - rhs, f2 + sub + rhs);
    }
    case ConditionTag::A2: {
      const double sub = spec.m1 * (1.0 + d.z) * d.logz * d.grad2;
      const double rhs = spec.m2 * std::pow(d.logz, 2.0 * spec.theta);
      const double first = rel_margin(f2 - sub - rhs, f2 + sub + rhs);
      const double cap = spec.m3 * std::pow(d.logz, spec.theta);
      const double second = rel_margin(cap - std::abs(d.f), cap + std::abs(d.f));
      return std::min(first, second);
    }
    case ConditionTag::A3: {
      // Exact-form condition: any deviation is a violation.
      const double target = spec.m1 * std::pow(d.logz, spec.theta);
      const double diff = std::abs(std::abs(d.f) - target);
      if (diff == 0.0) return 0.0;
      const double scale = std::abs(d.f) + target;
      return scale > 0.0 ? -diff / scale : -1.0;
    }
    case ConditionTag::A4: {
      const double sub = spec.m1 * (1.0 + d.z) * (1.0 + d.z) * d.logz * d.grad2;
      const double first = rel_margin(f2 - sub, f2 + sub);
      const double second = rel_margin(spec.m2 - std::abs(d.f), spec.m2 + std::abs(d.f));
      return std::min(first, second);
    }
  }
  return -1.0;
}

}  // namespace

ConditionReport check_condition(const NonlinearityModel& model, const ConditionSpec& spec,
                                const SampleSpec& sampling) {
  spec.validate();
  const auto samples = condition_samples(sampling, model.non_smooth_at_origin());
  ConditionReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& p : samples) {
    const double m = point_margin(spec, evaluate_point(model, p));
    ++report.samples_checked;
    if (m < report.worst_margin) report.worst_margin = m;
    if (m < 0.0 && !report.witness) report.witness = p;
  }
  if (report.samples_checked == 0) report.worst_margin = 0.0;
  report.holds = report.worst_margin >= 0.0;
  return report;
}

namespace {

// Theta candidates 2^(j/4), strongest (largest) first.
std::vector<double> theta_candidates(double min_exclusive) {
  std::vector<double> out;
  for (int j = 12; j >= -12; --j) {
    const double t = std::exp2(j / 4.0);
    if (t > min_exclusive) out.push_back(t);
  }
  return out;
}

// The sampled range is finite, so a wrong growth exponent can still "hold"
// with a tiny constant. A candidate must also hold on a range widened by
// 10^3 at both ends, which a mismatched exponent cannot survive.
bool holds_robustly(const NonlinearityModel& model, const ConditionSpec& spec,
                    const SampleSpec& sampling) {
  if (!check_condition(model, spec, sampling).holds) return false;
  SampleSpec wide = sampling;
  wide.min_magnitude = sampling.min_magnitude * 1e-3;
  wide.max_magnitude = sampling.max_magnitude * 1e3;
  return check_condition(model, spec, wide).holds;
}

constexpr double kShrink = 0.9;
constexpr double kMinRelativeSlack = 1e-9;

}  // namespace

std::optional<ConditionSpec> synthesize_constants(const NonlinearityModel& model, ConditionTag tag,
                                                  const SampleSpec& sampling) {
  const auto samples = condition_samples(sampling, model.non_smooth_at_origin());
  std::vector<PointData> data;
  data.reserve(samples.size());
  for (const auto& p : samples) data.push_back(evaluate_point(model, p));
  if (data.empty()) return std::nullopt;

  if (tag == ConditionTag::A3) {
    if (model.family() != Family::LogPower || model.theta() > 1.0) return std::nullopt;
    ConditionSpec spec{ConditionTag::A3, model.m1(), 0.0, 0.0, model.theta()};
    if (check_condition(model, spec, sampling).holds) return spec;
    return std::nullopt;
  }

  if (tag == ConditionTag::A4) {
    double fmax = 0.0;
    for (const auto& d : data) fmax = std::max(fmax, std::abs(d.f));
    const double m2 = fmax > 0.0 ? fmax / kShrink : 1.0;
    for (int k = 0; k <= 12; ++k) {
      ConditionSpec spec{ConditionTag::A4, std::exp2(-k), m2, 0.0, 0.0};
      if (holds_robustly(model, spec, sampling)) return spec;
    }
    return std::nullopt;
  }

  const bool a2 = tag == ConditionTag::A2;
  for (double theta : theta_candidates(a2 ? 1.0 : 0.0)) {
    for (int k = 0; k <= 12; ++k) {
      const double m1 = std::exp2(-k);
      double min_ratio = std::numeric_limits<double>::infinity();
      double max_cap_ratio = 0.0;
      bool ok = true;
      for (const auto& d : data) {
        const double f2 = d.f * d.f;
        const double sub = a2 ? m1 * (1.0 + d.z) * d.logz * d.grad2 : m1 * d.z * d.grad2;
        const double lhs = f2 - sub;
        if (!(lhs > kMinRelativeSlack * (f2 + sub))) {
          ok = false;
          break;
        }
        const double base = a2 ? std::pow(d.logz, 2.0 * theta) : std::pow(d.z, theta);
        min_ratio = std::min(min_ratio, lhs / base);
        if (a2) max_cap_ratio = std::max(max_cap_ratio, std::abs(d.f) / std::pow(d.logz, theta));
      }
      if (!ok || !(min_ratio > 0.0) || !std::isfinite(min_ratio)) continue;
      ConditionSpec spec{tag, m1, kShrink * min_ratio, a2 ? max_cap_ratio / kShrink : 0.0, theta};
      if (a2 && !(spec.m3 > 0.0 && std::isfinite(spec.m3))) continue;
      if (holds_robustly(model, spec, sampling)) return spec;
    }
  }
  return std::nullopt;
}

}  // namespace mcgrad
