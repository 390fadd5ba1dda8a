#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcgrad {

enum class Family { Zero, Power, Imcf, LogPower, BoundedRatio, Constant };

/// Right-hand side f(p) of div(grad u / sqrt(1 + |grad u|^2)) = f(grad u).
///
/// Every built-in family depends on p only through |p|, so the model is
/// described by its radial profile fhat(s) = f(p) for |p| = |s|. Models are
/// immutable values.
class NonlinearityModel {
 public:
  static NonlinearityModel zero();
  /// f(p) = |p|^theta
  static NonlinearityModel power(double theta);
  /// f(p) = eps * sqrt(1 + |p|^2)
  static NonlinearityModel imcf(double eps);
  /// f(p) = m1 * log(1 + |p|^2)^theta
  static NonlinearityModel log_power(double theta, double m1);
  /// f(p) = |p| / sqrt(1 + |p|^2)
  static NonlinearityModel bounded_ratio();
  /// f(p) = H
  static NonlinearityModel constant(double H);

  /// Parses `zero`, `power:θ`, `imcf:ε`, `logpow:θ,m1`, `ratio`, `const:H`.
  /// Throws ConfigError on malformed input or out-of-range parameters.
  static NonlinearityModel parse(std::string_view spec);

  /// Canonical spec string; parse(to_string()) reproduces the model exactly.
  std::string to_string() const;

  Family family() const { return family_; }
  double theta() const { return theta_; }
  double eps() const { return eps_; }
  double m1() const { return m1_; }
  double H() const { return H_; }

  /// f at |p|^2 = z. All families are evaluated from z so that the value is
  /// bit-identical however |p| was assembled.
  double value_from_z(double z) const;
  /// fhat(s) = f at |p| = |s|.
  double radial(double s) const { return value_from_z(s * s); }
  /// d fhat / d|p| at |p| = s >= 0. Zero at s = 0 for families that are not
  /// differentiable there (see non_smooth_at_origin).
  double radial_slope(double s) const;
  /// lim_{|p|->inf} f(p); +inf for unbounded families.
  double value_at_infinity() const;

  double value(std::span<const double> p) const;
  /// grad_p f. Returns the zero vector at p = 0.
  std::vector<double> gradient(std::span<const double> p) const;

  /// 2-D fast paths used by the grid solver.
  double value2(double px, double py) const { return value_from_z(px * px + py * py); }
  void gradient2(double px, double py, double& gx, double& gy) const;

  /// f is not C^1 at p = 0 (Power θ <= 1, LogPower θ <= 1/2, BoundedRatio).
  /// grad_f(0) is defined as 0 and condition sampling skips |p| < 1e-8.
  bool non_smooth_at_origin() const;

  friend bool operator==(const NonlinearityModel&, const NonlinearityModel&) = default;

 private:
  NonlinearityModel(Family f, double theta, double eps, double m1, double H)
      : family_(f), theta_(theta), eps_(eps), m1_(m1), H_(H) {}

  Family family_;
  double theta_;
  double eps_;
  double m1_;
  double H_;
};

// ---------------------------------------------------------------------------
// Structural conditions (A1)-(A4)

enum class ConditionTag { A1, A2, A3, A4 };

std::string to_string(ConditionTag tag);
ConditionTag parse_condition_tag(std::string_view s);

/// Constants for one structural condition. Unused constants are ignored.
///   A1: f^2 - m1 |p|^2 |grad f|^2 >= m2 |p|^(2θ),                       θ > 0
///   A2: f^2 - m1 (1+|p|^2) log(1+|p|^2) |grad f|^2 >= m2 log^(2θ)(1+|p|^2)
///       and |f| <= m3 log^θ(1+|p|^2),                                    θ > 1
///   A3: |f| = m1 log^θ(1+|p|^2),                                          0 < θ <= 1
///   A4: f^2 - m1 (1+|p|^2)^2 log(1+|p|^2) |grad f|^2 >= 0 and |f| <= m2
struct ConditionSpec {
  ConditionTag tag = ConditionTag::A1;
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
  double theta = 0.0;

  /// Throws ConfigError when the constants violate the condition's ranges.
  void validate() const;
};

struct SampleSpec {
  int magnitudes = 64;
  int directions = 32;
  double min_magnitude = 1e-6;
  double max_magnitude = 1e6;
  int dim = 2;
  std::uint64_t seed = 1;
};

struct ConditionReport {
  bool holds = false;
  std::size_t samples_checked = 0;
  /// Minimum over samples of (lhs - rhs) / scale, where scale is the sum of
  /// the absolute values of the terms. Values within 1e-12 of zero are
  /// rounded to zero so that exact identities do not fail on rounding.
  double worst_margin = 0.0;
  std::optional<std::vector<double>> witness;
};

/// Deterministic sample set: log-spaced magnitudes crossed with unit
/// directions drawn from SplitMix64(seed).
std::vector<std::vector<double>> condition_samples(const SampleSpec& sampling,
                                                   bool skip_origin);

ConditionReport check_condition(const NonlinearityModel& model, const ConditionSpec& spec,
                                const SampleSpec& sampling = {});

/// Calibrates constants for `tag` by grid search; nullopt means infeasible.
std::optional<ConditionSpec> synthesize_constants(const NonlinearityModel& model,
                                                  ConditionTag tag,
                                                  const SampleSpec& sampling = {});

}  // namespace mcgrad
