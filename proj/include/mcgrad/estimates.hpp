#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mcgrad/fd2d_solver.hpp"
#include "mcgrad/radial_solver.hpp"

namespace mcgrad::estimates {

/// Interior gradient bounds. A and CLin bound |grad u(0)|, the others bound
/// |grad u(0)|^2. CLin is case C with both branches taken without exp(.) - 1.
enum class BoundCase { A, B, C, CLin, D, E };

std::string to_string(BoundCase c);
/// Accepts A, B, C (or C-sq), C-lin, D, E, case-insensitive.
BoundCase parse_bound_case(std::string_view s);
/// True when the bound is on |grad u|^2.
bool bounds_square(BoundCase c);
/// The quantity the bound controls, given z = |grad u|^2.
double observed_quantity(BoundCase c, double z);

struct BoundParams {
  double R = 1.0;
  double L = 0.0;
  double theta = 1.0;
  double eta = 0.5;
  double C = 1.0;
  /// Second constant of case C; defaults to C.
  std::optional<double> C2;
};

struct BoundEvaluation {
  BoundCase bound_case = BoundCase::A;
  BoundParams params;
  double value = 0.0;
};

/// Throws ParameterError for R <= 0, L < 0, theta <= 1 (B), theta outside
/// (0, 1] (C), eta outside (0, 1) (C), theta <= 0 (A).
double bound_value(BoundCase c, const BoundParams& p);
BoundEvaluation evaluate_bound(BoundCase c, const BoundParams& p);

/// Smallest C with bound_value >= observed; case C uses C1 = C2 = C.
double min_constant(BoundCase c, double observed, double R, double L, double theta, double eta);

/// max - min of u over nodes with |x - center| <= radius.
/// Throws ParameterError if no node lies in the ball.
double oscillation(const fd2d::GridSolution& field, double cx, double cy, double radius);
/// max - min of a radial profile over r in [max(0, r0 - radius), r0 + radius],
/// using the nodes inside plus interpolated endpoints. The interval must lie
/// within the profile.
double oscillation(const radial::RadialSolution& profile, double r0, double radius);

/// One evaluated point: ball radius R, oscillation L, observed quantity and
/// the minimal constant for that point alone.
struct PointBound {
  int i = 0;
  int j = 0;
  double R = 0.0;
  double L = 0.0;
  double observed = 0.0;
  double C = 0.0;
};

struct FieldConstant {
  /// Max over evaluated points of the per-point minimal constant.
  double C = 0.0;
  std::vector<PointBound> points;
};

struct FieldOptions {
  double theta = 1.0;
  double eta = 0.5;
  double z_min = 1e-6;
  /// Evaluate every stride-th node in each direction.
  int stride = 1;
};

/// Inscribed-ball calibration over interior grid nodes with z >= z_min:
/// R = distance to the boundary, L = oscillation over B_R(node).
FieldConstant min_constant_field(BoundCase c, const fd2d::GridSolution& field,
                                 const FieldOptions& opts = {});

/// Same for a radial profile on B_{r_dom}: points are profile nodes r0 with
/// r0 < r_dom and z >= z_min, R = r_dom - r0. Node index is reported in `i`.
FieldConstant min_constant_radial(BoundCase c, const radial::RadialSolution& profile,
                                  double r_dom, const FieldOptions& opts = {});

/// Points of `fc` at which the bound with constant C is below the observed
/// quantity (relative slack 1e-12).
std::vector<PointBound> bound_violations(BoundCase c, const FieldConstant& fc, double C,
                                         double theta, double eta);

struct DecayFit {
  /// Pairs used in the fit, sorted by R.
  std::vector<std::pair<double, double>> pairs;
  /// Pairs dropped because g <= 0 or non-finite.
  std::vector<std::pair<double, double>> excluded;
  double slope = 0.0;
  double intercept = 0.0;
  double max_abs_residual = 0.0;
  /// Fewer than 3 usable pairs; slope and intercept are NaN.
  bool degenerate = false;
};

/// Least squares of log g on log R. Throws ParameterError for fewer than
/// 3 input pairs or R <= 0.
DecayFit fit_decay_exponent(std::vector<std::pair<double, double>> pairs);

struct ReportRow {
  BoundCase bound_case = BoundCase::A;
  double R = 0.0;
  double L = 0.0;
  double theta = 0.0;
  double eta = 0.0;
  double C = 0.0;
  double bound = 0.0;
  double observed = 0.0;
  /// bound - observed
  double margin = 0.0;
};

ReportRow make_row(BoundCase c, const BoundParams& p, double observed);
/// CSV with header `case,R,L,theta,eta,C,bound,observed,margin`.
void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows);

}  // namespace mcgrad::estimates
