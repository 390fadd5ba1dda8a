#include "mcgrad/estimates.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "mcgrad/error.hpp"

namespace mcgrad::estimates {

namespace {

void validate(BoundCase c, const BoundParams& p) {
  if (!(p.R > 0.0) || !std::isfinite(p.R)) throw ParameterError("bound: R must be positive");
  if (!(p.L >= 0.0) || !std::isfinite(p.L)) throw ParameterError("bound: L must be >= 0");
  switch (c) {
    case BoundCase::A:
      if (!(p.theta > 0.0)) throw ParameterError("case A needs theta > 0");
      break;
    case BoundCase::B:
      if (!(p.theta > 1.0)) throw ParameterError("case B needs theta > 1");
      break;
    case BoundCase::C:
    case BoundCase::CLin:
      if (!(p.theta > 0.0 && p.theta <= 1.0)) throw ParameterError("case C needs 0 < theta <= 1");
      if (!(p.eta > 0.0 && p.eta < 1.0)) throw ParameterError("case C needs 0 < eta < 1");
      break;
    case BoundCase::D:
    case BoundCase::E:
      break;
  }
}

// Branch arguments: the bound is C * max(args) (A, B, CLin) or
// max(expm1(C * arg)) (C, D, E). Case B's first branch is not scaled inside
// the exponential and is handled separately.
std::pair<double, double> branch_args(BoundCase c, const BoundParams& p) {
  const double R = p.R, L = p.L, th = p.theta, eta = p.eta;
  switch (c) {
    case BoundCase::A: {
      const double a = 1.0 / std::pow(R, 1.0 / th);
      return {a, a};
    }
    case BoundCase::B:
      return {std::expm1(std::pow(R, -1.0 / (th - 1.0))), std::pow(R, -2.0 / (2.0 * th - 1.0))};
    case BoundCase::C:
    case BoundCase::CLin:
      return {std::pow(L + 1.0, 1.0 / (2.0 * th)) / std::pow(R, 1.0 / th),
              std::pow(L + 1.0, 1.0 / (1.0 - eta)) / std::pow(R, 2.0 / (1.0 - eta))};
    case BoundCase::D:
      return {(L + 1.0) * (L + 1.0) / (R * R), (L + 1.0) * (L + 1.0) / std::pow(R, 2.0 / 3.0)};
    case BoundCase::E:
      return {L * L / (R * R), L / R};
  }
  return {0.0, 0.0};
}

}  // namespace

std::string to_string(BoundCase c) {
  switch (c) {
    case BoundCase::A: return "A";
    case BoundCase::B: return "B";
    case BoundCase::C: return "C";
    case BoundCase::CLin: return "C-lin";
    case BoundCase::D: return "D";
    case BoundCase::E: return "E";
  }
  return "?";
}

BoundCase parse_bound_case(std::string_view s) {
  std::string t;
  for (char ch : s) t.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
  if (t == "A") return BoundCase::A;
  if (t == "B") return BoundCase::B;
  if (t == "C" || t == "C-SQ") return BoundCase::C;
  if (t == "C-LIN") return BoundCase::CLin;
  if (t == "D") return BoundCase::D;
  if (t == "E") return BoundCase::E;
  throw ConfigError("unknown bound case '" + std::string(s) + "'");
}

bool bounds_square(BoundCase c) { return !(c == BoundCase::A || c == BoundCase::CLin); }

double observed_quantity(BoundCase c, double z) { return bounds_square(c) ? z : std::sqrt(z); }

double bound_value(BoundCase c, const BoundParams& p) {
  validate(c, p);
  const auto [a1, a2] = branch_args(c, p);
  const double C1 = p.C;
  const double C2 = p.C2.value_or(p.C);
  switch (c) {
    case BoundCase::A:
      return C1 * a1;
    case BoundCase::B:
      return C1 * std::max(a1, a2);
    case BoundCase::CLin:
      return std::max(C1 * a1, C2 * a2);
    case BoundCase::C:
      return std::max(std::expm1(C1 * a1), std::expm1(C2 * a2));
    case BoundCase::D:
    case BoundCase::E:
      return std::max(std::expm1(C1 * a1), std::expm1(C1 * a2));
  }
  return 0.0;
}

BoundEvaluation evaluate_bound(BoundCase c, const BoundParams& p) {
  return BoundEvaluation{c, p, bound_value(c, p)};
}

double min_constant(BoundCase c, double observed, double R, double L, double theta, double eta) {
  BoundParams p;
  p.R = R;
  p.L = L;
  p.theta = theta;
  p.eta = eta;
  validate(c, p);
  if (!(observed >= 0.0)) throw ParameterError("observed gradient must be >= 0");
  if (observed == 0.0) return 0.0;
  const auto [a1, a2] = branch_args(c, p);
  const double a = std::max(a1, a2);
  if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
  switch (c) {
    case BoundCase::A:
    case BoundCase::B:
    case BoundCase::CLin:
      return observed / a;
    case BoundCase::C:
    case BoundCase::D:
    case BoundCase::E:
      return std::log1p(observed) / a;
  }
  return 0.0;
}

double oscillation(const fd2d::GridSolution& field, double cx, double cy, double radius) {
  const fd2d::Domain dom = field.domain();
  const double h = dom.h();
  const double r2 = radius * radius * (1.0 + 1e-12);
  const int i0 = std::max(0, static_cast<int>(std::floor((cx - radius - dom.x(0)) / h)));
  const int i1 = std::min(dom.nx - 1, static_cast<int>(std::ceil((cx + radius - dom.x(0)) / h)));
  const int j0 = std::max(0, static_cast<int>(std::floor((cy - radius - dom.y(0)) / h)));
  const int j1 = std::min(dom.ny - 1, static_cast<int>(std::ceil((cy + radius - dom.y(0)) / h)));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const double dx = dom.x(i) - cx, dy = dom.y(j) - cy;
      if (dx * dx + dy * dy > r2) continue;
      const double v = field.at(i, j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi >= lo)) throw ParameterError("oscillation: no grid node in the ball");
  return hi - lo;
}

double oscillation(const radial::RadialSolution& profile, double r0, double radius) {
  if (profile.size() == 0) throw ParameterError("oscillation: empty profile");
  if (!(radius >= 0.0)) throw ParameterError("oscillation: radius must be >= 0");
  const double a = std::max(0.0, r0 - radius);
  double b = r0 + radius;
  const double slack = 1e-12 * std::max(1.0, profile.r_max());
  if (a < profile.r_min() - slack || b > profile.r_max() + slack) {
    throw ParameterError("oscillation: interval leaves the profile");
  }
  b = std::min(b, profile.r_max());
  const double a_c = std::max(a, profile.r_min());
  double lo = profile.sample(a_c).u;
  double hi = lo;
  const double ub = profile.sample(b).u;
  lo = std::min(lo, ub);
  hi = std::max(hi, ub);
  for (std::size_t k = 0; k < profile.size(); ++k) {
    if (profile.r[k] < a_c || profile.r[k] > b) continue;
    lo = std::min(lo, profile.u[k]);
    hi = std::max(hi, profile.u[k]);
  }
  return hi - lo;
}

namespace {

bool needs_oscillation(BoundCase c) {
  return c == BoundCase::C || c == BoundCase::CLin || c == BoundCase::D || c == BoundCase::E;
}

}  // namespace

FieldConstant min_constant_field(BoundCase c, const fd2d::GridSolution& field,
                                 const FieldOptions& opts) {
  const fd2d::Domain dom = field.domain();
  const auto grad = fd2d::gradient_field(field);
  const int stride = std::max(1, opts.stride);
  FieldConstant fc;
  for (int j = 1; j < dom.ny - 1; j += stride) {
    for (int i = 1; i < dom.nx - 1; i += stride) {
      const double z = grad.z[dom.index(i, j)];
      if (!(z >= opts.z_min)) continue;
      PointBound pb;
      pb.i = i;
      pb.j = j;
      pb.R = dom.inscribed_radius(i, j);
      pb.L = needs_oscillation(c) ? oscillation(field, dom.x(i), dom.y(j), pb.R) : 0.0;
      pb.observed = observed_quantity(c, z);
      pb.C = min_constant(c, pb.observed, pb.R, pb.L, opts.theta, opts.eta);
      fc.C = std::max(fc.C, pb.C);
      fc.points.push_back(pb);
    }
  }
  return fc;
}

FieldConstant min_constant_radial(BoundCase c, const radial::RadialSolution& profile,
                                  double r_dom, const FieldOptions& opts) {
  if (!(r_dom > 0.0) || r_dom > profile.r_max()) {
    throw ParameterError("radial domain must lie within the profile");
  }
  const int stride = std::max(1, opts.stride);
  FieldConstant fc;
  for (std::size_t k = 0; k < profile.size(); k += stride) {
    const double r0 = profile.r[k];
    if (!(r0 < r_dom)) break;
    const double w = profile.w[k];
    if (!std::isfinite(w)) continue;
    const double z = w * w;
    if (!(z >= opts.z_min)) continue;
    PointBound pb;
    pb.i = static_cast<int>(k);
    pb.R = r_dom - r0;
    pb.L = needs_oscillation(c) ? oscillation(profile, r0, pb.R) : 0.0;
    pb.observed = observed_quantity(c, z);
    pb.C = min_constant(c, pb.observed, pb.R, pb.L, opts.theta, opts.eta);
    fc.C = std::max(fc.C, pb.C);
    fc.points.push_back(pb);
  }
  return fc;
}

std::vector<PointBound> bound_violations(BoundCase c, const FieldConstant& fc, double C,
                                         double theta, double eta) {
  std::vector<PointBound> out;
  for (const auto& pb : fc.points) {
    BoundParams p;
    p.R = pb.R;
    p.L = pb.L;
    p.theta = theta;
    p.eta = eta;
    p.C = C;
    const double b = bound_value(c, p);
    if (b < pb.observed * (1.0 - 1e-12)) out.push_back(pb);
  }
  return out;
}

DecayFit fit_decay_exponent(std::vector<std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw ParameterError("decay fit needs at least 3 pairs");
  for (const auto& [R, g] : pairs) {
    if (!(R > 0.0) || !std::isfinite(R)) throw ParameterError("decay fit needs R > 0");
  }
  std::sort(pairs.begin(), pairs.end());
  DecayFit fit;
  for (const auto& pr : pairs) {
    if (pr.second > 0.0 && std::isfinite(pr.second)) {
      fit.pairs.push_back(pr);
    } else {
      fit.excluded.push_back(pr);
    }
  }
  if (fit.pairs.size() < 3) {
    fit.degenerate = true;
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    fit.max_abs_residual = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  const double n = static_cast<double>(fit.pairs.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [R, g] : fit.pairs) {
    mx += std::log(R);
    my += std::log(g);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [R, g] : fit.pairs) {
    const double dx = std::log(R) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(g) - my);
  }
  if (sxx == 0.0) {
    fit.degenerate = true;
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    fit.max_abs_residual = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (const auto& [R, g] : fit.pairs) {
    const double res = std::log(g) - (fit.intercept + fit.slope * std::log(R));
    fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(res));
  }
  return fit;
}

ReportRow make_row(BoundCase c, const BoundParams& p, double observed) {
  ReportRow row;
  row.bound_case = c;
  row.R = p.R;
  row.L = p.L;
  row.theta = p.theta;
  row.eta = p.eta;
  row.C = p.C;
  row.bound = bound_value(c, p);
  row.observed = observed;
  row.margin = row.bound - observed;
  return row;
}

void write_report_csv(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "case,R,L,theta,eta,C,bound,observed,margin\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  to_string(r.bound_case).c_str(), r.R, r.L, r.theta, r.eta, r.C, r.bound,
                  r.observed, r.margin);
    os << buf;
  }
}

}  // namespace mcgrad::estimates
