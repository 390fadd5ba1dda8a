// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mcgrad/bernstein.hpp"
#include "mcgrad/estimates.hpp"
#include "mcgrad/fd2d_solver.hpp"
#include "mcgrad/harness.hpp"
#include "mcgrad/nonlinearity.hpp"
#include "mcgrad/radial_solver.hpp"

using namespace mcgrad;
using estimates::BoundCase;

namespace {

// Pinned tolerances and budgets.
constexpr double kCapTol = 1e-8;
constexpr double kCapBudget = 1.0;
constexpr double kCatenoidTol = 1e-8;
constexpr double kCatenoidBudget = 1.0;
constexpr double kRatioLo = 3.5, kRatioHi = 4.5;
constexpr double kSolveBudget = 30.0;
constexpr double kConditionBudget = 5.0;
constexpr double kEnvelopeSpread = 2.0;
constexpr double kSlopeLo = -1.0, kSlopeHi = -0.3;
constexpr double kWindowMin = 1e-6, kWindowMax = 1e-2;
constexpr double kEnvelopeBudget = 10.0;
constexpr double kMonotoneSlack = 1e-9;
constexpr double kSweepBudget = 300.0;
constexpr double kDecayBudget = 300.0;
constexpr double kMarginK = 1.0;
constexpr double kBernsteinBudget = 120.0;
constexpr double kIdentityTol = 1e-12;
constexpr double kIdentityBudget = 5.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double cap2(double x, double y) { return -std::sqrt(4 - x * x - y * y); }
double catenoid2(double x, double y) { return std::acosh(std::hypot(x + 2.5, y)); }

Outcome sphere_cap_radial() {
  const auto t0 = Clock::now();
  const auto s = radial::integrate_from_origin(NonlinearityModel::constant(1), 2, -2.0, 1.9);
  double err = 0;
  for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(s.u[i] + std::sqrt(4 - s.r[i] * s.r[i])));
  for (int k = 0; k <= 1900; ++k) {
    const double r = std::min(1e-3 * k, 1.9);
    err = std::max(err, std::abs(s.sample(r).u + std::sqrt(4 - r * r)));
  }
  const double t = seconds_since(t0);
  return {err <= kCapTol && t < kCapBudget, fmt("max |u - cap| = %.2e", err)};
}

Outcome catenoid_shooting() {
  const auto t0 = Clock::now();
  const auto res = radial::solve_annulus_bvp(NonlinearityModel::zero(), 2, 1.0, 3.0, 0.0, std::acosh(3.0));
  const double t = seconds_since(t0);
  if (!res.converged()) return {false, "shooting: " + radial::to_string(res.status)};
  const double err = std::abs(res.solution.sample(2.0).w - 1 / std::sqrt(3.0));
  return {err <= kCatenoidTol && t < kCatenoidBudget, fmt("|w(2) - 1/sqrt(3)| = %.2e", err)};
}

Outcome convergence_order() {
  std::vector<double> errs;
  double worst_t = 0;
  for (int n : {33, 65, 129}) {
    const auto t0 = Clock::now();
    const auto s = fd2d::newton_solve(NonlinearityModel::constant(1), {1.0, n, n}, cap2);
    worst_t = std::max(worst_t, seconds_since(t0));
    if (!s.converged) return {false, "grid " + std::to_string(n) + " did not converge: " + s.message};
    errs.push_back(fd2d::max_interior_error(s, cap2));
  }
  const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
  const bool ok = r1 >= kRatioLo && r1 <= kRatioHi && r2 >= kRatioLo && r2 <= kRatioHi && worst_t < kSolveBudget;
  return {ok, fmt("ratios %.3f", r1) + fmt(", %.3f", r2) + fmt("; slowest solve %.2f s", worst_t)};
}

Outcome condition_suite() {
  const auto t0 = Clock::now();
  struct Case {
    NonlinearityModel m;
    ConditionTag tag;
    double theta;  // required condition exponent, 0 when free
  };
  const std::vector<Case> cases{
      {NonlinearityModel::power(0.5), ConditionTag::A1, 0},
      {NonlinearityModel::power(1), ConditionTag::A1, 0},
      {NonlinearityModel::power(2), ConditionTag::A1, 0},
      {NonlinearityModel::imcf(0.25), ConditionTag::A1, 1},
      {NonlinearityModel::imcf(0.5), ConditionTag::A1, 1},
      {NonlinearityModel::imcf(1), ConditionTag::A1, 1},
      {NonlinearityModel::log_power(2, 1), ConditionTag::A2, 2},
      {NonlinearityModel::log_power(0.5, 1), ConditionTag::A3, 0.5},
      {NonlinearityModel::log_power(1, 1), ConditionTag::A3, 1},
      {NonlinearityModel::bounded_ratio(), ConditionTag::A4, 0},
      {NonlinearityModel::constant(1), ConditionTag::A4, 0},
  };
  int confirmed = 0;
  std::string bad;
  for (const auto& c : cases) {
    const auto spec = synthesize_constants(c.m, c.tag);
    const bool ok = spec && (c.theta == 0 || spec->theta == c.theta) && check_condition(c.m, *spec).holds;
    if (ok) ++confirmed;
    else bad += " " + c.m.to_string() + "/" + to_string(c.tag);
  }
  const auto viol = check_condition(NonlinearityModel::power(2), ConditionSpec{ConditionTag::A1, 0.5, 1.0, 0.0, 2.0});
  const bool witness = !viol.holds && viol.witness.has_value();
  const double t = seconds_since(t0);
  std::string d = std::to_string(confirmed) + "/" + std::to_string(cases.size()) + " confirmed";
  d += witness ? ", witness found" : ", no witness";
  if (!bad.empty()) d += ";" + bad;
  return {confirmed == static_cast<int>(cases.size()) && witness && t < kConditionBudget, d};
}

Outcome imcf_envelope() {
  const auto t0 = Clock::now();
  double cmin = 1e300, cmax = 0, smin = 1e300, smax = -1e300;
  std::string d;
  for (double eps : {0.25, 0.5, 1.0}) {
    const auto row = harness::imcf_envelope(eps, 2, kWindowMin, kWindowMax);
    if (row.failed) return {false, fmt("envelope failed at eps = %g", eps)};
    if (!(row.R_star < 2.0 / eps)) return {false, fmt("R* beyond the flux bound at eps = %g", eps)};
    // |u'| <= C* / (R* - r) over the whole window.
    const auto prof = radial::integrate_from_origin(NonlinearityModel::imcf(eps), 2, 0.0, 2.2 / eps);
    for (int k = 0; k < 41; ++k) {
      const double dist = kWindowMin * std::pow(kWindowMax / kWindowMin, k / 40.0);
      if (std::abs(prof.sample(row.R_star - dist).w) > row.C_star / dist * (1 + 1e-12)) {
        return {false, fmt("envelope violated at eps = %g", eps)};
      }
    }
    cmin = std::min(cmin, row.C_star);
    cmax = std::max(cmax, row.C_star);
    smin = std::min(smin, row.slope);
    smax = std::max(smax, row.slope);
  }
  const double t = seconds_since(t0);
  const double spread = cmax / cmin;
  d = fmt("C* spread %.3f", spread) + fmt(", slopes in [%.4f", smin) + fmt(", %.4f]", smax);
  return {spread < kEnvelopeSpread && smin >= kSlopeLo && smax <= kSlopeHi && t < kEnvelopeBudget, d};
}

// Per-instance minimal constants and node sets for one family.
struct Family {
  std::string name;
  BoundCase bound_case;
  double theta = 1.0;
  std::vector<double> R;
  std::vector<estimates::FieldConstant> fc;
};

estimates::FieldConstant annulus_constant(const radial::RadialSolution& prof, double r_in, double r_out) {
  estimates::FieldConstant fc;
  for (std::size_t i = 0; i < prof.size(); ++i) {
    const double r0 = prof.r[i];
    const double rho = std::min(r0 - r_in, r_out - r0);
    const double z = prof.w[i] * prof.w[i];
    if (!(rho > 0) || !std::isfinite(z) || z < 1e-6) continue;
    estimates::PointBound p;
    p.i = static_cast<int>(i);
    p.R = rho;
    p.L = estimates::oscillation(prof, r0, rho);
    p.observed = z;
    p.C = estimates::min_constant(BoundCase::E, z, rho, p.L, 1.0, 0.5);
    fc.C = std::max(fc.C, p.C);
    fc.points.push_back(p);
  }
  return fc;
}

Outcome bound_sweep() {
  const auto t0 = Clock::now();
  std::vector<Family> fams;

  Family caps{"sphere caps (D)", BoundCase::D, 1.0, {1, 2, 4, 8, 16}, {}};
  for (double R : caps.R) {
    // Cap of radius 2R (H = 1/R) over B_R.
    const auto prof = radial::integrate_from_origin(NonlinearityModel::constant(1 / R), 2, -2 * R, R);
    caps.fc.push_back(estimates::min_constant_radial(BoundCase::D, prof, R));
  }
  fams.push_back(caps);

  Family cats{"catenoids (E)", BoundCase::E, 1.0, {1, 2, 4, 8, 16}, {}};
  for (double R : cats.R) {
    const auto res = radial::solve_annulus_bvp(NonlinearityModel::zero(), 2, 1.0, 1.0 + R, 0.0, std::acosh(1.0 + R));
    if (!res.converged()) return {false, fmt("catenoid shooting failed at R = %g", R)};
    cats.fc.push_back(annulus_constant(res.solution, 1.0, 1.0 + R));
  }
  fams.push_back(cats);

  Family imcf{"IMCF radial (A)", BoundCase::A, 1.0, {0.5, 0.8, 1.1, 1.4}, {}};
  for (double R : imcf.R) {
    const auto prof = radial::integrate_from_origin(NonlinearityModel::imcf(1), 2, 0.0, R);
    if (prof.blowup_radius) return {false, fmt("IMCF blew up before R = %g", R)};
    imcf.fc.push_back(estimates::min_constant_radial(BoundCase::A, prof, R));
  }
  fams.push_back(imcf);

  Family graphs{"minimal graphs (E)", BoundCase::E, 1.0, {4, 8, 16, 32}, {}};
  for (double R : graphs.R) {
    const auto s = fd2d::newton_solve(NonlinearityModel::zero(), {R, 65, 65}, harness::make_boundary("wave:1", R));
    if (!s.converged) continue;
    graphs.fc.push_back(estimates::min_constant_field(BoundCase::E, s));
  }
  if (graphs.fc.size() != graphs.R.size()) return {false, "a minimal-graph solve did not converge"};
  fams.push_back(graphs);

  bool all_ok = true;
  std::string d;
  for (const auto& f : fams) {
    const double C_star = f.fc.front().C;
    std::size_t violations = 0;
    bool monotone = true;
    for (std::size_t k = 0; k < f.fc.size(); ++k) {
      violations += estimates::bound_violations(f.bound_case, f.fc[k], C_star, f.theta, 0.5).size();
      if (k > 0 && f.fc[k].C > f.fc[k - 1].C * (1 + kMonotoneSlack)) monotone = false;
    }
    const bool ok = violations == 0 && monotone;
    all_ok = all_ok && ok;
    d += "; " + f.name + (ok ? " ok" : " FAIL") + " C =";
    for (const auto& c : f.fc) d += fmt(" %.4g", c.C);
    if (violations) d += " (" + std::to_string(violations) + " violations at C*)";
  }
  const double t = seconds_since(t0);
  return {all_ok && t < kSweepBudget, d.substr(2)};
}

Outcome minimal_surface_decay() {
  const auto t0 = Clock::now();
  const std::vector<double> Rs{4, 8, 16, 32};
  std::vector<double> sup, center_z, L;
  for (double R : Rs) {
    const fd2d::Domain dom{R, 65, 65};
    const auto s = fd2d::newton_solve(NonlinearityModel::zero(), dom, harness::make_boundary("wave:1", R));
    if (!s.converged) return {false, fmt("solve failed at R = %g", R)};
    const auto g = fd2d::gradient_field(s);
    double m = 0;
    for (int j = 0; j < dom.ny; ++j)
      for (int i = 0; i < dom.nx; ++i)
        if (std::abs(dom.x(i)) <= R / 2 && std::abs(dom.y(j)) <= R / 2) m = std::max(m, std::sqrt(g.z[dom.index(i, j)]));
    sup.push_back(m);
    center_z.push_back(g.z[dom.index(dom.nx / 2, dom.ny / 2)]);
    L.push_back(estimates::oscillation(s, 0, 0, R));
  }
  bool decreasing = true;
  for (std::size_t k = 1; k < sup.size(); ++k) decreasing = decreasing && sup[k] < sup[k - 1];
  // C* fitted on the smallest domain, then held fixed.
  const double C_star = std::log1p(center_z[0]) * Rs[0] / L[0];
  bool holds = true;
  for (std::size_t k = 0; k < Rs.size(); ++k) {
    holds = holds && center_z[k] <= std::expm1(C_star * L[k] / Rs[k]) * (1 + 1e-12);
  }
  std::string d = "sup |grad u| =";
  for (double v : sup) d += fmt(" %.4g", v);
  d += fmt("; C* = %.4g", C_star) + (holds ? ", bound holds on all runs" : ", bound violated");
  const double t = seconds_since(t0);
  return {decreasing && holds && t < kDecayBudget, d};
}

Outcome bernstein_argmax() {
  const auto t0 = Clock::now();
  const std::vector<int> grids{33, 65, 129};
  struct Field {
    std::string name;
    NonlinearityModel model;
    double (*g)(double, double);
    std::vector<fd2d::GridSolution> sols;
  };
  std::vector<Field> fields{{"cap", NonlinearityModel::constant(1), cap2, {}},
                            {"catenoid", NonlinearityModel::zero(), catenoid2, {}}};
  for (auto& f : fields) {
    for (int n : grids) {
      f.sols.push_back(fd2d::newton_solve(f.model, {1.0, n, n}, f.g));
      if (!f.sols.back().converged) return {false, f.name + " solve failed"};
    }
  }
  bernstein::AuxConfig c1;
  c1.F = bernstein::FChoice::Z;
  c1.h = bernstein::HChoice::one();
  c1.alpha = bernstein::default_alpha(ConditionTag::A1, 1.0);
  bernstein::AuxConfig c2;
  c2.F = bernstein::FChoice::Log1pZ;
  c2.h = bernstein::HChoice::power(2.0, false);
  c2.alpha = 2.0;
  const bernstein::Ball ball{0, 0, 1};

  bool ok = true;
  std::string d;
  for (const auto& cfg : {c1, c2}) {
    // Suite constant: smallest value closing the finest sphere-cap margin.
    const double C_suite = bernstein::calibrate_suite_constant(fields[0].sols.back(), fields[0].model, cfg, ball);
    d += "; [" + cfg.describe() + fmt(" C=%.3g]", C_suite);
    for (const auto& f : fields) {
      double worst = 1e300;
      std::vector<double> stat;
      for (const auto& s : f.sols) {
        const auto r = bernstein::verify_max_inequality(s, f.model, cfg, ball, C_suite);
        if (r.degenerate) return {false, f.name + " degenerate: " + r.message};
        worst = std::min(worst, r.terms.margin / (r.terms.scale * s.h));
        stat.push_back(r.stationarity);
      }
      const bool margin_ok = worst >= -kMarginK;
      bool stat_ok = true;
      for (std::size_t k = 1; k < stat.size(); ++k) stat_ok = stat_ok && stat[k] < stat[k - 1];
      ok = ok && margin_ok && stat_ok;
      d += " " + f.name + fmt(": min margin/(scale h) %.3g", worst) + (margin_ok ? "" : " FAIL") + ", stationarity";
      for (double v : stat) d += fmt(" %.3g", v);
      if (!stat_ok) d += " not decreasing";
    }
  }
  const double t = seconds_since(t0);
  return {ok && t < kBernsteinBudget, d.substr(2)};
}

Outcome structural_identities() {
  const auto t0 = Clock::now();
  double worst_gh = 0;
  for (auto F : {bernstein::FChoice::Z, bernstein::FChoice::Log1pZ}) {
    for (int k = 0; k < 1000; ++k) {
      const double z = std::pow(10.0, -6 + 12.0 * k / 999);
      const auto a = bernstein::coefficients_GH(F, z);
      const auto b = bernstein::closed_form_GH(F, z);
      worst_gh = std::max({worst_gh, std::abs(a.G - b.G) / std::abs(b.G), std::abs(a.H - b.H) / std::abs(b.H)});
    }
  }
  // Cutoff bound at every node of a 129 grid for several balls and exponents.
  std::size_t cutoff_bad = 0, cutoff_checked = 0;
  const fd2d::Domain dom{1.0, 129, 129};
  for (double alpha : {1.0, 2.0, 4.0}) {
    for (double R : {0.5, 1.0}) {
      for (int j = 0; j < dom.ny; ++j) {
        for (int i = 0; i < dom.nx; ++i) {
          const std::vector<double> x{dom.x(i), dom.y(j)};
          if (x[0] * x[0] + x[1] * x[1] >= R * R) continue;
          const auto c = bernstein::cutoff_phi(x, R, alpha);
          const double lhs = (c.grad[0] * c.grad[0] + c.grad[1] * c.grad[1]) / (c.phi * c.phi);
          const double rhs = 4 * alpha * alpha / (R * R * std::pow(c.phi, 2 / alpha));
          ++cutoff_checked;
          if (lhs > rhs * (1 + 1e-12)) ++cutoff_bad;
        }
      }
    }
  }
  // Two-sided weight bound at every node of two fields.
  std::size_t h_bad = 0, h_checked = 0;
  for (auto [model, g] : {std::pair{NonlinearityModel::constant(1), cap2}, std::pair{NonlinearityModel::zero(), catenoid2}}) {
    const auto s = fd2d::newton_solve(model, {1.0, 65, 65}, g);
    const double M = *std::max_element(s.u.begin(), s.u.end());
    const double m = *std::min_element(s.u.begin(), s.u.end());
    for (double b : {1.0, 2.0, 4.0}) {
      for (double u : s.u) {
        const auto w = bernstein::weight_h(u, bernstein::HChoice::power(b, true), M, m);
        ++h_checked;
        const double lo = 1 / std::pow(2 * (M - m + 1), 1 / b), hi = 1 / std::pow(M - m + 1, 1 / b);
        if (!w || w->h < lo * (1 - 1e-14) || w->h > hi * (1 + 1e-14)) ++h_bad;
      }
    }
  }
  const double t = seconds_since(t0);
  std::string d = fmt("G/H max rel diff %.2e", worst_gh) + "; cutoff " + std::to_string(cutoff_bad) + "/" +
                  std::to_string(cutoff_checked) + " violations; h " + std::to_string(h_bad) + "/" +
                  std::to_string(h_checked) + " violations";
  return {worst_gh <= kIdentityTol && cutoff_bad == 0 && h_bad == 0 && t < kIdentityBudget, d};
}

}  // namespace

int main() {
  report(1, sphere_cap_radial);
  report(2, catenoid_shooting);
  report(3, convergence_order);
  report(4, condition_suite);
  report(5, imcf_envelope);
  report(6, bound_sweep);
  report(7, minimal_surface_decay);
  report(8, bernstein_argmax);
  report(9, structural_identities);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
