#include "mcgrad/radial_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "mcgrad/error.hpp"

namespace mcgrad::radial {

namespace {

using State = std::array<double, 2>;  // (u, q) or (u, q - q_in)

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

/// One Dormand-Prince step. `rhs(x, y, dy)` returns false where the state is
/// outside the admissible set. Returns false if any stage was inadmissible.
template <class Rhs>
bool dp_step(const Rhs& rhs, double x, const State& y, const State& k1, double h, State& y_new,
             State& k7, double& err, double tol) {
  State k2, k3, k4, k5, k6, tmp;
  auto stage = [&](double cx, auto&& combine, State& k) {
    for (int i = 0; i < 2; ++i) tmp[i] = y[i] + h * combine(i);
    return rhs(x + cx * h, tmp, k);
  };
  if (!stage(c2, [&](int i) { return a21 * k1[i]; }, k2)) return false;
  if (!stage(c3, [&](int i) { return a31 * k1[i] + a32 * k2[i]; }, k3)) return false;
  if (!stage(c4, [&](int i) { return a41 * k1[i] + a42 * k2[i] + a43 * k3[i]; }, k4)) return false;
  if (!stage(c5, [&](int i) { return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]; }, k5))
    return false;
  if (!stage(1.0,
             [&](int i) { return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]; },
             k6))
    return false;
  for (int i = 0; i < 2; ++i) {
    y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  }
  if (!rhs(x + h, y_new, k7)) return false;
  err = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double e =
        h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    const double sc = tol * (1.0 + std::max(std::abs(y[i]), std::abs(y_new[i])));
    err = std::max(err, std::abs(e) / sc);
  }
  return std::isfinite(err);
}

double step_factor(double err) {
  if (err == 0.0) return 5.0;
  return std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
}

double flux_to_slope(double s) {
  // w = s / sqrt(1 - s^2), factored to keep precision as |s| -> 1.
  return s / std::sqrt((1.0 - s) * (1.0 + s));
}

void push_node(RadialSolution& sol, double r, double u, double w, double q, double dq) {
  sol.r.push_back(r);
  sol.u.push_back(u);
  sol.w.push_back(w);
  sol.q.push_back(q);
  sol.dq.push_back(dq);
}

}  // namespace

RadialSolution::Sample RadialSolution::sample(double radius) const {
  if (r.empty() || radius < r.front() || radius > r.back() || !std::isfinite(radius)) {
    throw ParameterError("radial sample outside the solution interval");
  }
  auto it = std::lower_bound(r.begin(), r.end(), radius);
  std::size_t k = static_cast<std::size_t>(it - r.begin());
  if (k < r.size() && r[k] == radius) return {u[k], w[k], q[k]};
  const std::size_t i0 = k - 1, i1 = k;
  const double h = r[i1] - r[i0];
  const double t = (radius - r[i0]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  auto hermite = [&](const std::vector<double>& y, const std::vector<double>& dy) {
    const double d0 = std::isfinite(dy[i0]) ? dy[i0] : 0.0;
    const double d1 = std::isfinite(dy[i1]) ? dy[i1] : 0.0;
    return h00 * y[i0] + h10 * h * d0 + h01 * y[i1] + h11 * h * d1;
  };
  Sample s{};
  s.q = hermite(q, dq);
  const double ratio = s.q / std::pow(radius, n - 1);
  s.w = std::abs(ratio) < 1.0 ? flux_to_slope(ratio) : std::copysign(std::numeric_limits<double>::infinity(), ratio);
  if (std::isfinite(w[i0]) && std::isfinite(w[i1])) {
    s.u = hermite(u, w);
  } else {
    s.u = u[i0] + t * (u[i1] - u[i0]);
  }
  return s;
}

RadialSolution integrate_from_origin(const NonlinearityModel& model, int n, double u0,
                                     double r_max, const RadialOptions& opts) {
  if (n < 2) throw ParameterError("dimension n must be >= 2");
  if (!(r_max > 0.0) || !std::isfinite(r_max)) throw ParameterError("r_max must be positive");
  if (!(opts.tol > 0.0)) throw ParameterError("tol must be positive");

  const double threshold = 1.0 - opts.delta_blow;
  auto rhs = [&](double r, const State& y, State& dy) {
    const double rp = std::pow(r, n - 1);
    const double s = y[1] / rp;
    if (!(std::abs(s) < 1.0)) return false;
    const double w = flux_to_slope(s);
    const double f = model.radial(w);
    if (std::isnan(f)) throw std::runtime_error("nonlinearity evaluated to NaN at w = " + std::to_string(w));
    dy[0] = w;
    dy[1] = rp * f;
    return true;
  };
  auto ratio = [&](double r, const State& y) { return std::abs(y[1] / std::pow(r, n - 1)); };

  RadialSolution sol;
  sol.n = n;
  sol.tol = opts.tol;
  sol.delta_blow = opts.delta_blow;

  const double f0 = model.radial(0.0);
  push_node(sol, 0.0, u0, 0.0, 0.0, n == 1 ? f0 : 0.0);

  double r = 1e-6 * r_max;
  State y{u0 + f0 * r * r / (2.0 * n), f0 * std::pow(r, n) / n};
  State k1;
  if (!rhs(r, y, k1)) throw std::runtime_error("inadmissible start state");
  push_node(sol, r, y[0], k1[0], y[1], k1[1]);

  double h = 1e-4 * r_max;
  const double h_max = opts.max_step_fraction * r_max;
  State y_new, k7;
  while (r < r_max && sol.steps_accepted + sol.steps_rejected < opts.max_steps) {
    bool last = false;
    h = std::min(h, h_max);
    if (r + h >= r_max) {
      h = r_max - r;
      last = true;
    }
    double err = 0.0;
    const bool ok = dp_step(rhs, r, y, k1, h, y_new, k7, err, opts.tol);
    if (!ok) {
      ++sol.steps_rejected;
      h *= 0.5;
      if (h < 1e-15 * std::max(r, 1.0)) {
        sol.blowup_radius = r;
        break;
      }
      continue;
    }
    if (err > 1.0) {
      ++sol.steps_rejected;
      h *= step_factor(err);
      continue;
    }
    const double r_new = last ? r_max : r + h;
    if (ratio(r_new, y_new) >= threshold) {
      // Locate |q|/r^(n-1) = 1 - delta_blow inside [r, r + h] by bisection on
      // the length of a single step from the accepted state.
      double lo = 0.0, hi = h;
      State y_lo = y;
      State k_lo = k1;
      for (int iter = 0; iter < 200 && hi - lo > 4e-16 * std::max(r, 1.0); ++iter) {
        const double mid = 0.5 * (lo + hi);
        State y_mid, k_mid;
        double e2 = 0.0;
        const bool ok_mid = dp_step(rhs, r, y, k1, mid, y_mid, k_mid, e2, opts.tol);
        if (ok_mid && ratio(r + mid, y_mid) < threshold) {
          lo = mid;
          y_lo = y_mid;
          k_lo = k_mid;
        } else {
          hi = mid;
        }
      }
      if (lo > 0.0) push_node(sol, r + lo, y_lo[0], k_lo[0], y_lo[1], k_lo[1]);
      sol.blowup_radius = r + lo;
      ++sol.steps_accepted;
      break;
    }
    ++sol.steps_accepted;
    r = r_new;
    y = y_new;
    k1 = k7;
    push_node(sol, r, y[0], k1[0], y[1], k1[1]);
    h *= step_factor(err);
  }
  return sol;
}

std::optional<RadialSolution> integrate_annulus(const NonlinearityModel& model, int n, double r_in,
                                                double r_out, double u_in, double s_in,
                                                const RadialOptions& opts) {
  if (n < 2) throw ParameterError("dimension n must be >= 2");
  if (!(r_in > 0.0) || !(r_out > r_in)) throw ParameterError("annulus requires 0 < r_in < r_out");
  if (!(std::abs(s_in) <= 1.0)) throw ParameterError("inner flux ratio must lie in [-1, 1]");

  const double base_in = std::pow(r_in, n - 1);
  const double q_in = s_in * base_in;
  const double gap_in = 1.0 - std::abs(s_in);
  const double sigma = s_in > 0.0 ? 1.0 : (s_in < 0.0 ? -1.0 : 0.0);
  const double f_inf = model.value_at_infinity();

  if (gap_in == 0.0) {
    const double kappa = (n - 1) / r_in - sigma * f_inf;
    if (!std::isfinite(f_inf) || !(kappa > 0.0)) return std::nullopt;
  }

  // State: (u, dq) with q = q_in + dq, independent variable xi = sqrt(r - r_in).
  auto rhs = [&](double xi, const State& y, State& dy) {
    const double xi2 = xi * xi;
    const double r = r_in + xi2;
    const double rp = std::pow(r, n - 1);
    const double q = q_in + y[1];
    double gap;  // r^(n-1) - |q|, without cancellation near |s| = 1
    if (sigma != 0.0 && sigma * q >= 0.0) {
      const double grow = base_in * std::expm1((n - 1) * std::log1p(xi2 / r_in));
      gap = grow + base_in * gap_in - sigma * y[1];
    } else {
      gap = rp - std::abs(q);
    }
    if (xi == 0.0 && gap == 0.0) {
      const double kappa = (n - 1) / r_in - sigma * f_inf;
      dy[0] = 2.0 * sigma / std::sqrt(2.0 * kappa);
      dy[1] = 0.0;
      return true;
    }
    if (!(gap > 0.0)) return false;
    const double one_minus_s2 = gap * (rp + std::abs(q)) / (rp * rp);
    const double w = (q / rp) / std::sqrt(one_minus_s2);
    const double f = model.radial(w);
    if (std::isnan(f)) throw std::runtime_error("nonlinearity evaluated to NaN");
    dy[0] = 2.0 * xi * w;
    dy[1] = 2.0 * xi * rp * f;
    return std::isfinite(dy[0]) && std::isfinite(dy[1]);
  };
  auto node_values = [&](double r, const State& y, double& w, double& q, double& dq) {
    const double rp = std::pow(r, n - 1);
    q = q_in + y[1];
    const double s = q / rp;
    if (r == r_in && gap_in == 0.0) {
      w = std::copysign(std::numeric_limits<double>::infinity(), s_in);
      dq = rp * f_inf;
      return;
    }
    w = std::abs(s) < 1.0 ? flux_to_slope(s) : std::copysign(std::numeric_limits<double>::infinity(), s);
    dq = rp * model.radial(w);
  };

  RadialSolution sol;
  sol.n = n;
  sol.tol = opts.tol;
  sol.delta_blow = opts.delta_blow;

  const double xi_end = std::sqrt(r_out - r_in);
  double xi = 0.0;
  State y{u_in, 0.0};
  State k1;
  if (!rhs(xi, y, k1)) return std::nullopt;
  {
    double w, q, dq;
    node_values(r_in, y, w, q, dq);
    push_node(sol, r_in, y[0], w, q, dq);
  }

  double h = 1e-3 * xi_end;
  const double h_max = opts.max_step_fraction * xi_end;
  State y_new, k7;
  while (xi < xi_end) {
    if (sol.steps_accepted + sol.steps_rejected >= opts.max_steps) return std::nullopt;
    bool last = false;
    h = std::min(h, h_max);
    if (xi + h >= xi_end) {
      h = xi_end - xi;
      last = true;
    }
    double err = 0.0;
    const bool ok = dp_step(rhs, xi, y, k1, h, y_new, k7, err, opts.tol);
    if (!ok || err > 1.0) {
      ++sol.steps_rejected;
      h *= ok ? step_factor(err) : 0.5;
      if (h < 1e-14 * xi_end) return std::nullopt;
      continue;
    }
    ++sol.steps_accepted;
    xi = last ? xi_end : xi + h;
    y = y_new;
    k1 = k7;
    const double r = last ? r_out : r_in + xi * xi;
    double w, q, dq;
    node_values(r, y, w, q, dq);
    push_node(sol, r, y[0], w, q, dq);
    h *= step_factor(err);
  }
  return sol;
}

std::string to_string(ShootingStatus s) {
  switch (s) {
    case ShootingStatus::Converged: return "converged";
    case ShootingStatus::BracketFailure: return "bracket-failure";
    case ShootingStatus::NotConverged: return "not-converged";
  }
  return "?";
}

ShootingResult solve_annulus_bvp(const NonlinearityModel& model, int n, double r_in, double r_out,
                                 double u_in, double u_out, double tol) {
  if (!(r_in > 0.0) || !(r_out > r_in)) throw ParameterError("annulus requires 0 < r_in < r_out");
  if (!(tol > 0.0)) throw ParameterError("shooting tolerance must be positive");

  RadialOptions opts;
  opts.tol = std::max(tol * 1e-2, 1e-14);

  struct Trial {
    double t;
    double mismatch;
    std::optional<RadialSolution> sol;
  };
  int evaluations = 0;
  auto evaluate = [&](double t) {
    ++evaluations;
    Trial tr{t, std::numeric_limits<double>::quiet_NaN(), integrate_annulus(model, n, r_in, r_out, u_in, t, opts)};
    if (tr.sol) tr.mismatch = tr.sol->u.back() - u_out;
    return tr;
  };

  // Candidate inner slopes: 0 and +-64 log-spaced magnitudes in [1e-3, 1e3],
  // expressed as flux ratios t = w / sqrt(1 + w^2); the closed ends t = +-1
  // (vertical tangent at r_in) are added when the model admits them.
  std::vector<double> ts{0.0};
  for (int k = 0; k < 64; ++k) {
    const double w = std::pow(10.0, -3.0 + 6.0 * k / 63.0);
    const double t = w / std::sqrt(1.0 + w * w);
    ts.push_back(t);
    ts.push_back(-t);
  }
  if (std::isfinite(model.value_at_infinity())) {
    ts.push_back(1.0);
    ts.push_back(-1.0);
  }
  std::sort(ts.begin(), ts.end());

  ShootingResult result;
  auto finish = [&](Trial&& tr, ShootingStatus status) {
    result.initial_flux_ratio = tr.t;
    result.initial_slope = std::abs(tr.t) < 1.0
                               ? flux_to_slope(tr.t)
                               : std::copysign(std::numeric_limits<double>::infinity(), tr.t);
    result.boundary_residual = std::abs(tr.mismatch);
    result.iterations = evaluations;
    result.status = status;
    if (tr.sol) result.solution = std::move(*tr.sol);
    return result;
  };

  std::optional<Trial> prev;
  std::optional<Trial> lo, hi;
  for (double t : ts) {
    Trial tr = evaluate(t);
    if (std::isnan(tr.mismatch)) continue;
    if (std::abs(tr.mismatch) <= tol) return finish(std::move(tr), ShootingStatus::Converged);
    if (prev && (prev->mismatch < 0.0) != (tr.mismatch < 0.0)) {
      lo = std::move(prev);
      hi = std::move(tr);
      break;
    }
    prev = std::move(tr);
  }
  if (!lo) {
    Trial none{0.0, std::numeric_limits<double>::quiet_NaN(), std::nullopt};
    return finish(std::move(none), ShootingStatus::BracketFailure);
  }

  // Illinois regula falsi with bisection fallback on [lo.t, hi.t].
  double fa = lo->mismatch, fb = hi->mismatch;
  double a = lo->t, b = hi->t;
  Trial best = std::abs(fa) < std::abs(fb) ? std::move(*lo) : std::move(*hi);
  int side = 0;
  for (int iter = 0; iter < 200; ++iter) {
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
    if (c == a || c == b) break;
    Trial tc = evaluate(c);
    if (std::isnan(tc.mismatch)) {
      // Inadmissible interior point: fall back to bisection toward the valid end.
      c = 0.5 * (a + b);
      tc = evaluate(c);
      if (std::isnan(tc.mismatch)) break;
    }
    const double fc = tc.mismatch;
    if (std::abs(fc) < std::abs(best.mismatch)) best = tc;
    if (std::abs(fc) <= tol) return finish(std::move(best), ShootingStatus::Converged);
    if ((fc < 0.0) == (fb < 0.0)) {
      b = c;
      fb = fc;
      if (side == -1) fa *= 0.5;
      side = -1;
    } else {
      a = c;
      fa = fc;
      if (side == 1) fb *= 0.5;
      side = 1;
    }
  }
  const bool ok = std::abs(best.mismatch) <= tol;
  return finish(std::move(best), ok ? ShootingStatus::Converged : ShootingStatus::NotConverged);
}

std::optional<double> detect_blowup(const RadialSolution& solution) { return solution.blowup_radius; }

void write_csv(std::ostream& os, const RadialSolution& solution) {
  os << "r,u,w,q\n";
  char buf[128];
  for (std::size_t i = 0; i < solution.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n", solution.r[i], solution.u[i],
                  solution.w[i], solution.q[i]);
    os << buf;
  }
}

}  // namespace mcgrad::radial
