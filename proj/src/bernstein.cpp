#include "mcgrad/bernstein.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "mcgrad/error.hpp"

namespace mcgrad::bernstein {

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string AuxConfig::describe() const {
  std::string s = F == FChoice::Z ? "F=z" : "F=log1pz";
  if (h.kind == HChoice::Kind::One) {
    s += ";h=one";
  } else {
    s += ";h=pow(b=" + shortest(h.b) + ",plus_one=" + (h.plus_one ? "1" : "0") + ")";
  }
  s += ";alpha=" + shortest(alpha);
  return s;
}

double default_alpha(ConditionTag tag, double theta) {
  switch (tag) {
    case ConditionTag::A1:
      return std::max(2.0 / theta, 1.0);
    case ConditionTag::A2:
      return std::max(1.0 / (theta - 1.0), 1.0);
    case ConditionTag::A3:
    case ConditionTag::A4:
      return 2.0;
  }
  return 2.0;
}

Cutoff cutoff_phi(std::span<const double> x, double R, double alpha) {
  if (!(R > 0.0)) throw ParameterError("cutoff: R must be positive");
  if (!(alpha >= 1.0)) throw ParameterError("cutoff: alpha must be >= 1");
  double r2 = 0.0;
  for (double xi : x) r2 += xi * xi;
  const double s = r2 / (R * R);
  if (s > 1.0) throw ParameterError("cutoff: point outside the ball");
  Cutoff c;
  const double t = 1.0 - s;
  c.phi = std::pow(t, alpha);
  const double coef = -2.0 * alpha * std::pow(t, alpha - 1.0) / (R * R);
  c.grad.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) c.grad[i] = coef * x[i];
  return c;
}

std::optional<Weight> weight_h(double u, const HChoice& choice, double M, double m) {
  if (choice.kind == HChoice::Kind::One) return Weight{};
  if (!(choice.b > 0.0)) throw ParameterError("weight: b must be positive");
  const double base = u + M - 2.0 * m + (choice.plus_one ? 1.0 : 0.0);
  if (!(base > 0.0)) return std::nullopt;
  const double ib = 1.0 / choice.b;
  Weight w;
  w.h = std::pow(base, -ib);
  w.d1 = -ib / base;
  w.d2 = ib * (ib + 1.0) / (base * base);
  return w;
}

Profile profile_F(FChoice F, double z) {
  if (F == FChoice::Z) return {z, 1.0, 0.0};
  const double l = std::log1p(z);
  return {l, 1.0 / (1.0 + z), -1.0 / ((1.0 + z) * (1.0 + z))};
}

GH coefficients_GH(FChoice F, double z) {
  if (!(z > 0.0)) throw ParameterError("G/H need z > 0");
  // Extended precision: both coefficients cancel to O(1/z) of their terms for large z.
  long double Fv, dF, d2F;
  const long double zl = z;
  if (F == FChoice::Z) {
    Fv = zl;
    dF = 1.0L;
    d2F = 0.0L;
  } else {
    Fv = std::log1p(zl);
    dF = 1.0L / (1.0L + zl);
    d2F = -dF * dF;
  }
  const long double r1 = dF / Fv;
  const long double r2 = d2F / Fv;
  const long double H = -r2 + r1 * r1 - r1 / (1.0L + zl);
  // G + H = F' / (2 F (1 + z)^2), an exact rearrangement of the definitions.
  const long double G = -H + r1 / (2.0L * (1.0L + zl) * (1.0L + zl));
  return {static_cast<double>(G), static_cast<double>(H)};
}

GH closed_form_GH(FChoice F, double z) {
  if (!(z > 0.0)) throw ParameterError("G/H need z > 0");
  if (F == FChoice::Z) {
    return {-(2.0 + z) / (2.0 * z * z * (1.0 + z) * (1.0 + z)), 1.0 / (z * z * (1.0 + z))};
  }
  const double l = std::log1p(z);
  const double p = 1.0 + z;
  return {(l - 2.0 * p) / (2.0 * p * p * p * l * l), 1.0 / (p * p * l * l)};
}

Iterms compute_Iterms(const NodeState& s, const NonlinearityModel& model, const AuxConfig& cfg,
                      double C_suite) {
  constexpr double n = 2.0;
  const double ux = s.grad_u[0], uy = s.grad_u[1];
  const double z = ux * ux + uy * uy;
  if (!(z > 0.0)) throw ParameterError("I-terms need z > 0");
  const double rel[2] = {s.x[0] - s.center[0], s.x[1] - s.center[1]};
  const Cutoff cut = cutoff_phi(rel, s.R, cfg.alpha);
  if (!(cut.phi > 0.0)) throw ParameterError("I-terms need phi > 0");
  const auto wt = weight_h(s.u, cfg.h, s.M, s.m);
  if (!wt) throw ParameterError("weight h is degenerate on a constant field");

  const Profile pf = profile_F(cfg.F, z);
  const GH gh = coefficients_GH(cfg.F, z);
  const double G = gh.G, H = gh.H;
  const double FoF = pf.dF / pf.F;   // F'/F
  const double rho = pf.F / pf.dF;   // F/F'
  const double phi = cut.phi;
  const double px = cut.grad[0], py = cut.grad[1];
  const double d1 = wt->d1, d2 = wt->d2;

  const double zx = -rho * (px / phi + d1 * ux);
  const double zy = -rho * (py / phi + d1 * uy);

  const double f = model.value2(ux, uy);
  double fx = 0.0, fy = 0.0;
  model.gradient2(ux, uy, fx, fy);

  const double sq = std::sqrt(1.0 + z);
  const double udphi = ux * px + uy * py;
  const double gphi2 = px * px + py * py;

  Iterms t;
  auto& I = t.I;
  I[0] = FoF * sq * (fx * zx + fy * zy);
  I[1] = (2.0 / n) * FoF * (1.0 + z) * f * f;
  I[2] = d1 * f / sq;
  I[3] = (d2 - d1 * d1) * z / (1.0 + z);
  I[4] = (d1 * rho) * (d1 * rho) * (G * z + H * z * z / (1.0 + z));
  I[5] = -2.0 * d1 * rho * rho / phi * (G + H * z / (1.0 + z)) * udphi;
  I[6] = f * udphi / (sq * phi);
  I[7] = rho * rho / (phi * phi) * (-G * gphi2 - H * udphi * udphi / (1.0 + z));
  I[8] = C_suite / (s.R * s.R * std::pow(phi, 2.0 / cfg.alpha));
  t.lhs = I[0] + I[1] + I[2] + I[3] + I[4];
  t.rhs = I[5] + I[6] + I[7] + I[8];
  t.margin = t.rhs - t.lhs;
  for (double v : I) t.scale += std::abs(v);
  return t;
}

namespace {

struct BallStats {
  double M = -std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
};

BallStats ball_stats(const fd2d::GridSolution& field, const Ball& ball) {
  const fd2d::Domain dom = field.domain();
  BallStats st;
  const double r2 = ball.R * ball.R;
  for (int j = 0; j < dom.ny; ++j) {
    for (int i = 0; i < dom.nx; ++i) {
      const double dx = dom.x(i) - ball.cx, dy = dom.y(j) - ball.cy;
      if (dx * dx + dy * dy > r2) continue;
      st.M = std::max(st.M, field.at(i, j));
      st.m = std::min(st.m, field.at(i, j));
    }
  }
  return st;
}

// h F(z) phi at a node, or 0 when the node is outside the open ball or the
// weight is degenerate. Ignores z_min.
double aux_value(const fd2d::Domain& dom, const fd2d::GridSolution& field,
                 const fd2d::GradientField& grad, const AuxConfig& cfg, const Ball& ball,
                 const BallStats& st, int i, int j) {
  const double dx = dom.x(i) - ball.cx, dy = dom.y(j) - ball.cy;
  const double s = (dx * dx + dy * dy) / (ball.R * ball.R);
  if (!(s < 1.0)) return 0.0;
  const double z = grad.z[dom.index(i, j)];
  if (!(z > 0.0)) return 0.0;
  const auto wt = weight_h(field.at(i, j), cfg.h, st.M, st.m);
  if (!wt) return 0.0;
  return wt->h * profile_F(cfg.F, z).F * std::pow(1.0 - s, cfg.alpha);
}

}  // namespace

std::vector<double> auxiliary_field(const fd2d::GridSolution& field, const AuxConfig& cfg,
                                    const Ball& ball) {
  const fd2d::Domain dom = field.domain();
  const auto grad = fd2d::gradient_field(field);
  const BallStats st = ball_stats(field, ball);
  std::vector<double> P(dom.size(), 0.0);
  for (int j = 0; j < dom.ny; ++j) {
    for (int i = 0; i < dom.nx; ++i) {
      if (!(grad.z[dom.index(i, j)] >= cfg.z_min)) continue;
      P[dom.index(i, j)] = aux_value(dom, field, grad, cfg, ball, st, i, j);
    }
  }
  return P;
}

AuxDiagnostics verify_max_inequality(const fd2d::GridSolution& field,
                                     const NonlinearityModel& model, const AuxConfig& cfg,
                                     const Ball& ball, double C_suite) {
  const fd2d::Domain dom = field.domain();
  const auto grad = fd2d::gradient_field(field);
  const BallStats st = ball_stats(field, ball);
  AuxDiagnostics d;
  d.config = cfg;
  d.C_suite = C_suite;
  if (!(st.M >= st.m)) {
    d.degenerate = true;
    d.message = "no grid node in the ball";
    return d;
  }

  double best = 0.0;
  for (int j = 0; j < dom.ny; ++j) {
    for (int i = 0; i < dom.nx; ++i) {
      if (!(grad.z[dom.index(i, j)] >= cfg.z_min)) continue;
      const double P = aux_value(dom, field, grad, cfg, ball, st, i, j);
      if (!(P > 0.0)) continue;
      ++d.candidates;
      if (P > best) {
        best = P;
        d.argmax_i = i;
        d.argmax_j = j;
      }
    }
  }
  if (d.candidates == 0) {
    d.degenerate = true;
    d.message = "no node with z >= z_min inside the ball";
    return d;
  }
  const int i = d.argmax_i, j = d.argmax_j;
  d.argmax = {dom.x(i), dom.y(j)};
  d.P_max = best;

  const double h = dom.h();
  auto logP = [&](int a, int b) -> std::optional<double> {
    if (a < 0 || b < 0 || a >= dom.nx || b >= dom.ny) return std::nullopt;
    const double P = aux_value(dom, field, grad, cfg, ball, st, a, b);
    if (!(P > 0.0)) return std::nullopt;
    return std::log(P);
  };
  const double l0 = std::log(best);
  auto derivative = [&](std::optional<double> minus, std::optional<double> plus) {
    if (minus && plus) return (*plus - *minus) / (2.0 * h);
    if (plus) return (*plus - l0) / h;
    if (minus) return (l0 - *minus) / h;
    return 0.0;
  };
  const double gx = derivative(logP(i - 1, j), logP(i + 1, j));
  const double gy = derivative(logP(i, j - 1), logP(i, j + 1));
  d.stationarity = std::hypot(gx, gy);

  NodeState s;
  s.x = d.argmax;
  s.u = field.at(i, j);
  s.grad_u = {grad.ux[dom.index(i, j)], grad.uy[dom.index(i, j)]};
  s.R = ball.R;
  s.center = {ball.cx, ball.cy};
  s.M = st.M;
  s.m = st.m;
  d.terms = compute_Iterms(s, model, cfg, C_suite);
  return d;
}

double calibrate_suite_constant(const fd2d::GridSolution& field, const NonlinearityModel& model,
                                const AuxConfig& cfg, const Ball& ball) {
  const AuxDiagnostics d = verify_max_inequality(field, model, cfg, ball, 1.0);
  if (d.degenerate) throw ParameterError("cannot calibrate on a degenerate field: " + d.message);
  const auto& I = d.terms.I;
  const double deficit = d.terms.lhs - (I[5] + I[6] + I[7]);
  return std::max(0.0, deficit / I[8]);
}

std::string to_json(const AuxDiagnostics& d) {
  nlohmann::ordered_json j;
  j["config"] = d.config.describe();
  j["degenerate"] = d.degenerate;
  if (d.degenerate) {
    j["message"] = d.message;
    return j.dump(2);
  }
  j["argmax"] = {d.argmax[0], d.argmax[1]};
  j["P_max"] = d.P_max;
  j["stationarity"] = d.stationarity;
  for (int k = 0; k < 9; ++k) j["I" + std::to_string(k + 1)] = d.terms.I[k];
  j["lhs"] = d.terms.lhs;
  j["rhs"] = d.terms.rhs;
  j["margin"] = d.terms.margin;
  j["C_suite"] = d.C_suite;
  return j.dump(2);
}

}  // namespace mcgrad::bernstein
