#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mcgrad/nonlinearity.hpp"

namespace mcgrad::radial {

struct RadialOptions {
  /// Local error tolerance of the embedded Runge-Kutta pair.
  double tol = 1e-10;
  /// Numerical blow-up when |q| / r^(n-1) reaches 1 - delta_blow.
  double delta_blow = 1e-6;
  int max_steps = 2'000'000;
  /// Largest step as a fraction of the integration length; keeps Hermite
  /// interpolation between nodes at the integrator's accuracy.
  double max_step_fraction = 1.0 / 512;
};

/// Sampled radial profile u(r) of (r^(n-1) w / sqrt(1 + w^2))' = r^(n-1) fhat(w),
/// w = u'. The flux q = r^(n-1) w / sqrt(1 + w^2) is the integrated state.
struct RadialSolution {
  int n = 2;
  std::vector<double> r;
  std::vector<double> u;
  std::vector<double> w;
  std::vector<double> q;
  /// dq/dr at each node, kept for Hermite interpolation.
  std::vector<double> dq;
  std::optional<double> blowup_radius;
  double tol = 0.0;
  double delta_blow = 0.0;
  int steps_accepted = 0;
  int steps_rejected = 0;

  std::size_t size() const { return r.size(); }
  double r_min() const { return r.front(); }
  double r_max() const { return r.back(); }

  struct Sample {
    double u;
    double w;
    double q;
  };
  /// Cubic Hermite interpolation of u (with u' = w) and q (with q' = dq),
  /// w recovered from q. Throws ParameterError outside [r_min, r_max].
  Sample sample(double radius) const;
};

/// Integrates from the origin with u(0) = u0 up to r_max or numerical blow-up.
/// Starts at r0 = 1e-6 r_max from the series q ~ fhat(0) r^n / n.
/// Throws std::runtime_error if fhat evaluates to NaN.
RadialSolution integrate_from_origin(const NonlinearityModel& model, int n, double u0,
                                     double r_max, const RadialOptions& opts = {});

/// Integrates outward from r_in with prescribed inner flux ratio
/// s_in = q(r_in) / r_in^(n-1) in [-1, 1]. Integration runs in xi = sqrt(r - r_in),
/// which keeps u smooth when |s_in| = 1 (infinite slope at r_in).
/// Returns nullopt if the profile blows up before r_out or s_in is inadmissible.
std::optional<RadialSolution> integrate_annulus(const NonlinearityModel& model, int n, double r_in,
                                                double r_out, double u_in, double s_in,
                                                const RadialOptions& opts = {});

enum class ShootingStatus { Converged, BracketFailure, NotConverged };

struct ShootingResult {
  RadialSolution solution;
  double initial_slope = 0.0;
  double initial_flux_ratio = 0.0;
  double boundary_residual = 0.0;
  int iterations = 0;
  ShootingStatus status = ShootingStatus::NotConverged;
  bool converged() const { return status == ShootingStatus::Converged; }
};

std::string to_string(ShootingStatus s);

/// Annulus Dirichlet problem u(r_in) = u_in, u(r_out) = u_out by shooting on
/// the inner slope. `tol` bounds |u(r_out) - u_out|; the integrator runs at
/// tol / 100 (floored at 1e-14).
ShootingResult solve_annulus_bvp(const NonlinearityModel& model, int n, double r_in, double r_out,
                                 double u_in, double u_out, double tol = 1e-10);

/// Recorded numerical blow-up radius, if any.
std::optional<double> detect_blowup(const RadialSolution& solution);

/// CSV with header `r,u,w,q`, 17 significant digits.
void write_csv(std::ostream& os, const RadialSolution& solution);

}  // namespace mcgrad::radial
