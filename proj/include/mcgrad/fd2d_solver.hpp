#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcgrad/nonlinearity.hpp"

namespace mcgrad::fd2d {

/// Node-aligned grid on [-R_dom, R_dom] x [-Ry, Ry] with spacing
/// h = 2 R_dom / (nx - 1) in both directions; Ry = h (ny - 1) / 2.
struct Domain {
  double R_dom = 1.0;
  int nx = 33;
  int ny = 33;

  double h() const { return 2.0 * R_dom / (nx - 1); }
  double x(int i) const { return -R_dom + i * h(); }
  double y(int j) const { return -0.5 * h() * (ny - 1) + j * h(); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == nx - 1 || j == ny - 1; }
  /// Distance from node (i, j) to the domain boundary.
  double inscribed_radius(int i, int j) const;
  /// Throws ParameterError unless R_dom > 0 and nx, ny >= 3.
  void validate() const;
};

using BoundaryFn = std::function<double(double x, double y)>;

struct GridSolution {
  double R_dom = 0.0;
  int nx = 0;
  int ny = 0;
  double h = 0.0;
  /// Nodal values, row-major (index j * nx + i), boundary ring included.
  std::vector<double> u;
  /// Dirichlet values of the boundary ring in row-major node order.
  std::vector<double> boundary;
  double residual_norm = 0.0;
  bool converged = false;
  int newton_iterations = 0;
  int krylov_iterations = 0;
  std::string message;

  Domain domain() const { return Domain{R_dom, nx, ny}; }
  double at(int i, int j) const { return u[static_cast<std::size_t>(j) * nx + i]; }
};

/// Grid with boundary ring set from `g` and interior set to zero.
GridSolution make_grid(const Domain& dom, const BoundaryFn& g);

/// Nodal samples of `fn` on every node.
std::vector<double> sample(const Domain& dom, const BoundaryFn& fn);

/// Discrete residual at interior nodes (zero on the boundary ring):
/// divergence of the face fluxes Dn / sqrt(1 + Dn^2 + Dt^2) minus f at the
/// nodal central-difference gradient.
std::vector<double> residual(const Domain& dom, std::span<const double> u,
                             const NonlinearityModel& model);

struct NewtonOptions {
  /// Defaults to 1e-9 (1 + max |boundary|).
  std::optional<double> atol;
  int max_newton = 50;
  double krylov_rtol = 1e-4;
  int krylov_max_iter = 4000;
  double min_damping = 1.0 / (1 << 20);
  /// Full nodal field; boundary entries are overwritten with the data.
  /// Defaults to the discrete harmonic extension of the boundary data.
  std::optional<std::vector<double>> initial_guess;
};

/// Damped Jacobian-free Newton-Krylov solve of the Dirichlet problem.
/// Non-convergence is reported through `converged` and `message`.
GridSolution newton_solve(const NonlinearityModel& model, const Domain& dom, const BoundaryFn& g,
                          const NewtonOptions& opts = {});

/// Solution of the 5-point Laplace equation with the boundary values of `u`.
std::vector<double> harmonic_extension(const Domain& dom, std::span<const double> u,
                                       double tol = 1e-8);

struct GradientField {
  int nx = 0;
  int ny = 0;
  std::vector<double> ux;
  std::vector<double> uy;
  std::vector<double> z;
};

/// Central differences at interior nodes, second-order one-sided differences
/// on the boundary ring.
GradientField gradient_field(const GridSolution& sol);

/// Max |u - exact| over interior nodes.
double max_interior_error(const GridSolution& sol, const BoundaryFn& exact);

/// "MCGRAD-GRID v1" file: header lines magic, nx, ny, h, R_dom, a blank line,
/// then nx * ny little-endian IEEE doubles in row-major order.
void write_grid(std::ostream& os, const GridSolution& sol);
void write_grid_file(const std::string& path, const GridSolution& sol);
/// Throws ConfigError on a malformed stream. Solver metadata is not stored:
/// the result has converged = false and residual_norm = NaN.
GridSolution read_grid(std::istream& is);
GridSolution read_grid_file(const std::string& path);

}  // namespace mcgrad::fd2d
