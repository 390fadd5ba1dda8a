#include "mcgrad/fd2d_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcgrad/error.hpp"
#include "mcgrad/linalg.hpp"

namespace mcgrad::fd2d {

double Domain::inscribed_radius(int i, int j) const {
  const double hh = h();
  return hh * std::min({i, j, nx - 1 - i, ny - 1 - j});
}

void Domain::validate() const {
  if (!(R_dom > 0.0) || !std::isfinite(R_dom)) throw ParameterError("R_dom must be positive");
  if (nx < 3 || ny < 3) throw ParameterError("grid needs at least 3 x 3 nodes");
}

GridSolution make_grid(const Domain& dom, const BoundaryFn& g) {
  dom.validate();
  GridSolution sol;
  sol.R_dom = dom.R_dom;
  sol.nx = dom.nx;
  sol.ny = dom.ny;
  sol.h = dom.h();
  sol.u.assign(dom.size(), 0.0);
  for (int j = 0; j < dom.ny; ++j) {
    for (int i = 0; i < dom.nx; ++i) {
      if (!dom.is_boundary(i, j)) continue;
      const double v = g(dom.x(i), dom.y(j));
      if (!std::isfinite(v)) throw ParameterError("boundary data must be finite");
      sol.u[dom.index(i, j)] = v;
      sol.boundary.push_back(v);
    }
  }
  return sol;
}

std::vector<double> sample(const Domain& dom, const BoundaryFn& fn) {
  std::vector<double> out(dom.size());
  for (int j = 0; j < dom.ny; ++j) {
    for (int i = 0; i < dom.nx; ++i) out[dom.index(i, j)] = fn(dom.x(i), dom.y(j));
  }
  return out;
}

std::vector<double> residual(const Domain& dom, std::span<const double> u,
                             const NonlinearityModel& model) {
  const int nx = dom.nx, ny = dom.ny;
  if (u.size() != dom.size()) throw ParameterError("field size does not match the grid");
  const double h = dom.h();
  auto U = [&](int i, int j) { return u[static_cast<std::size_t>(j) * nx + i]; };

  // Fx(i+1/2, j) for i = 0..nx-2, j = 1..ny-2; Fy(i, j+1/2) for i = 1..nx-2, j = 0..ny-2.
  std::vector<double> fx(static_cast<std::size_t>(nx) * ny, 0.0);
  std::vector<double> fy(static_cast<std::size_t>(nx) * ny, 0.0);
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 0; i < nx - 1; ++i) {
      const double dn = (U(i + 1, j) - U(i, j)) / h;
      const double dt =
          ((U(i, j + 1) - U(i, j - 1)) + (U(i + 1, j + 1) - U(i + 1, j - 1))) / (4.0 * h);
      fx[static_cast<std::size_t>(j) * nx + i] = dn / std::sqrt(1.0 + dn * dn + dt * dt);
    }
  }
  for (int j = 0; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const double dn = (U(i, j + 1) - U(i, j)) / h;
      const double dt =
          ((U(i + 1, j) - U(i - 1, j)) + (U(i + 1, j + 1) - U(i - 1, j + 1))) / (4.0 * h);
      fy[static_cast<std::size_t>(j) * nx + i] = dn / std::sqrt(1.0 + dn * dn + dt * dt);
    }
  }
  std::vector<double> res(dom.size(), 0.0);
  for (int j = 1; j < ny - 1; ++j) {
    for (int i = 1; i < nx - 1; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      const double div = (fx[k] - fx[k - 1] + fy[k] - fy[k - nx]) / h;
      const double px = (U(i + 1, j) - U(i - 1, j)) / (2.0 * h);
      const double py = (U(i, j + 1) - U(i, j - 1)) / (2.0 * h);
      res[k] = div - model.value2(px, py);
    }
  }
  return res;
}

namespace {

std::vector<std::size_t> interior_indices(const Domain& dom) {
  std::vector<std::size_t> idx;
  idx.reserve(static_cast<std::size_t>(dom.nx - 2) * (dom.ny - 2));
  for (int j = 1; j < dom.ny - 1; ++j) {
    for (int i = 1; i < dom.nx - 1; ++i) idx.push_back(dom.index(i, j));
  }
  return idx;
}

std::vector<double> gather(std::span<const double> full, const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = full[idx[k]];
  return out;
}

}  // namespace

std::vector<double> harmonic_extension(const Domain& dom, std::span<const double> u, double tol) {
  dom.validate();
  const auto idx = interior_indices(dom);
  const int mx = dom.nx - 2, my = dom.ny - 2;
  std::vector<double> out(u.begin(), u.end());
  std::vector<double> rhs(idx.size(), 0.0);
  for (int j = 0; j < my; ++j) {
    for (int i = 0; i < mx; ++i) {
      const int gi = i + 1, gj = j + 1;
      double s = 0.0;
      if (gi == 1) s += u[dom.index(0, gj)];
      if (gi == dom.nx - 2) s += u[dom.index(dom.nx - 1, gj)];
      if (gj == 1) s += u[dom.index(gi, 0)];
      if (gj == dom.ny - 2) s += u[dom.index(gi, dom.ny - 1)];
      rhs[static_cast<std::size_t>(j) * mx + i] = s;
    }
  }
  linalg::LinearOperator A;
  A.dim = idx.size();
  A.diag = linalg::Vector(idx.size(), 4.0);
  A.apply = [mx, my](std::span<const double> v, std::span<double> out_v) {
    for (int j = 0; j < my; ++j) {
      for (int i = 0; i < mx; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * mx + i;
        double s = 4.0 * v[k];
        if (i > 0) s -= v[k - 1];
        if (i < mx - 1) s -= v[k + 1];
        if (j > 0) s -= v[k - mx];
        if (j < my - 1) s -= v[k + mx];
        out_v[k] = s;
      }
    }
  };
  const auto res = linalg::solve_bicgstab(A, rhs, tol, 0.0, 20000);
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = res.solution[k];
  return out;
}

GridSolution newton_solve(const NonlinearityModel& model, const Domain& dom, const BoundaryFn& g,
                          const NewtonOptions& opts) {
  GridSolution sol = make_grid(dom, g);
  const double bmax = linalg::norm_inf(sol.boundary);
  const double atol = opts.atol.value_or(1e-9 * (1.0 + bmax));

  if (opts.initial_guess) {
    if (opts.initial_guess->size() != dom.size()) {
      throw ParameterError("initial guess size does not match the grid");
    }
    std::vector<double> guess = *opts.initial_guess;
    for (int j = 0; j < dom.ny; ++j) {
      for (int i = 0; i < dom.nx; ++i) {
        if (dom.is_boundary(i, j)) guess[dom.index(i, j)] = sol.u[dom.index(i, j)];
      }
    }
    sol.u = std::move(guess);
  } else {
    sol.u = harmonic_extension(dom, sol.u);
  }

  const auto idx = interior_indices(dom);
  const std::size_t m = idx.size();
  auto interior_residual = [&](std::span<const double> full) {
    return gather(residual(dom, full, model), idx);
  };
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };

  std::vector<double> F = interior_residual(sol.u);
  double fnorm_inf = linalg::norm_inf(F);
  double fnorm2 = linalg::norm2(F);
  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());

  std::vector<double> work(dom.size());
  for (int it = 0;; ++it) {
    sol.residual_norm = fnorm_inf;
    sol.newton_iterations = it;
    if (!finite(F)) {
      sol.message = "residual is not finite";
      return sol;
    }
    if (fnorm_inf <= atol) {
      sol.converged = true;
      sol.message = "converged";
      return sol;
    }
    if (it >= opts.max_newton) {
      sol.message = "max_newton reached";
      return sol;
    }

    const double unorm = linalg::norm2(sol.u);
    auto jac_apply = [&](std::span<const double> v, std::span<double> out) {
      const double vnorm = linalg::norm2(v);
      if (vnorm == 0.0) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
      }
      const double sigma = sqrt_eps * (1.0 + unorm) / vnorm;
      work = sol.u;
      for (std::size_t k = 0; k < m; ++k) work[idx[k]] += sigma * v[k];
      const auto Fp = interior_residual(work);
      for (std::size_t k = 0; k < m; ++k) out[k] = (Fp[k] - F[k]) / sigma;
    };

    // Exact Jacobian diagonal of the 3 x 3 stencil by 9-colour probing.
    linalg::Vector diag(m, 0.0);
    {
      const int mx = dom.nx - 2;
      for (int c = 0; c < 9; ++c) {
        linalg::Vector v(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
          const int i = static_cast<int>(k % mx), j = static_cast<int>(k / mx);
          if ((i % 3) + 3 * (j % 3) == c) v[k] = 1.0;
        }
        linalg::Vector jv(m);
        jac_apply(v, jv);
        for (std::size_t k = 0; k < m; ++k) {
          if (v[k] != 0.0) diag[k] = jv[k];
        }
      }
    }

    linalg::LinearOperator J;
    J.dim = m;
    J.apply = jac_apply;
    J.diag = diag;
    linalg::Vector rhs(m);
    for (std::size_t k = 0; k < m; ++k) rhs[k] = -F[k];
    const auto lin = linalg::solve_bicgstab(J, rhs, opts.krylov_rtol, 0.0, opts.krylov_max_iter);
    sol.krylov_iterations += lin.iterations;

    double lambda = 1.0;
    std::vector<double> trial;
    std::vector<double> Ft;
    bool accepted = false;
    while (lambda >= opts.min_damping) {
      trial = sol.u;
      for (std::size_t k = 0; k < m; ++k) trial[idx[k]] += lambda * lin.solution[k];
      Ft = interior_residual(trial);
      if (finite(Ft) && linalg::norm2(Ft) <= (1.0 - 1e-4 * lambda) * fnorm2) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) {
      sol.message = "damping floor reached";
      sol.newton_iterations = it + 1;
      return sol;
    }
    sol.u = std::move(trial);
    F = std::move(Ft);
    fnorm_inf = linalg::norm_inf(F);
    fnorm2 = linalg::norm2(F);
  }
}

GradientField gradient_field(const GridSolution& sol) {
  const int nx = sol.nx, ny = sol.ny;
  if (nx < 3 || ny < 3) throw ParameterError("gradient field needs at least 3 x 3 nodes");
  const double h = sol.h;
  GradientField g;
  g.nx = nx;
  g.ny = ny;
  g.ux.resize(sol.u.size());
  g.uy.resize(sol.u.size());
  g.z.resize(sol.u.size());
  auto U = [&](int i, int j) { return sol.u[static_cast<std::size_t>(j) * nx + i]; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double dx, dy;
      if (i == 0) {
        dx = (-3.0 * U(0, j) + 4.0 * U(1, j) - U(2, j)) / (2.0 * h);
      } else if (i == nx - 1) {
        dx = (3.0 * U(i, j) - 4.0 * U(i - 1, j) + U(i - 2, j)) / (2.0 * h);
      } else {
        dx = (U(i + 1, j) - U(i - 1, j)) / (2.0 * h);
      }
      if (j == 0) {
        dy = (-3.0 * U(i, 0) + 4.0 * U(i, 1) - U(i, 2)) / (2.0 * h);
      } else if (j == ny - 1) {
        dy = (3.0 * U(i, j) - 4.0 * U(i, j - 1) + U(i, j - 2)) / (2.0 * h);
      } else {
        dy = (U(i, j + 1) - U(i, j - 1)) / (2.0 * h);
      }
      const std::size_t k = static_cast<std::size_t>(j) * nx + i;
      g.ux[k] = dx;
      g.uy[k] = dy;
      g.z[k] = dx * dx + dy * dy;
    }
  }
  return g;
}

double max_interior_error(const GridSolution& sol, const BoundaryFn& exact) {
  const Domain dom = sol.domain();
  double e = 0.0;
  for (int j = 1; j < sol.ny - 1; ++j) {
    for (int i = 1; i < sol.nx - 1; ++i) {
      e = std::max(e, std::abs(sol.at(i, j) - exact(dom.x(i), dom.y(j))));
    }
  }
  return e;
}

}  // namespace mcgrad::fd2d
