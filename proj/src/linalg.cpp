#include "mcgrad/linalg.hpp"

#include <cmath>

#include "mcgrad/error.hpp"

namespace mcgrad::linalg {

namespace {

void check_same(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ParameterError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

std::optional<Vector> probe_diagonal(const LinearOperator& A) {
  if (A.dim > 10000) return std::nullopt;
  Vector e(A.dim, 0.0), col(A.dim, 0.0), d(A.dim, 0.0);
  for (std::size_t i = 0; i < A.dim; ++i) {
    e[i] = 1.0;
    A.apply(e, col);
    d[i] = col[i];
    e[i] = 0.0;
  }
  return d;
}

std::string to_string(KrylovStatus s) {
  switch (s) {
    case KrylovStatus::Converged: return "converged";
    case KrylovStatus::MaxIterations: return "max-iterations";
    case KrylovStatus::Breakdown: return "breakdown";
  }
  return "?";
}

KrylovResult solve_bicgstab(const LinearOperator& A, std::span<const double> b, double rtol,
                            double atol, int max_iter, std::optional<std::span<const double>> x0) {
  const std::size_t n = A.dim;
  check_same(b.size(), n);
  if (!(rtol > 0.0 && rtol < 1.0)) throw ParameterError("bicgstab: rtol must lie in (0, 1)");
  if (!A.apply) throw ParameterError("bicgstab: operator has no apply");

  std::optional<Vector> diag = A.diag ? A.diag : probe_diagonal(A);
  Vector inv_diag;
  if (diag) {
    check_same(diag->size(), n);
    inv_diag.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double di = (*diag)[i];
      inv_diag[i] = (di != 0.0 && std::isfinite(di)) ? 1.0 / di : 1.0;
    }
  }
  auto precondition = [&](std::span<const double> in, std::span<double> out) {
    if (inv_diag.empty()) {
      std::copy(in.begin(), in.end(), out.begin());
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = inv_diag[i] * in[i];
    }
  };

  KrylovResult res;
  res.solution.assign(n, 0.0);
  if (x0) {
    check_same(x0->size(), n);
    std::copy(x0->begin(), x0->end(), res.solution.begin());
  }
  Vector& x = res.solution;

  const double target = rtol * norm2(b) + atol;
  Vector r(n), r_hat(n), p(n, 0.0), v(n, 0.0), p_hat(n), s(n), s_hat(n), t(n), tmp(n);

  auto true_residual = [&] {
    A.apply(x, tmp);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    return norm2(r);
  };

  double rnorm = true_residual();
  res.residual_norm = rnorm;
  if (rnorm <= target) {
    res.converged = true;
    res.status = KrylovStatus::Converged;
    return res;
  }

  int it = 0;
  // Outer loop restarts from the true residual if the recurrence drifted.
  while (it < max_iter) {
    r_hat = r;
    double rho_prev = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    bool recurrence_converged = false;
    bool first = true;

    while (it < max_iter) {
      ++it;
      const double rho = dot(r_hat, r);
      if (rho == 0.0 || !std::isfinite(rho)) {
        res.status = KrylovStatus::Breakdown;
        res.iterations = it;
        res.residual_norm = true_residual();
        res.converged = res.residual_norm <= target;
        if (res.converged) res.status = KrylovStatus::Converged;
        return res;
      }
      if (first) {
        p = r;
        first = false;
      } else {
        const double beta = (rho / rho_prev) * (alpha / omega);
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      }
      precondition(p, p_hat);
      A.apply(p_hat, v);
      const double rv = dot(r_hat, v);
      if (rv == 0.0 || !std::isfinite(rv)) {
        res.status = KrylovStatus::Breakdown;
        res.iterations = it;
        res.residual_norm = true_residual();
        res.converged = res.residual_norm <= target;
        if (res.converged) res.status = KrylovStatus::Converged;
        return res;
      }
      alpha = rho / rv;
      for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
      if (norm2(s) <= target) {
        axpy(alpha, p_hat, x);
        recurrence_converged = true;
        break;
      }
      precondition(s, s_hat);
      A.apply(s_hat, t);
      const double tt = dot(t, t);
      omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p_hat[i] + omega * s_hat[i];
        r[i] = s[i] - omega * t[i];
      }
      if (norm2(r) <= target) {
        recurrence_converged = true;
        break;
      }
      if (omega == 0.0) {
        res.status = KrylovStatus::Breakdown;
        res.iterations = it;
        res.residual_norm = true_residual();
        res.converged = res.residual_norm <= target;
        if (res.converged) res.status = KrylovStatus::Converged;
        return res;
      }
      rho_prev = rho;
    }

    rnorm = true_residual();
    res.iterations = it;
    res.residual_norm = rnorm;
    if (rnorm <= target) {
      res.converged = true;
      res.status = KrylovStatus::Converged;
      return res;
    }
    if (!recurrence_converged) break;
  }
  res.iterations = it;
  res.residual_norm = true_residual();
  res.converged = res.residual_norm <= target;
  res.status = res.converged ? KrylovStatus::Converged : KrylovStatus::MaxIterations;
  return res;
}

}  // namespace mcgrad::linalg
