#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcgrad::linalg {

using Vector = std::vector<double>;

/// Fixed-order sum of a_i * b_i. Throws ParameterError on size mismatch.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y <- alpha * x + y
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// Matrix-free linear operator. `apply` writes A*x into y (y has dim entries
/// and does not alias x).
struct LinearOperator {
  std::size_t dim = 0;
  std::function<void(std::span<const double> x, std::span<double> y)> apply;
  std::optional<Vector> diag;
};

/// Diagonal of A by probing with unit vectors. Only for dim <= 1e4; larger
/// operators must supply their own diagonal.
std::optional<Vector> probe_diagonal(const LinearOperator& A);

enum class KrylovStatus { Converged, MaxIterations, Breakdown };

std::string to_string(KrylovStatus s);

struct KrylovResult {
  Vector solution;
  int iterations = 0;
  /// True residual ||b - A x||_2 of the returned solution.
  double residual_norm = 0.0;
  bool converged = false;
  KrylovStatus status = KrylovStatus::MaxIterations;
};

/// Jacobi-preconditioned BiCGSTAB. Stops when ||b - A x|| <= rtol ||b|| + atol.
/// Uses A.diag when present, otherwise probes the diagonal (small operators)
/// or runs unpreconditioned. `x0` defaults to zero.
KrylovResult solve_bicgstab(const LinearOperator& A, std::span<const double> b, double rtol,
                            double atol, int max_iter,
                            std::optional<std::span<const double>> x0 = std::nullopt);

}  // namespace mcgrad::linalg
