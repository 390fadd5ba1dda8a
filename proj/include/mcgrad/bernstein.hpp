#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcgrad/fd2d_solver.hpp"
#include "mcgrad/nonlinearity.hpp"

namespace mcgrad::bernstein {

enum class FChoice { Z, Log1pZ };

struct HChoice {
  enum class Kind { One, PowerWeight };
  Kind kind = Kind::One;
  double b = 2.0;
  /// (u + M - 2m + 1)^(-1/b) when true, (u + M - 2m)^(-1/b) otherwise.
  bool plus_one = true;

  static HChoice one() { return {}; }
  static HChoice power(double b, bool plus_one) { return {Kind::PowerWeight, b, plus_one}; }
};

struct AuxConfig {
  FChoice F = FChoice::Z;
  HChoice h;
  double alpha = 2.0;
  double z_min = 1e-6;

  /// e.g. "F=z;h=one;alpha=2" or "F=log1pz;h=pow(b=2,plus_one=0);alpha=2".
  std::string describe() const;
};

/// Cutoff exponent used for each estimate: max(2/theta, 1) for (A1),
/// max(1/(theta - 1), 1) for (A2), 2 otherwise.
double default_alpha(ConditionTag tag, double theta);

struct Cutoff {
  double phi = 0.0;
  std::vector<double> grad;
};

/// phi = (1 - |x|^2 / R^2)^alpha and its gradient. Throws ParameterError for |x| > R.
Cutoff cutoff_phi(std::span<const double> x, double R, double alpha);

struct Weight {
  double h = 1.0;
  /// h' / h
  double d1 = 0.0;
  /// h'' / h
  double d2 = 0.0;
};

/// h(u) and its log-derivatives. nullopt when the base u + M - 2m (+1) is not
/// positive, which for the variant without +1 means a constant field.
std::optional<Weight> weight_h(double u, const HChoice& choice, double M, double m);

struct Profile {
  double F = 0.0;
  double dF = 0.0;
  double d2F = 0.0;
};

Profile profile_F(FChoice F, double z);

struct GH {
  double G = 0.0;
  double H = 0.0;
};

/// G = F''/F - F'^2/F^2 + (3 + 2z)/(2(1+z)^2) F'/F and
/// H = -F''/F + F'^2/F^2 - F'/(F(1+z)) from F and its derivatives.
/// Throws ParameterError for z <= 0.
GH coefficients_GH(FChoice F, double z);
/// Closed forms: F = z gives G = -(2+z)/(2z^2(1+z)^2), H = 1/(z^2(1+z));
/// F = log(1+z) gives G = (log(1+z) - 2(1+z))/(2(1+z)^3 log^2(1+z)),
/// H = 1/((1+z)^2 log^2(1+z)).
GH closed_form_GH(FChoice F, double z);

/// Pointwise data entering the inequality at one node.
struct NodeState {
  std::array<double, 2> x{};
  double u = 0.0;
  std::array<double, 2> grad_u{};
  double R = 1.0;
  std::array<double, 2> center{};
  /// sup and inf of u over the ball (power weights only).
  double M = 0.0;
  double m = 0.0;
};

struct Iterms {
  std::array<double, 9> I{};
  double lhs = 0.0;
  double rhs = 0.0;
  /// rhs - lhs
  double margin = 0.0;
  /// sum of |I_k|, the natural scale of the margin
  double scale = 0.0;
};

/// I_1..I_9 at a node in dimension n = 2 with grad z from the first-order
/// condition grad z = -(F/F')(grad phi / phi + (h'/h) grad u) and
/// C_{n,alpha} = C_suite in I_9. Throws ParameterError if phi = 0 or z <= 0.
Iterms compute_Iterms(const NodeState& s, const NonlinearityModel& model, const AuxConfig& cfg,
                      double C_suite);

struct Ball {
  double cx = 0.0;
  double cy = 0.0;
  double R = 1.0;
};

struct AuxDiagnostics {
  bool degenerate = false;
  std::string message;
  int argmax_i = -1;
  int argmax_j = -1;
  std::array<double, 2> argmax{};
  double P_max = 0.0;
  /// |grad log(h F phi)| at the argmax by central differences.
  double stationarity = 0.0;
  Iterms terms;
  AuxConfig config;
  double C_suite = 0.0;
  int candidates = 0;
};

/// Locates the discrete argmax of h F(z) phi over nodes in the open ball with
/// z >= z_min (ties: smallest row-major index) and evaluates the inequality there.
AuxDiagnostics verify_max_inequality(const fd2d::GridSolution& field,
                                     const NonlinearityModel& model, const AuxConfig& cfg,
                                     const Ball& ball, double C_suite);

/// Smallest C_suite >= 0 making the margin at the argmax of `field` nonnegative.
double calibrate_suite_constant(const fd2d::GridSolution& field, const NonlinearityModel& model,
                                const AuxConfig& cfg, const Ball& ball);

/// h F(z) phi at every node (0 outside the candidate set).
std::vector<double> auxiliary_field(const fd2d::GridSolution& field, const AuxConfig& cfg,
                                    const Ball& ball);

/// JSON object with keys argmax, P_max, stationarity, I1..I9, lhs, rhs, margin, config.
std::string to_json(const AuxDiagnostics& d);

}  // namespace mcgrad::bernstein
