#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mcgrad/config.hpp"
#include "mcgrad/estimates.hpp"
#include "mcgrad/fd2d_solver.hpp"
#include "mcgrad/nonlinearity.hpp"
#include "mcgrad/radial_solver.hpp"

namespace mcgrad::harness {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverFailure = 3, kPropertyViolation = 4 };

struct RunOptions {
  /// Overrides [experiment] out when non-empty.
  std::string out_dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  bool gnuplot = false;
  /// Ignore cached solutions.
  bool force = false;
  std::ostream* log = nullptr;
};

struct RunResult {
  int exit_code = kOk;
  std::vector<std::string> files;
  std::string summary;
};

/// Dispatches on cfg.kind, writes reports under the output directory and
/// returns the exit status. Configuration problems raise ConfigError.
RunResult run(config::ExperimentConfig cfg, const RunOptions& opts);

/// Boundary data on [-R_dom, R_dom]^2 from a spec string:
///   const:c            u = c
///   affine:a,b,c       u = a x + b y + c
///   cap:H              u = -sqrt((2/H)^2 - |x|^2)
///   catenoid:ax,ay     u = arccosh(|x - (ax, ay)|)
///   wave:A             u = A (x/R_dom) cos(pi y / (2 R_dom))
fd2d::BoundaryFn make_boundary(std::string_view spec, double R_dom);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct ProbeOptions {
  bool radial = false;
  int n = 2;
  int grid = 65;
  estimates::BoundCase bound_case = estimates::BoundCase::E;
  double theta = 1.0;
  double eta = 0.5;
  double z_min = 1e-6;
  int jobs = 1;
  fd2d::NewtonOptions newton;
  radial::RadialOptions radial_opts;
  /// Grid solutions are cached here when non-empty, keyed by `cache_salt`
  /// and the instance parameters.
  std::string cache_dir;
  std::string cache_salt;
  bool force = false;
};

struct SweepRow {
  double R = 0.0;
  /// Oscillation over B_R(0).
  double L = 0.0;
  /// sup |grad u| over nodes with |x| <= R/2.
  double observed = 0.0;
  /// |grad u(0)|
  double center_gradient = 0.0;
  /// Minimal constant of the bound at the center.
  double C = 0.0;
  /// Bound at the center with the suite constant C_star.
  double bound = 0.0;
  bool failed = false;
  std::string note;
};

struct SweepReport {
  /// Sorted by R ascending.
  std::vector<SweepRow> rows;
  estimates::DecayFit fit;
  /// Center constant calibrated on the smallest R, then applied to every row.
  double C_star = 0.0;
  bool degenerate = false;
};

/// Solves with boundary data wave:A (grid) or center value 0 (radial) on
/// each R and fits the decay of the half-ball sup gradient.
SweepReport liouville_probe(const NonlinearityModel& model, double amplitude,
                            std::vector<double> R_list, const ProbeOptions& opts);

struct EnvelopeRow {
  double eps = 0.0;
  double R_star = 0.0;
  /// max of |u'(r)| (R* - r) over the window
  double C_star = 0.0;
  /// log-log slope of |u'| against R* - r over the window
  double slope = 0.0;
  int points = 0;
  bool failed = false;
};

/// IMCF blow-up envelope on R* - r in [window_min, window_max].
EnvelopeRow imcf_envelope(double eps, int n, double window_min, double window_max,
                          const radial::RadialOptions& ropts = {}, int samples = 41);

/// Grid solve with optional on-disk cache (`<dir>/<key>.grid` and `.json`).
fd2d::GridSolution cached_solve(const NonlinearityModel& model, const fd2d::Domain& dom,
                                const fd2d::BoundaryFn& g, const fd2d::NewtonOptions& nopts,
                                const std::string& cache_dir, const std::string& key, bool force);

}  // namespace mcgrad::harness
