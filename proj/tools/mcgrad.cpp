#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mcgrad/config.hpp"
#include "mcgrad/error.hpp"
#include "mcgrad/harness.hpp"

int main(int argc, char** argv) {
  using namespace mcgrad;

  CLI::App app{"Prescribed mean curvature gradient-estimate experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  std::uint64_t seed = 0;
  bool gnuplot = false;
  bool force = false;

  const char* names[] = {"check-conditions", "solve-radial", "solve-2d", "validate-bounds",
                         "fit-decay",        "bernstein",    "sweep"};
  const char* help[] = {"Check a structural condition on a nonlinearity",
                        "Radial profile from the origin or on an annulus",
                        "Newton-Krylov solve on a square",
                        "Evaluate an interior gradient bound on a grid solution",
                        "Fit a log-log decay slope to (R, g) pairs",
                        "Evaluate the maximum-principle inequality at the argmax",
                        "Liouville probe or blow-up envelope sweep"};
  for (int k = 0; k < 7; ++k) {
    auto* sub = app.add_subcommand(names[k], help[k]);
    sub->add_option("--config", config_path, "Experiment INI file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [experiment] out)");
    sub->add_option("--jobs", jobs, "Concurrent sweep instances")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Seed for randomized sampling");
    sub->add_flag("--gnuplot", gnuplot, "Also write gnuplot scripts");
    sub->add_flag("--force", force, "Ignore cached solutions");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : harness::kConfigError;
  }

  const auto* chosen = app.get_subcommands().front();
  bool seed_given = false;
  for (const auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) seed_given = true;
  }

  try {
    auto cfg = config::load_config_file(config_path);
    const auto kind = config::parse_kind(chosen->get_name());
    if (cfg.ini.has("experiment", "kind") && cfg.kind != kind) {
      const auto* e = cfg.ini.find("experiment", "kind");
      throw ConfigError(cfg.ini.source + ":" + std::to_string(e->line) + ": kind '" + e->value +
                        "' does not match subcommand '" + chosen->get_name() + "'");
    }
    cfg.kind = kind;
    harness::RunOptions opts;
    opts.out_dir = out_dir;
    opts.jobs = jobs;
    if (seed_given) opts.seed = seed;
    opts.gnuplot = gnuplot;
    opts.force = force;
    opts.log = &std::cout;
    const auto res = harness::run(std::move(cfg), opts);
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return harness::kConfigError;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return harness::kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return harness::kSolverFailure;
  }
}
