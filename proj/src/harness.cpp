#include "mcgrad/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mcgrad/bernstein.hpp"
#include "mcgrad/error.hpp"

namespace mcgrad::harness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::vector<double> parse_numbers(std::string_view args, std::string_view whole) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= args.size()) {
    const auto comma = args.find(',', start);
    const std::string_view item =
        args.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    double v = 0.0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() ||
        !std::isfinite(v)) {
      throw ConfigError("malformed boundary spec '" + std::string(whole) + "'");
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void run_parallel(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) task(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          task(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

fd2d::BoundaryFn make_boundary(std::string_view spec, double R_dom) {
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  if (colon == std::string_view::npos) throw ConfigError("boundary spec needs parameters: '" + std::string(spec) + "'");
  const auto p = parse_numbers(spec.substr(colon + 1), spec);
  auto need = [&](std::size_t k) {
    if (p.size() != k) throw ConfigError("boundary spec '" + std::string(spec) + "' expects " + std::to_string(k) + " parameter(s)");
  };
  if (name == "const") {
    need(1);
    const double c = p[0];
    return [c](double, double) { return c; };
  }
  if (name == "affine") {
    need(3);
    const double a = p[0], b = p[1], c = p[2];
    return [a, b, c](double x, double y) { return a * x + b * y + c; };
  }
  if (name == "cap") {
    need(1);
    if (!(p[0] > 0.0)) throw ConfigError("cap: H must be positive");
    const double rho = 2.0 / p[0];
    if (!(rho > std::sqrt(2.0) * R_dom)) throw ConfigError("cap: sphere radius 2/H must exceed the domain diagonal");
    return [rho](double x, double y) { return -std::sqrt(rho * rho - x * x - y * y); };
  }
  if (name == "catenoid") {
    need(2);
    const double ax = p[0], ay = p[1];
    return [ax, ay](double x, double y) { return std::acosh(std::max(1.0, std::hypot(x - ax, y - ay))); };
  }
  if (name == "wave") {
    need(1);
    const double A = p[0];
    return [A, R_dom](double x, double y) {
      return A * (x / R_dom) * std::cos(std::numbers::pi * y / (2.0 * R_dom));
    };
  }
  throw ConfigError("unknown boundary spec '" + std::string(spec) + "'");
}

void write_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

fd2d::GridSolution cached_solve(const NonlinearityModel& model, const fd2d::Domain& dom,
                                const fd2d::BoundaryFn& g, const fd2d::NewtonOptions& nopts,
                                const std::string& cache_dir, const std::string& key, bool force) {
  if (cache_dir.empty()) return fd2d::newton_solve(model, dom, g, nopts);
  const fs::path grid_path = fs::path(cache_dir) / (key + ".grid");
  const fs::path meta_path = fs::path(cache_dir) / (key + ".json");
  if (!force && fs::exists(grid_path) && fs::exists(meta_path)) {
    fd2d::GridSolution sol = fd2d::read_grid_file(grid_path.string());
    std::ifstream is(meta_path);
    const auto meta = nlohmann::json::parse(is, nullptr, false);
    if (!meta.is_discarded() && sol.nx == dom.nx && sol.ny == dom.ny) {
      sol.converged = meta.value("converged", false);
      sol.residual_norm = meta.value("residual_norm", std::nan(""));
      sol.newton_iterations = meta.value("newton_iterations", 0);
      sol.krylov_iterations = meta.value("krylov_iterations", 0);
      sol.message = meta.value("message", std::string("cached"));
      return sol;
    }
  }
  fd2d::GridSolution sol = fd2d::newton_solve(model, dom, g, nopts);
  std::ostringstream grid;
  fd2d::write_grid(grid, sol);
  write_atomic(grid_path, grid.str());
  ordered_json meta;
  meta["converged"] = sol.converged;
  meta["residual_norm"] = sol.residual_norm;
  meta["newton_iterations"] = sol.newton_iterations;
  meta["krylov_iterations"] = sol.krylov_iterations;
  meta["message"] = sol.message;
  write_atomic(meta_path, meta.dump(2) + "\n");
  return sol;
}

SweepReport liouville_probe(const NonlinearityModel& model, double amplitude,
                            std::vector<double> R_list, const ProbeOptions& opts) {
  std::sort(R_list.begin(), R_list.end());
  SweepReport rep;
  rep.rows.resize(R_list.size());
  std::string wave = "wave:" + csv_number(amplitude);

  run_parallel(R_list.size(), opts.jobs, [&](std::size_t k) {
    const double R = R_list[k];
    SweepRow& row = rep.rows[k];
    row.R = R;
    try {
      if (opts.radial) {
        const auto prof = radial::integrate_from_origin(model, opts.n, 0.0, R, opts.radial_opts);
        if (prof.blowup_radius) {
          row.failed = true;
          row.note = "blow-up before R";
          return;
        }
        for (std::size_t i = 0; i < prof.size(); ++i) {
          if (prof.r[i] <= 0.5 * R) row.observed = std::max(row.observed, std::abs(prof.w[i]));
        }
        row.L = estimates::oscillation(prof, 0.0, R);
        row.center_gradient = 0.0;
        row.C = 0.0;
      } else {
        const fd2d::Domain dom{R, opts.grid, opts.grid};
        const auto g = make_boundary(wave, R);
        const std::string key = config::hex64(config::fnv1a64(
            opts.cache_salt + "#model=" + model.to_string() + "#" + wave + "#R=" + csv_number(R) +
            "#grid=" + std::to_string(opts.grid)));
        const auto sol = cached_solve(model, dom, g, opts.newton, opts.cache_dir, key, opts.force);
        if (!sol.converged) {
          row.failed = true;
          row.note = sol.message;
          return;
        }
        const auto grad = fd2d::gradient_field(sol);
        for (int j = 0; j < dom.ny; ++j) {
          for (int i = 0; i < dom.nx; ++i) {
            const double x = dom.x(i), y = dom.y(j);
            if (x * x + y * y <= 0.25 * R * R) {
              row.observed = std::max(row.observed, std::sqrt(grad.z[dom.index(i, j)]));
            }
          }
        }
        const int ci = dom.nx / 2, cj = dom.ny / 2;
        const double z0 = grad.z[dom.index(ci, cj)];
        row.center_gradient = std::sqrt(z0);
        row.L = estimates::oscillation(sol, 0.0, 0.0, R);
        row.C = estimates::min_constant(opts.bound_case,
                                        estimates::observed_quantity(opts.bound_case, z0), R,
                                        row.L, opts.theta, opts.eta);
      }
    } catch (const ParameterError& e) {
      row.failed = true;
      row.note = e.what();
    }
  });

  std::vector<std::pair<double, double>> pairs;
  bool have_star = false;
  for (auto& row : rep.rows) {
    if (row.failed) continue;
    if (!have_star) {
      rep.C_star = row.C;
      have_star = true;
    }
    estimates::BoundParams p;
    p.R = row.R;
    p.L = row.L;
    p.theta = opts.theta;
    p.eta = opts.eta;
    p.C = rep.C_star;
    row.bound = estimates::bound_value(opts.bound_case, p);
    pairs.emplace_back(row.R, row.observed);
  }
  if (pairs.size() >= 3) {
    rep.fit = estimates::fit_decay_exponent(pairs);
    rep.degenerate = rep.fit.degenerate;
  } else {
    rep.degenerate = true;
    rep.fit.degenerate = true;
    rep.fit.slope = rep.fit.intercept = std::nan("");
  }
  return rep;
}

EnvelopeRow imcf_envelope(double eps, int n, double window_min, double window_max,
                          const radial::RadialOptions& ropts, int samples) {
  EnvelopeRow row;
  row.eps = eps;
  const auto model = NonlinearityModel::imcf(eps);
  // The flux bound q >= eps r^n / n forces blow-up before n / eps.
  const auto prof = radial::integrate_from_origin(model, n, 0.0, 1.1 * n / eps, ropts);
  if (!prof.blowup_radius) {
    row.failed = true;
    return row;
  }
  row.R_star = *prof.blowup_radius;
  std::vector<std::pair<double, double>> pairs;
  for (int k = 0; k < samples; ++k) {
    const double d = window_min * std::pow(window_max / window_min, k / (samples - 1.0));
    const double r = row.R_star - d;
    if (r < prof.r_min()) continue;
    const double w = std::abs(prof.sample(r).w);
    row.C_star = std::max(row.C_star, w * d);
    pairs.emplace_back(d, w);
  }
  row.points = static_cast<int>(pairs.size());
  if (pairs.size() < 3) {
    row.failed = true;
    return row;
  }
  const auto fit = estimates::fit_decay_exponent(pairs);
  row.slope = fit.slope;
  row.failed = fit.degenerate;
  return row;
}

namespace {

struct Emitter {
  fs::path dir;
  RunResult& result;
  bool gnuplot;

  void file(const std::string& name, std::string_view content) {
    write_atomic(dir / name, content);
    result.files.push_back((dir / name).string());
  }
  void plot(const std::string& csv, int xcol, int ycol, const std::string& title, bool logscale) {
    if (!gnuplot) return;
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set title '" << title << "'\n";
    if (logscale) gp << "set logscale xy\n";
    gp << "plot '" << csv << "' using " << xcol << ':' << ycol << " with linespoints\n"
       << "pause -1\n";
    const std::string name = csv.substr(0, csv.rfind('.')) + ".gp";
    file(name, gp.str());
  }
};

ordered_json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

fd2d::NewtonOptions newton_options(const config::ExperimentConfig& cfg) {
  fd2d::NewtonOptions o;
  o.atol = cfg.newton_atol;
  o.max_newton = cfg.max_newton;
  o.krylov_rtol = cfg.krylov_rtol;
  return o;
}

radial::RadialOptions radial_options(const config::ExperimentConfig& cfg) {
  radial::RadialOptions o;
  o.tol = cfg.tol;
  o.delta_blow = cfg.delta_blow;
  return o;
}

bernstein::AuxConfig aux_config(const config::ExperimentConfig& cfg) {
  bernstein::AuxConfig a;
  a.F = cfg.F == "z" ? bernstein::FChoice::Z : bernstein::FChoice::Log1pZ;
  a.h = cfg.h == "one" ? bernstein::HChoice::one() : bernstein::HChoice::power(cfg.b, cfg.plus_one);
  a.alpha = cfg.alpha.value_or(
      bernstein::default_alpha(parse_condition_tag(cfg.tag), cfg.cond_theta.value_or(cfg.theta)));
  a.z_min = cfg.z_min;
  return a;
}

void log_line(const RunOptions& opts, const std::string& s) {
  if (opts.log) *opts.log << s << '\n';
}

}  // namespace

RunResult run(config::ExperimentConfig cfg, const RunOptions& opts) {
  RunResult result;
  if (opts.seed) cfg.seed = *opts.seed;
  const fs::path out = opts.out_dir.empty() ? fs::path(cfg.out) : fs::path(opts.out_dir);
  fs::create_directories(out);
  const std::string cache_dir = (out / "cache").string();
  Emitter emit{out, result, opts.gnuplot};
  const NonlinearityModel model = NonlinearityModel::parse(cfg.model);
  const std::string salt = cfg.canonical();

  auto solve_grid = [&]() {
    const fd2d::Domain dom{cfg.R, cfg.grid, cfg.grid};
    const auto g = make_boundary(cfg.data, cfg.R);
    const std::string key = config::hex64(cfg.cache_key());
    return cached_solve(model, dom, g, newton_options(cfg), cache_dir, key, opts.force);
  };

  switch (cfg.kind) {
    case config::ExperimentKind::CheckConditions: {
      const ConditionTag tag = parse_condition_tag(cfg.tag);
      SampleSpec sampling;
      sampling.magnitudes = cfg.magnitudes;
      sampling.directions = cfg.directions;
      sampling.dim = cfg.n;
      sampling.seed = cfg.seed;
      ordered_json j;
      j["model"] = model.to_string();
      j["tag"] = to_string(tag);
      std::optional<ConditionSpec> spec;
      const bool given = cfg.m1 || cfg.m2 || cfg.m3 || cfg.cond_theta;
      if (given) {
        ConditionSpec s;
        s.tag = tag;
        s.m1 = cfg.m1.value_or(0.0);
        s.m2 = cfg.m2.value_or(0.0);
        s.m3 = cfg.m3.value_or(0.0);
        s.theta = cfg.cond_theta.value_or(0.0);
        s.validate();
        spec = s;
      } else {
        spec = synthesize_constants(model, tag, sampling);
      }
      j["synthesized"] = !given;
      if (!spec) {
        j["status"] = "infeasible";
        result.exit_code = kPropertyViolation;
        result.summary = "infeasible";
      } else {
        const auto rep = check_condition(model, *spec, sampling);
        j["status"] = rep.holds ? "holds" : "violated";
        j["constants"] = {{"m1", spec->m1}, {"m2", spec->m2}, {"m3", spec->m3}, {"theta", spec->theta}};
        j["samples_checked"] = rep.samples_checked;
        j["worst_margin"] = rep.worst_margin;
        if (rep.witness) j["witness"] = *rep.witness;
        result.exit_code = rep.holds ? kOk : kPropertyViolation;
        result.summary = rep.holds ? "holds" : "violated";
      }
      emit.file("conditions.json", j.dump(2) + "\n");
      break;
    }

    case config::ExperimentKind::SolveRadial: {
      ordered_json j;
      j["model"] = model.to_string();
      j["n"] = cfg.n;
      radial::RadialSolution sol;
      if (cfg.r_in || cfg.r_out) {
        if (!(cfg.r_in && cfg.r_out && cfg.u_in && cfg.u_out)) {
          throw ConfigError(cfg.ini.source + ": annulus problems need r_in, r_out, u_in and u_out");
        }
        if (!(*cfg.r_in < *cfg.r_out)) throw ConfigError(cfg.ini.source + ": r_in must be below r_out");
        auto sh = radial::solve_annulus_bvp(model, cfg.n, *cfg.r_in, *cfg.r_out, *cfg.u_in,
                                            *cfg.u_out, cfg.tol);
        j["problem"] = "annulus";
        j["status"] = radial::to_string(sh.status);
        j["initial_slope"] = number_or_null(sh.initial_slope);
        j["initial_flux_ratio"] = sh.initial_flux_ratio;
        j["boundary_residual"] = number_or_null(sh.boundary_residual);
        j["iterations"] = sh.iterations;
        if (!sh.converged()) result.exit_code = kSolverFailure;
        result.summary = radial::to_string(sh.status);
        sol = std::move(sh.solution);
      } else {
        sol = radial::integrate_from_origin(model, cfg.n, cfg.u0, cfg.R, radial_options(cfg));
        j["problem"] = "origin";
        j["blowup_radius"] = sol.blowup_radius ? ordered_json(*sol.blowup_radius) : ordered_json(nullptr);
        result.summary = sol.blowup_radius ? "blow-up at r = " + csv_number(*sol.blowup_radius)
                                           : "reached r_max";
      }
      j["nodes"] = sol.size();
      j["steps_accepted"] = sol.steps_accepted;
      j["steps_rejected"] = sol.steps_rejected;
      std::ostringstream csv;
      radial::write_csv(csv, sol);
      emit.file("profile.csv", csv.str());
      emit.plot("profile.csv", 1, 2, "u(r)", false);
      emit.file("radial.json", j.dump(2) + "\n");
      break;
    }

    case config::ExperimentKind::Solve2D: {
      const auto sol = solve_grid();
      ordered_json j;
      j["model"] = model.to_string();
      j["boundary"] = cfg.data;
      j["nx"] = sol.nx;
      j["ny"] = sol.ny;
      j["h"] = sol.h;
      j["converged"] = sol.converged;
      j["residual_norm"] = number_or_null(sol.residual_norm);
      j["newton_iterations"] = sol.newton_iterations;
      j["krylov_iterations"] = sol.krylov_iterations;
      j["message"] = sol.message;
      if (cfg.exact) {
        j["max_error"] = fd2d::max_interior_error(sol, make_boundary(cfg.data, cfg.R));
      }
      std::ostringstream grid;
      fd2d::write_grid(grid, sol);
      emit.file("solution.grid", grid.str());
      emit.file("solution.json", j.dump(2) + "\n");
      result.exit_code = sol.converged ? kOk : kSolverFailure;
      result.summary = sol.converged ? "converged" : "not converged: " + sol.message;
      break;
    }

    case config::ExperimentKind::ValidateBounds: {
      const auto bc = estimates::parse_bound_case(cfg.bound_case);
      const auto sol = solve_grid();
      if (!sol.converged) {
        result.exit_code = kSolverFailure;
        result.summary = "not converged: " + sol.message;
        ordered_json j;
        j["converged"] = false;
        j["message"] = sol.message;
        emit.file("bounds.json", j.dump(2) + "\n");
        break;
      }
      estimates::FieldOptions fo;
      fo.theta = cfg.theta;
      fo.eta = cfg.eta;
      fo.z_min = cfg.z_min;
      const auto fc = estimates::min_constant_field(bc, sol, fo);
      const double C = cfg.C.value_or(fc.C);
      std::vector<estimates::ReportRow> rows;
      for (const auto& pb : fc.points) {
        estimates::BoundParams p;
        p.R = pb.R;
        p.L = pb.L;
        p.theta = cfg.theta;
        p.eta = cfg.eta;
        p.C = C;
        rows.push_back(estimates::make_row(bc, p, pb.observed));
      }
      std::ostringstream csv;
      estimates::write_report_csv(csv, rows);
      emit.file("bounds.csv", csv.str());
      emit.plot("bounds.csv", 2, 9, "bound - observed against R", false);
      const auto viol = estimates::bound_violations(bc, fc, C, cfg.theta, cfg.eta);
      ordered_json j;
      j["case"] = estimates::to_string(bc);
      j["points"] = fc.points.size();
      j["min_constant"] = fc.C;
      j["C"] = C;
      j["violations"] = viol.size();
      emit.file("bounds.json", j.dump(2) + "\n");
      result.exit_code = viol.empty() ? kOk : kPropertyViolation;
      result.summary = std::to_string(viol.size()) + " violation(s), minimal C = " + csv_number(fc.C);
      break;
    }

    case config::ExperimentKind::FitDecay: {
      if (cfg.pairs.size() < 3) throw ConfigError(cfg.ini.source + ": [fit] pairs needs at least 3 entries");
      estimates::DecayFit fit;
      try {
        fit = estimates::fit_decay_exponent(cfg.pairs);
      } catch (const ParameterError& e) {
        throw ConfigError(cfg.ini.source + ": " + e.what());
      }
      ordered_json j;
      j["slope"] = number_or_null(fit.slope);
      j["intercept"] = number_or_null(fit.intercept);
      j["max_abs_residual"] = number_or_null(fit.max_abs_residual);
      j["degenerate"] = fit.degenerate;
      j["used"] = fit.pairs.size();
      j["excluded"] = fit.excluded;
      emit.file("decay.json", j.dump(2) + "\n");
      result.summary = fit.degenerate ? "degenerate" : "slope = " + csv_number(fit.slope);
      break;
    }

    case config::ExperimentKind::BernsteinDiagnose: {
      const auto sol = solve_grid();
      if (!sol.converged) {
        result.exit_code = kSolverFailure;
        result.summary = "not converged: " + sol.message;
        break;
      }
      const auto aux = aux_config(cfg);
      const bernstein::Ball ball{0.0, 0.0, cfg.R};
      auto probe = bernstein::verify_max_inequality(sol, model, aux, ball, 0.0);
      if (probe.degenerate) {
        emit.file("bernstein.json", bernstein::to_json(probe) + "\n");
        result.summary = "degenerate: " + probe.message;
        break;
      }
      const double C_suite = cfg.C_suite.value_or(bernstein::calibrate_suite_constant(sol, model, aux, ball));
      const auto d = bernstein::verify_max_inequality(sol, model, aux, ball, C_suite);
      emit.file("bernstein.json", bernstein::to_json(d) + "\n");
      result.exit_code = d.terms.margin >= 0.0 ? kOk : kPropertyViolation;
      result.summary = "margin = " + csv_number(d.terms.margin);
      break;
    }

    case config::ExperimentKind::Sweep: {
      if (cfg.sweep == "liouville") {
        if (cfg.R_list.size() < 3) throw ConfigError(cfg.ini.source + ": liouville sweep needs R_list with at least 3 radii");
        ProbeOptions po;
        po.radial = cfg.mode == "radial";
        po.n = cfg.n;
        po.grid = cfg.grid;
        po.bound_case = estimates::parse_bound_case(cfg.bound_case);
        po.theta = cfg.theta;
        po.eta = cfg.eta;
        po.z_min = cfg.z_min;
        po.jobs = opts.jobs;
        po.newton = newton_options(cfg);
        po.radial_opts = radial_options(cfg);
        po.cache_dir = cache_dir;
        po.cache_salt = salt;
        po.force = opts.force;
        const auto rep = liouville_probe(model, cfg.amplitude, cfg.R_list, po);
        std::ostringstream csv;
        csv << "R,L,observed,center_gradient,C,bound,failed\n";
        for (const auto& r : rep.rows) {
          csv << csv_number(r.R) << ',' << csv_number(r.L) << ',' << csv_number(r.observed) << ','
              << csv_number(r.center_gradient) << ',' << csv_number(r.C) << ','
              << csv_number(r.bound) << ',' << (r.failed ? 1 : 0) << '\n';
        }
        emit.file("sweep.csv", csv.str());
        emit.plot("sweep.csv", 1, 3, "sup gradient on the half-ball against R", true);
        ordered_json j;
        j["model"] = model.to_string();
        j["slope"] = number_or_null(rep.fit.slope);
        j["degenerate"] = rep.degenerate;
        j["C_star"] = rep.C_star;
        j["failed_rows"] = std::count_if(rep.rows.begin(), rep.rows.end(), [](auto& r) { return r.failed; });
        emit.file("sweep.json", j.dump(2) + "\n");
        const auto ok = std::count_if(rep.rows.begin(), rep.rows.end(), [](auto& r) { return !r.failed; });
        if (ok < 3) result.exit_code = kSolverFailure;
        result.summary = rep.degenerate ? "degenerate" : "slope = " + csv_number(rep.fit.slope);
      } else {
        std::vector<double> eps = cfg.eps_list;
        if (eps.empty()) {
          if (model.family() != Family::Imcf) throw ConfigError(cfg.ini.source + ": imcf-envelope needs an imcf model or eps_list");
          eps.push_back(model.eps());
        }
        std::vector<EnvelopeRow> rows(eps.size());
        run_parallel(eps.size(), opts.jobs, [&](std::size_t k) {
          rows[k] = imcf_envelope(eps[k], cfg.n, cfg.window_min, cfg.window_max, radial_options(cfg));
        });
        std::ostringstream csv;
        csv << "eps,R_star,C_star,slope,points,failed\n";
        bool violation = false;
        bool failure = false;
        for (const auto& r : rows) {
          csv << csv_number(r.eps) << ',' << csv_number(r.R_star) << ',' << csv_number(r.C_star)
              << ',' << csv_number(r.slope) << ',' << r.points << ',' << (r.failed ? 1 : 0) << '\n';
          if (r.failed) failure = true;
          else if (!(r.slope >= -1.0 && r.slope <= 0.0)) violation = true;
        }
        emit.file("envelope.csv", csv.str());
        emit.plot("envelope.csv", 1, 3, "C* against eps", true);
        result.exit_code = failure ? kSolverFailure : (violation ? kPropertyViolation : kOk);
        result.summary = std::to_string(rows.size()) + " envelope fit(s)";
      }
      break;
    }
  }
  log_line(opts, config::to_string(cfg.kind) + ": " + result.summary);
  for (const auto& f : result.files) log_line(opts, "  wrote " + f);
  return result;
}

}  // namespace mcgrad::harness
