// stencil-lab: command-line front end.
//
// Exit codes: 0 success, 1 numerical failure, 2 configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stencil_lab.hpp"

namespace fs = std::filesystem;
using namespace stencil_lab;

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
};

// Training / problem overrides shared by several subcommands.
struct ProblemFlags {
  std::optional<int> cells;
  std::optional<double> length;
  std::optional<int> n_sims;
  std::optional<int> m_max;
  std::optional<double> sigma;
  std::optional<int> radius;
  std::optional<double> lambda;
  std::optional<double> box;
  std::optional<double> dt_ratio;
  std::optional<int> n_steps;

  void attach(CLI::App* app) {
    app->add_option("--N", cells, "grid cells");
    app->add_option("--L", length, "domain length");
    app->add_option("--n-sims", n_sims, "training samples");
    app->add_option("--m-max", m_max, "highest Fourier mode in training states");
    app->add_option("--sigma", sigma, "derivative noise standard deviation");
    app->add_option("--radius,-R", radius, "stencil radius");
    app->add_option("--lambda", lambda, "ridge weight");
    app->add_option("--M", box, "box bound on coefficients");
    app->add_option("--dt-ratio", dt_ratio, "dt / dx");
    app->add_option("--steps", n_steps, "time steps");
  }

  void apply(ExperimentConfig& cfg) const {
    if (cells || length)
      cfg.training.grid = Grid1D(cells.value_or(cfg.training.grid.size()), length.value_or(cfg.training.grid.length()));
    if (n_sims) cfg.training.n_sims = *n_sims;
    if (m_max) cfg.training.m_max = *m_max;
    if (sigma) cfg.training.noise_std = *sigma;
    if (radius) cfg.radius = *radius;
    if (lambda) cfg.lambda = *lambda;
    if (box) cfg.box = *box;
    if (dt_ratio) cfg.dt_ratio = *dt_ratio;
    if (n_steps) cfg.n_steps = *n_steps;
  }
};

ExperimentConfig base_config(const GlobalFlags& g, const ProblemFlags& p) {
  ExperimentConfig cfg;
  if (!g.config.empty()) cfg.apply_json(read_json(g.config));
  if (g.seed) cfg.training.seed = *g.seed;
  p.apply(cfg);
  cfg.output_dir = g.out;
  cfg.validate();
  return cfg;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.output_dir);
  nlohmann::json m;
  m["command"] = command;
  m["config"] = cfg.to_json();
  m["seed"] = cfg.training.seed;
  m["version"] = STENCIL_LAB_VERSION;
  write_json(cfg.output_dir / "manifest.json", m);
}

Stencil stencil_or_fd(const std::string& path, const ExperimentConfig& cfg) {
  if (path.empty()) return centered_difference_stencil(cfg.training.grid);
  Stencil w = load_stencil(path);
  detail::require(std::abs(w.spacing() - cfg.training.grid.spacing()) <= 1e-12 * cfg.training.grid.spacing(),
                  "stencil dx does not match the configured grid");
  return w;
}

TrainingSet training_data(const std::string& path, const ExperimentConfig& cfg) {
  if (path.empty()) return generate_training_set(cfg.training);
  return load_training_set(path);
}

void print_stencil(const Stencil& w) {
  for (int l = -w.radius(); l <= w.radius(); ++l) std::printf("  w[%+d] = %.12g\n", l, w[l]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and validate energy-conserving stencils for periodic 1D Maxwell"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(STENCIL_LAB_VERSION));

  GlobalFlags g;
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--seed", g.seed, "training seed");
  app.add_option("--out", g.out, "output directory");

  ProblemFlags p;

  auto* gen = app.add_subcommand("gen-data", "generate a training set");
  p.attach(gen);

  std::string method_name = "admm", data_path;
  std::optional<int> max_iters;
  std::optional<double> tol, rho;
  auto* learn = app.add_subcommand("learn", "fit a stencil by constrained least squares");
  p.attach(learn);
  learn->add_option("--method", method_name, "pg | nag | admm | ref")
      ->check(CLI::IsMember({"pg", "nag", "admm", "ref"}));
  learn->add_option("--data", data_path, "training set JSON (default: generate)");
  learn->add_option("--max-iters", max_iters, "iteration budget");
  learn->add_option("--tol", tol, "stopping tolerance");
  learn->add_option("--rho", rho, "ADMM penalty");

  std::string stencil_path, backend_name = "dense";
  int snapshot_every = 5;
  auto* sim = app.add_subcommand("simulate", "Crank-Nicolson run from sin/cos initial data");
  p.attach(sim);
  sim->add_option("--stencil", stencil_path, "stencil JSON (default: centered difference)");
  sim->add_option("--backend", backend_name, "dense | spectral")->check(CLI::IsMember({"dense", "spectral"}));
  sim->add_option("--snapshot-every", snapshot_every, "steps between space-time snapshots")->check(CLI::PositiveNumber);

  int theta_samples = 4096;
  auto* disp = app.add_subcommand("dispersion", "symbol, wave speed, CFL bound, CN dispersion");
  p.attach(disp);
  disp->add_option("--stencil", stencil_path, "stencil JSON (default: centered difference)");
  disp->add_option("--samples", theta_samples, "theta samples")->check(CLI::Range(2, 1 << 24));

  std::vector<int> resolutions;
  std::optional<double> final_time, conv_ratio;
  std::string conv_source = "admm";
  auto* conv = app.add_subcommand("converge", "spatial convergence study");
  p.attach(conv);
  conv->add_option("--resolutions", resolutions, "grid sizes, ascending");
  conv->add_option("--T", final_time, "final time");
  conv->add_option("--conv-dt-ratio", conv_ratio, "dt / dx for the study");
  conv->add_option("--source", conv_source, "pg | nag | admm | ref | cd")
      ->check(CLI::IsMember({"pg", "nag", "admm", "ref", "cd"}));

  std::string experiment_name;
  std::vector<double> sigma_sweep;
  std::optional<double> noisy_sigma;
  std::optional<int> noisy_radius;
  auto* exp = app.add_subcommand("experiment", "scripted experiment");
  p.attach(exp);
  exp->add_option("name", experiment_name, "table1 | convergence | energy | dispersion | nonstandard | noisy | solver-bench")
      ->required();
  exp->add_option("--sigma-sweep", sigma_sweep, "noise levels for the noisy sweep");
  exp->add_option("--noisy-sigma", noisy_sigma, "noise level for the noisy run");
  exp->add_option("--noisy-radius", noisy_radius, "stencil radius for the noisy run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg = base_config(g, p);

    if (*gen) {
      write_manifest(cfg, "gen-data");
      const TrainingSet ts = generate_training_set(cfg.training);
      save_training_set(cfg.output_dir / "training_set.json", ts);
      std::printf("wrote %d samples to %s\n", ts.n_sims(), (cfg.output_dir / "training_set.json").c_str());
    } else if (*learn) {
      write_manifest(cfg, "learn");
      const SolverMethod method = parse_solver_method(method_name);
      SolverOptions opts = cfg.solver_options(method);
      if (max_iters) opts.max_iters = *max_iters;
      if (tol) opts.tol = *tol;
      if (rho) opts.rho = *rho;
      const TrainingSet ts = training_data(data_path, cfg);
      const RegressionSystem sys = assemble_regression(ts, cfg.radius, cfg.lambda, cfg.box);
      const LearnedStencil out = learn_stencil(sys, method, opts, ts.grid.spacing());
      save_stencil(cfg.output_dir / "stencil.json", out.stencil);
      write_json(cfg.output_dir / "report.json", to_json(out.report));
      write_trace_csv(cfg.output_dir / "trace.csv", out.report);
      std::printf("%s: %d iterations, objective %.12g, |Cw - d| = %.3g\n", method_name.c_str(), out.report.iterations,
                  out.report.final_objective(), skew_residual(out.stencil));
      print_stencil(out.stencil);
    } else if (*sim) {
      write_manifest(cfg, "simulate");
      const Stencil w = stencil_or_fd(stencil_path, cfg);
      SimConfig sc = sim_config(cfg, w);
      sc.backend = backend_name == "spectral" ? CnBackend::Spectral : CnBackend::Dense;
      const SimResult r = simulate(sine_cosine_initial(cfg.training.grid), sc, snapshot_every);
      write_energy_csv(cfg.output_dir / "energy.csv", r, sc.dt);
      write_field_csv(cfg.output_dir / "final_fields.csv", r.final, cfg.training.grid);
      write_spacetime_csv(cfg.output_dir / "spacetime.csv", r, cfg.training.grid);
      nlohmann::json j;
      j["stencil"] = to_json(w);
      j["dt"] = sc.dt;
      j["n_steps"] = sc.n_steps;
      j["max_relative_drift"] = r.max_relative_drift();
      j["skew_residual"] = skew_residual(w);
      write_json(cfg.output_dir / "summary.json", j);
      std::printf("max relative energy drift %.3g over %d steps\n", r.max_relative_drift(), sc.n_steps);
    } else if (*disp) {
      write_manifest(cfg, "dispersion");
      const Stencil w = stencil_or_fd(stencil_path, cfg);
      const DispersionRow row = analyze_dispersion("stencil", w, cfg.dt(), theta_samples);
      write_symbol_csv(cfg.output_dir / "symbol.csv", symbol(w, symmetric_thetas(theta_samples)));
      write_dispersion_csv(cfg.output_dir / "dispersion.csv", row.curves);
      nlohmann::json j;
      j["stencil"] = to_json(w);
      j["c_max"] = row.c_max;
      j["cfl_bound"] = row.cfl;
      j["max_amplification_error"] = row.amplification_error;
      j["max_real_part_ratio"] = row.real_part_ratio;
      write_json(cfg.output_dir / "summary.json", j);
      std::printf("c_max = %.12g, CFL bound dt <= %.12g\n", row.c_max, row.cfl);
    } else if (*conv) {
      if (!resolutions.empty()) cfg.resolutions = resolutions;
      if (final_time) cfg.final_time = *final_time;
      if (conv_ratio) cfg.convergence_dt_ratio = *conv_ratio;
      cfg.kind = ExperimentKind::Convergence;
      cfg.validate();
      write_manifest(cfg, "converge");
      StencilProvider provider;
      if (conv_source == "cd") {
        provider = [&](const Grid1D& grid) { return central_difference_stencil(grid, cfg.radius); };
      } else {
        const SolverMethod m = parse_solver_method(conv_source);
        provider = [&, m](const Grid1D& grid) {
          TrainingConfig t = cfg.training;
          t.grid = grid;
          return learn_stencil(t, cfg.radius, m, cfg.solver_options(m), cfg.lambda, std::max(cfg.box, 2.0 / grid.spacing()))
              .stencil;
        };
      }
      const ConvergenceStudy study = convergence_study(provider, cfg.resolutions, cfg.final_time,
                                                       cfg.convergence_dt_ratio, cfg.training.grid.length());
      write_convergence_csv(cfg.output_dir / "convergence.csv", study);
      for (const auto& row : study.rows)
        std::printf("N = %4d  error = %.6g  order = %s\n", row.cells, row.error,
                    row.order ? format_number(*row.order).c_str() : "-");
      if (!study.complete) throw NumericalError(study.failure);
    } else if (*exp) {
      cfg.kind = parse_experiment_kind(experiment_name);
      if (!sigma_sweep.empty()) cfg.sigma_sweep = sigma_sweep;
      if (noisy_sigma) cfg.noisy_sigma = *noisy_sigma;
      if (noisy_radius) cfg.noisy_radius = *noisy_radius;
      cfg.validate();
      switch (cfg.kind) {
        case ExperimentKind::Table1: {
          const auto r = run_table1(cfg);
          for (const auto& row : r.rows)
            std::printf("%-10s err = %-12.4g r_eq = %-12.4g %s\n", row.label.c_str(), row.error, row.eq_residual,
                        row.ok ? "" : ("FAILED: " + row.failure).c_str());
          break;
        }
        case ExperimentKind::Convergence: {
          const auto r = run_convergence(cfg);
          for (const auto& row : r.learned.rows)
            std::printf("N = %4d  error = %.6g  order = %s\n", row.cells, row.error,
                        row.order ? format_number(*row.order).c_str() : "-");
          if (!r.learned.complete) throw NumericalError(r.learned.failure);
          break;
        }
        case ExperimentKind::Energy: {
          const auto r = run_energy(cfg);
          for (const auto& row : r.rows)
            std::printf("%-10s drift = %.3g  (2 dt: %.3g)\n", row.label.c_str(), row.drift, row.drift_double_dt);
          break;
        }
        case ExperimentKind::Dispersion: {
          const auto r = run_dispersion(cfg);
          for (const auto& row : r.rows)
            std::printf("%-8s c_max = %.8g  CFL = %.8g  max||mu_CN|-1| = %.3g\n", row.label.c_str(), row.c_max, row.cfl,
                        row.amplification_error);
          break;
        }
        case ExperimentKind::Nonstandard: {
          const auto r = run_nonstandard(cfg);
          std::printf("learned relative error %.3g, centered-difference relative error %.4g\n", r.learned_error,
                      r.central_error);
          break;
        }
        case ExperimentKind::Noisy: {
          const auto r = run_noisy(cfg);
          std::printf("LS: cond %.3g, |Cw| %.3g, peak energy ratio %.3g\n", r.ls_condition, r.ls_eq_residual,
                      r.ls_peak_energy_ratio);
          std::printf("QP: |Cw| %.3g, drift %.3g, error vs centered difference %.3g\n", r.qp_eq_residual,
                      r.qp_energy_drift, r.qp_error_vs_central);
          break;
        }
        case ExperimentKind::SolverBench: {
          const auto r = run_solver_bench(cfg);
          for (const auto& [m, rep] : r.reports)
            std::printf("%-5s %5d iterations  objective %.15g\n", to_string(m).c_str(), rep.iterations,
                        rep.final_objective());
          std::printf("ADMM first-iterate gap %.3g, NAG increases %d\n", r.admm_first_iterate_gap, r.nag_increases);
          break;
        }
      }
      std::printf("outputs in %s\n", cfg.output_dir.c_str());
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
