#pragma once

// Scripted end-to-end runs: learned-stencil comparison, convergence, energy,
// dispersion, nonstandard-operator recovery, noisy training and the solver
// benchmark. Each run returns a typed result and, when output_dir is set,
// writes CSV tables plus a manifest.json.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stencil_lab/analysis.hpp"
#include "stencil_lab/core.hpp"
#include "stencil_lab/io.hpp"
#include "stencil_lab/regression.hpp"
#include "stencil_lab/simulate.hpp"
#include "stencil_lab/solvers.hpp"
#include "stencil_lab/training.hpp"

#ifndef STENCIL_LAB_VERSION
#define STENCIL_LAB_VERSION "0.0.0"
#endif

namespace stencil_lab {

enum class ExperimentKind { Table1, Convergence, Energy, Dispersion, Nonstandard, Noisy, SolverBench };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Table1: return "table1";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::Energy: return "energy";
    case ExperimentKind::Dispersion: return "dispersion";
    case ExperimentKind::Nonstandard: return "nonstandard";
    case ExperimentKind::Noisy: return "noisy";
    case ExperimentKind::SolverBench: return "solver-bench";
  }
  return "?";
}

inline ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::Table1, ExperimentKind::Convergence, ExperimentKind::Energy,
                 ExperimentKind::Dispersion, ExperimentKind::Nonstandard, ExperimentKind::Noisy,
                 ExperimentKind::SolverBench})
    if (name == to_string(k)) return k;
  if (name == "solver_bench") return ExperimentKind::SolverBench;
  if (name == "converge") return ExperimentKind::Convergence;
  throw ConfigError("unknown experiment '" + name + "'");
}

/// Defaults: N = 64, L = 1, n_sims = 200, m_max = 5, lambda = 1e-6, M = 100,
/// dt = 0.5 dx, N_t = 300.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Table1;
  TrainingConfig training;
  int radius = 1;
  double lambda = 1e-6;
  double box = 100.0;
  double dt_ratio = 0.5;
  int n_steps = 300;
  int snapshot_every = 5;

  double rho = 1e-3;
  double tol = 1e-12;
  int gradient_iters = 500;
  int admm_iters = 100;

  std::vector<int> resolutions{64, 128, 256, 512};
  double final_time = 10.0;
  double convergence_dt_ratio = 0.2;

  std::vector<int> radii{1, 2, 3, 4};
  int theta_samples = 4096;

  double noisy_sigma = 0.5;
  int noisy_radius = 3;
  std::vector<double> sigma_sweep;

  int bench_iters = 500;

  std::filesystem::path output_dir;

  void validate() const {
    training.validate();
    detail::require(radius >= 1, "experiment: radius must be >= 1");
    detail::require(lambda >= 0.0 && box > 0.0, "experiment: need lambda >= 0 and M > 0");
    detail::require(dt_ratio > 0.0 && n_steps >= 1, "experiment: need dt_ratio > 0 and n_steps >= 1");
    detail::require(snapshot_every >= 1, "experiment: snapshot_every must be >= 1");
    detail::require(rho > 0.0 && tol > 0.0, "experiment: need rho > 0 and tol > 0");
    detail::require(gradient_iters >= 1 && admm_iters >= 1 && bench_iters >= 1, "experiment: iteration budgets must be >= 1");
    detail::require(!resolutions.empty() && final_time > 0.0 && convergence_dt_ratio > 0.0,
                    "experiment: bad convergence settings");
    detail::require(!radii.empty(), "experiment: radii must not be empty");
    for (int r : radii) detail::require(r >= 1, "experiment: radii must be >= 1");
    detail::require(theta_samples >= 2, "experiment: theta_samples must be >= 2");
    detail::require(noisy_sigma > 0.0, "experiment: noisy_sigma must be > 0");
    detail::require(noisy_radius >= 1, "experiment: noisy_radius must be >= 1");
  }

  SolverOptions solver_options(SolverMethod m) const {
    SolverOptions o = SolverOptions::defaults_for(m);
    o.tol = tol;
    o.rho = rho;
    o.max_iters = (m == SolverMethod::Admm) ? admm_iters : gradient_iters;
    return o;
  }

  double dt() const { return dt_ratio * training.grid.spacing(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["experiment"] = to_string(kind);
    j["N"] = training.grid.size();
    j["L"] = training.grid.length();
    j["n_sims"] = training.n_sims;
    j["m_max"] = training.m_max;
    j["seed"] = training.seed;
    j["amplitude_std"] = training.amplitude_std;
    j["sigma"] = training.noise_std;
    j["radius"] = radius;
    j["lambda"] = lambda;
    j["M"] = box;
    j["dt_ratio"] = dt_ratio;
    j["n_steps"] = n_steps;
    j["snapshot_every"] = snapshot_every;
    j["rho"] = rho;
    j["tol"] = tol;
    j["gradient_iters"] = gradient_iters;
    j["admm_iters"] = admm_iters;
    j["resolutions"] = resolutions;
    j["final_time"] = final_time;
    j["convergence_dt_ratio"] = convergence_dt_ratio;
    j["radii"] = radii;
    j["theta_samples"] = theta_samples;
    j["noisy_sigma"] = noisy_sigma;
    j["noisy_radius"] = noisy_radius;
    j["sigma_sweep"] = sigma_sweep;
    j["bench_iters"] = bench_iters;
    return j;
  }

  /// Overrides fields present in `j`; unknown keys are rejected.
  void apply_json(const nlohmann::json& j) {
    detail::require(j.is_object(), "config: expected a JSON object");
    static const std::set<std::string> known{
        "experiment", "N", "L", "n_sims", "m_max", "seed", "amplitude_std", "sigma", "radius", "lambda", "M",
        "dt_ratio", "n_steps", "snapshot_every", "rho", "tol", "gradient_iters", "admm_iters", "resolutions",
        "final_time", "convergence_dt_ratio", "radii", "theta_samples", "noisy_sigma", "noisy_radius",
        "sigma_sweep", "bench_iters", "output_dir"};
    for (const auto& [key, _] : j.items())
      if (!known.contains(key)) throw ConfigError("config: unknown key '" + key + "'");
    try {
      if (j.contains("experiment")) kind = parse_experiment_kind(j["experiment"].get<std::string>());
      const int n = j.value("N", training.grid.size());
      const double len = j.value("L", training.grid.length());
      training.grid = Grid1D(n, len);
      training.n_sims = j.value("n_sims", training.n_sims);
      training.m_max = j.value("m_max", training.m_max);
      training.seed = j.value("seed", training.seed);
      training.amplitude_std = j.value("amplitude_std", training.amplitude_std);
      training.noise_std = j.value("sigma", training.noise_std);
      radius = j.value("radius", radius);
      lambda = j.value("lambda", lambda);
      box = j.value("M", box);
      dt_ratio = j.value("dt_ratio", dt_ratio);
      n_steps = j.value("n_steps", n_steps);
      snapshot_every = j.value("snapshot_every", snapshot_every);
      rho = j.value("rho", rho);
      tol = j.value("tol", tol);
      gradient_iters = j.value("gradient_iters", gradient_iters);
      admm_iters = j.value("admm_iters", admm_iters);
      resolutions = j.value("resolutions", resolutions);
      final_time = j.value("final_time", final_time);
      convergence_dt_ratio = j.value("convergence_dt_ratio", convergence_dt_ratio);
      radii = j.value("radii", radii);
      theta_samples = j.value("theta_samples", theta_samples);
      noisy_sigma = j.value("noisy_sigma", noisy_sigma);
      noisy_radius = j.value("noisy_radius", noisy_radius);
      sigma_sweep = j.value("sigma_sweep", sigma_sweep);
      bench_iters = j.value("bench_iters", bench_iters);
      if (j.contains("output_dir")) output_dir = j["output_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    validate();
  }
};

// ---------------------------------------------------------------------------
// Shared helpers

struct LearnedStencil {
  Stencil stencil;
  SolverReport report;
};

inline LearnedStencil learn_stencil(const RegressionSystem& sys, SolverMethod method, const SolverOptions& opts,
                                    double dx) {
  const int radius = static_cast<int>(sys.dimension() - 1) / 2;
  const ConstraintSet cs = build_skew_constraints(radius);
  SolverReport report = solve(method, sys, cs, opts);
  return {report.stencil(dx), std::move(report)};
}

inline LearnedStencil learn_stencil(const TrainingConfig& training, int radius, SolverMethod method,
                                    const SolverOptions& opts, double lambda = 1e-6, double box = 100.0) {
  const TrainingSet ts = generate_training_set(training);
  return learn_stencil(assemble_regression(ts, radius, lambda, box), method, opts, training.grid.spacing());
}

inline double skew_residual(const Stencil& w) { return build_skew_constraints(w.radius()).residual(w.coefficients()); }

inline SimConfig sim_config(const ExperimentConfig& cfg, const Stencil& w, double dt_scale = 1.0) {
  return SimConfig{cfg.dt() * dt_scale, cfg.n_steps, cfg.training.grid, w, CnBackend::Dense};
}

inline bool writes_output(const ExperimentConfig& cfg) { return !cfg.output_dir.empty(); }

inline void prepare_output(const ExperimentConfig& cfg) {
  if (!writes_output(cfg)) return;
  std::filesystem::create_directories(cfg.output_dir);
  nlohmann::json manifest;
  manifest["experiment"] = to_string(cfg.kind);
  manifest["config"] = cfg.to_json();
  manifest["seed"] = cfg.training.seed;
  manifest["version"] = STENCIL_LAB_VERSION;
  write_json(cfg.output_dir / "manifest.json", manifest);
}

/// Nonincreasing up to a relative slack per step.
inline bool is_monotone_nonincreasing(const std::vector<double>& trace, double rel_slack = 1e-14) {
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace[k] > trace[k - 1] + rel_slack * std::abs(trace[k - 1])) return false;
  return true;
}

inline int count_increases(const std::vector<double>& trace, double rel_slack = 1e-14) {
  int count = 0;
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (trace[k] > trace[k - 1] + rel_slack * std::abs(trace[k - 1])) ++count;
  return count;
}

inline double relative_gap(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

struct LabeledRun {
  std::string label;
  Stencil stencil;
  SimResult sim;
};

// Columns: step, t, then one column per run of E^n - E^0.
inline void write_energy_table(const std::filesystem::path& path, const std::vector<LabeledRun>& runs, double dt) {
  std::vector<std::string> header{"step", "t"};
  for (const auto& r : runs) header.push_back(r.label);
  CsvWriter csv(path, header);
  const std::size_t steps = runs.empty() ? 0 : runs.front().sim.energy.size();
  for (std::size_t n = 0; n < steps; ++n) {
    csv.cell(static_cast<long>(n)).cell(static_cast<double>(n) * dt);
    for (const auto& r : runs) csv.cell(r.sim.energy[n] - r.sim.energy[0]);
    csv.end_row();
  }
}

// Columns: x, then E(x, T) per run.
inline void write_final_fields(const std::filesystem::path& path, const std::vector<LabeledRun>& runs,
                               const Grid1D& grid) {
  std::vector<std::string> header{"x"};
  for (const auto& r : runs) header.push_back(r.label);
  CsvWriter csv(path, header);
  for (int i = 0; i < grid.size(); ++i) {
    csv.cell(grid.point(i));
    for (const auto& r : runs) csv.cell(r.sim.final.E[i]);
    csv.end_row();
  }
}

// Columns: t, x, then E(x, t) per run at the shared snapshot times.
inline void write_spacetime_table(const std::filesystem::path& path, const std::vector<LabeledRun>& runs,
                                  const Grid1D& grid) {
  std::vector<std::string> header{"t", "x"};
  for (const auto& r : runs) header.push_back(r.label);
  CsvWriter csv(path, header);
  if (runs.empty()) return;
  for (std::size_t s = 0; s < runs.front().sim.snapshots.size(); ++s)
    for (int i = 0; i < grid.size(); ++i) {
      csv.cell(runs.front().sim.snapshots[s].time).cell(grid.point(i));
      for (const auto& r : runs) csv.cell(r.sim.snapshots[s].fields.E[i]);
      csv.end_row();
    }
}

// ---------------------------------------------------------------------------
// Learned stencils vs the exact central difference

struct StencilRow {
  std::string label;
  std::optional<Stencil> stencil;
  /// Relative L2 error of E(T) against the central-difference run.
  double error = std::nan("");
  double eq_residual = std::nan("");
  double energy_drift = std::nan("");
  bool ok = false;
  std::string failure;
};

struct Table1Result {
  std::vector<StencilRow> rows;
  std::map<SolverMethod, SolverReport> reports;

  const StencilRow& row(const std::string& label) const {
    for (const auto& r : rows)
      if (r.label == label) return r;
    throw ConfigError("table1: no row '" + label + "'");
  }
};

inline Table1Result run_table1(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::Table1;
  cfg.validate();
  prepare_output(cfg);
  const Grid1D& grid = cfg.training.grid;
  const TrainingSet ts = generate_training_set(cfg.training);
  const RegressionSystem sys = assemble_regression(ts, cfg.radius, cfg.lambda, cfg.box);
  const ConstraintSet cs = build_skew_constraints(cfg.radius);
  const FieldPair init = sine_cosine_initial(grid);

  Table1Result result;
  std::vector<LabeledRun> runs;
  const Stencil fd = centered_difference_stencil(grid);
  const SimResult fd_sim = simulate(init, sim_config(cfg, fd), cfg.snapshot_every);
  runs.push_back({"exact_fd", fd, fd_sim});
  result.rows.push_back({"exact_fd", fd, 0.0, skew_residual(fd), fd_sim.max_relative_drift(), true, {}});

  for (auto m : {SolverMethod::ProjectedGradient, SolverMethod::Nesterov, SolverMethod::Admm, SolverMethod::Reference}) {
    StencilRow row;
    row.label = to_string(m);
    try {
      SolverReport rep = solve(m, sys, cs, cfg.solver_options(m));
      const Stencil w = rep.stencil(grid.spacing());
      const SimResult sim = simulate(init, sim_config(cfg, w), cfg.snapshot_every);
      row.stencil = w;
      row.error = relative_l2_error(sim.final.E, fd_sim.final.E, grid);
      row.eq_residual = cs.residual(w.coefficients());
      row.energy_drift = sim.max_relative_drift();
      row.ok = true;
      runs.push_back({row.label, w, sim});
      result.reports.emplace(m, std::move(rep));
    } catch (const std::exception& e) {
      row.failure = e.what();
    }
    result.rows.push_back(std::move(row));
  }

  if (writes_output(cfg)) {
    const int r = cfg.radius;
    std::vector<std::string> header{"method"};
    for (int l = -r; l <= r; ++l) header.push_back("w_" + std::to_string(l));
    for (const char* h : {"err", "r_eq", "energy_drift", "status"}) header.emplace_back(h);
    CsvWriter csv(cfg.output_dir / "table1.csv", header);
    for (const auto& row : result.rows) {
      csv.cell(row.label);
      for (int l = -r; l <= r; ++l) {
        if (row.stencil && row.stencil->radius() == r) csv.cell((*row.stencil)[l]);
        else if (row.stencil && std::abs(l) <= row.stencil->radius()) csv.cell((*row.stencil)[l]);
        else csv.cell(row.stencil ? 0.0 : std::nan(""));
      }
      csv.cell(row.error).cell(row.eq_residual).cell(row.energy_drift).cell(row.ok ? std::string("ok") : "failed: " + row.failure);
      csv.end_row();
    }
    write_energy_table(cfg.output_dir / "energy.csv", runs, cfg.dt());
    write_final_fields(cfg.output_dir / "final_fields.csv", runs, grid);
    write_spacetime_table(cfg.output_dir / "spacetime.csv", runs, grid);
    for (const auto& [m, rep] : result.reports) write_trace_csv(cfg.output_dir / ("trace_" + to_string(m) + ".csv"), rep);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Spatial convergence

struct ConvergenceResult {
  ConvergenceStudy learned;
  ConvergenceStudy central;
};

/// ADMM stencils re-learned at every resolution from the same training
/// configuration (only N changes), against the central difference.
inline ConvergenceResult run_convergence(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::Convergence;
  cfg.validate();
  prepare_output(cfg);
  const double length = cfg.training.grid.length();
  StencilProvider learned = [&](const Grid1D& grid) {
    TrainingConfig t = cfg.training;
    t.grid = grid;
    return learn_stencil(t, cfg.radius, SolverMethod::Admm, cfg.solver_options(SolverMethod::Admm), cfg.lambda,
                         std::max(cfg.box, 2.0 / grid.spacing()))
        .stencil;
  };
  StencilProvider central = [&](const Grid1D& grid) { return central_difference_stencil(grid, cfg.radius); };
  ConvergenceResult result{
      convergence_study(learned, cfg.resolutions, cfg.final_time, cfg.convergence_dt_ratio, length),
      convergence_study(central, cfg.resolutions, cfg.final_time, cfg.convergence_dt_ratio, length)};
  if (writes_output(cfg)) {
    write_convergence_csv(cfg.output_dir / "convergence.csv", result.learned);
    write_convergence_csv(cfg.output_dir / "convergence_cd.csv", result.central);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Energy conservation across radii and solvers

struct EnergyRow {
  std::string label;
  int radius = 0;
  double eq_residual = 0.0;
  double drift = 0.0;
  double drift_double_dt = 0.0;
  /// Largest relative change of any single modal energy over the run.
  double modal_drift = 0.0;
};

struct EnergyResult {
  std::vector<EnergyRow> rows;
};

inline double max_modal_drift(const FieldPair& init, const FieldPair& final, const Grid1D& grid) {
  const Vector m0 = modal_energies(init, grid);
  const Vector m1 = modal_energies(final, grid);
  const double total = m0.sum();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m0.size(); ++j) {
    // Modes carrying (numerically) no energy are compared against the total.
    const double scale = std::max(m0[j], 1e-3 * total);
    worst = std::max(worst, std::abs(m1[j] - m0[j]) / scale);
  }
  return worst;
}

inline EnergyResult run_energy(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::Energy;
  cfg.validate();
  prepare_output(cfg);
  const Grid1D& grid = cfg.training.grid;
  const TrainingSet ts = generate_training_set(cfg.training);
  const FieldPair init = sine_cosine_initial(grid);

  std::vector<std::pair<std::string, Stencil>> stencils{{"exact_fd", centered_difference_stencil(grid)}};
  for (int r : cfg.radii) {
    if (2 * r + 1 > grid.size()) continue;
    const RegressionSystem sys = assemble_regression(ts, r, cfg.lambda, cfg.box);
    for (auto m : {SolverMethod::ProjectedGradient, SolverMethod::Nesterov, SolverMethod::Admm, SolverMethod::Reference})
      stencils.emplace_back(to_string(m) + "_R" + std::to_string(r),
                            learn_stencil(sys, m, cfg.solver_options(m), grid.spacing()).stencil);
  }

  EnergyResult result;
  std::vector<LabeledRun> runs, runs_2dt;
  for (const auto& [label, w] : stencils) {
    SimResult sim = simulate(init, sim_config(cfg, w));
    SimResult sim2 = simulate(init, sim_config(cfg, w, 2.0));
    result.rows.push_back({label, w.radius(), skew_residual(w), sim.max_relative_drift(), sim2.max_relative_drift(),
                           max_modal_drift(init, sim.final, grid)});
    runs.push_back({label, w, std::move(sim)});
    runs_2dt.push_back({label, w, std::move(sim2)});
  }
  if (writes_output(cfg)) {
    write_energy_table(cfg.output_dir / "energy.csv", runs, cfg.dt());
    write_energy_table(cfg.output_dir / "energy_double_dt.csv", runs_2dt, 2.0 * cfg.dt());
    CsvWriter csv(cfg.output_dir / "energy_summary.csv",
                  {"label", "R", "r_eq", "max_rel_drift", "max_rel_drift_double_dt", "max_modal_drift"});
    for (const auto& row : result.rows) {
      csv.cell(row.label).cell(row.radius).cell(row.eq_residual).cell(row.drift).cell(row.drift_double_dt).cell(row.modal_drift);
      csv.end_row();
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Dispersion

struct DispersionRow {
  std::string label;
  Stencil stencil;
  double c_max = 0.0;
  double cfl = 0.0;
  /// max_theta | |mu_CN| - 1 |.
  double amplification_error = 0.0;
  /// max_theta |Re mu(theta)| / max_theta |mu(theta)|.
  double real_part_ratio = 0.0;
  DispersionCurves curves;
};

struct DispersionResult {
  std::vector<DispersionRow> rows;
};

inline DispersionRow analyze_dispersion(const std::string& label, const Stencil& w, double dt, int samples) {
  DispersionRow row{label, w, max_wave_speed(w), 0.0, 0.0, 0.0, cn_dispersion(w, dt, positive_thetas(samples))};
  row.cfl = row.c_max > 0.0 ? 2.0 / row.c_max : std::numeric_limits<double>::infinity();
  for (double a : row.curves.amplification) row.amplification_error = std::max(row.amplification_error, std::abs(a - 1.0));
  const SymbolCurve sym = symbol(w, symmetric_thetas(samples));
  double re = 0.0, mag = 0.0;
  for (const auto& v : sym.values) re = std::max(re, std::abs(v.real())), mag = std::max(mag, std::abs(v));
  row.real_part_ratio = mag > 0.0 ? re / mag : 0.0;
  return row;
}

inline DispersionResult run_dispersion(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::Dispersion;
  cfg.validate();
  prepare_output(cfg);
  const Grid1D& grid = cfg.training.grid;
  const TrainingSet ts = generate_training_set(cfg.training);
  DispersionResult result;
  for (int r : cfg.radii) {
    if (2 * r + 1 > grid.size()) continue;
    const RegressionSystem sys = assemble_regression(ts, r, cfg.lambda, cfg.box);
    const Stencil learned = learn_stencil(sys, SolverMethod::Admm, cfg.solver_options(SolverMethod::Admm), grid.spacing()).stencil;
    result.rows.push_back(analyze_dispersion("admm_R" + std::to_string(r), learned, cfg.dt(), cfg.theta_samples));
    result.rows.push_back(analyze_dispersion("cd_R" + std::to_string(r), central_difference_stencil(grid, r), cfg.dt(),
                                             cfg.theta_samples));
  }
  if (writes_output(cfg)) {
    CsvWriter csv(cfg.output_dir / "dispersion_summary.csv",
                  {"label", "R", "c_max", "cfl_bound", "max_amplification_error", "max_real_part_ratio"});
    for (const auto& row : result.rows) {
      csv.cell(row.label).cell(row.stencil.radius()).cell(row.c_max).cell(row.cfl).cell(row.amplification_error).cell(row.real_part_ratio);
      csv.end_row();
      write_dispersion_csv(cfg.output_dir / ("dispersion_" + row.label + ".csv"), row.curves);
      write_symbol_csv(cfg.output_dir / ("symbol_" + row.label + ".csv"), symbol(row.stencil, symmetric_thetas(cfg.theta_samples)));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Nonstandard target operator

/// Radius-2 skew target (2, -12, 0, 12, -2) / (12 dx) for offsets -2..2. It
/// approximates (4/3) d/dx and differs from the fourth-order central
/// difference (1, -8, 0, 8, -1) / (12 dx) by about 34% in relative 2-norm.
inline Stencil nonstandard_target(const Grid1D& grid) {
  const double s = 1.0 / (12.0 * grid.spacing());
  return Stencil(Vector{{2.0 * s, -12.0 * s, 0.0, 12.0 * s, -2.0 * s}}, grid.spacing());
}

struct NonstandardResult {
  Stencil target;
  Stencil learned;
  Stencil central;
  double learned_error = 0.0;
  double central_error = 0.0;
  double learned_eq_residual = 0.0;
  std::vector<LabeledRun> runs;
};

inline NonstandardResult run_nonstandard(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::Nonstandard;
  cfg.validate();
  prepare_output(cfg);
  const Grid1D& grid = cfg.training.grid;
  const Stencil target = nonstandard_target(grid);
  TrainingSet ts;
  ts.grid = grid;
  ts.m_max = cfg.training.m_max;
  ts.seed = cfg.training.seed;
  ts.states = random_states(cfg.training);
  ts.derivatives = operator_targets(ts.states, target, grid);
  const RegressionSystem sys = assemble_regression(ts, target.radius(), cfg.lambda, cfg.box);
  const Stencil learned = learn_stencil(sys, SolverMethod::Admm, cfg.solver_options(SolverMethod::Admm), grid.spacing()).stencil;
  const Stencil central = central_difference_stencil(grid, target.radius());
  const double norm = target.coefficients().norm();

  NonstandardResult result{target, learned, central,
                           (learned.coefficients() - target.coefficients()).norm() / norm,
                           (central.coefficients() - target.coefficients()).norm() / norm,
                           skew_residual(learned),
                           {}};
  const FieldPair init = sine_cosine_initial(grid);
  for (const auto& [label, w] : {std::pair{std::string("target"), target}, std::pair{std::string("central"), central},
                                 std::pair{std::string("learned"), learned}})
    result.runs.push_back({label, w, simulate(init, sim_config(cfg, w), cfg.snapshot_every)});

  if (writes_output(cfg)) {
    write_energy_table(cfg.output_dir / "energy.csv", result.runs, cfg.dt());
    write_final_fields(cfg.output_dir / "final_fields.csv", result.runs, grid);
    nlohmann::json j;
    j["target"] = to_json(target);
    j["learned"] = to_json(learned);
    j["central"] = to_json(central);
    j["learned_relative_error"] = result.learned_error;
    j["central_relative_error"] = result.central_error;
    j["learned_eq_residual"] = result.learned_eq_residual;
    for (const auto& r : result.runs) j["energy_drift"][r.label] = r.sim.max_relative_drift();
    write_json(cfg.output_dir / "nonstandard.json", j);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Noisy training

struct NoisyResult {
  double sigma = 0.0;
  Stencil central;
  Stencil least_squares;
  Stencil constrained;
  double ls_condition = 0.0;
  double ls_eq_residual = 0.0;
  double qp_eq_residual = 0.0;
  /// max_n E^n / E^0 for the unconstrained stencil (inf on overflow).
  double ls_peak_energy_ratio = 0.0;
  /// Empty unless the LS Crank-Nicolson system itself was singular.
  std::string ls_failure;
  double qp_energy_drift = 0.0;
  double central_energy_drift = 0.0;
  /// Relative L2 distance of the constrained E(x,T) from the clean
  /// central-difference E(x,T).
  double qp_error_vs_central = 0.0;
  std::vector<LabeledRun> runs;
};

inline NoisyResult noisy_run(const ExperimentConfig& cfg, double sigma) {
  const Grid1D& grid = cfg.training.grid;
  TrainingConfig tcfg = cfg.training;
  tcfg.noise_std = sigma;
  const TrainingSet ts = generate_training_set(tcfg);
  const RegressionSystem sys = assemble_regression(ts, cfg.noisy_radius, cfg.lambda, cfg.box);
  const auto ls = solve_unconstrained(sys);
  const Stencil w_ls(ls.w, grid.spacing());
  const Stencil w_qp = learn_stencil(sys, SolverMethod::Admm, cfg.solver_options(SolverMethod::Admm), grid.spacing()).stencil;
  const Stencil w_cd = centered_difference_stencil(grid);

  NoisyResult r{sigma, w_cd, w_ls, w_qp, ls.condition, skew_residual(w_ls), skew_residual(w_qp), 0.0, {}, 0.0, 0.0, 0.0, {}};
  const FieldPair init = sine_cosine_initial(grid);
  const SimResult cd_sim = simulate(init, sim_config(cfg, w_cd), cfg.snapshot_every);
  const SimResult qp_sim = simulate(init, sim_config(cfg, w_qp), cfg.snapshot_every);
  r.central_energy_drift = cd_sim.max_relative_drift();
  r.qp_energy_drift = qp_sim.max_relative_drift();
  r.qp_error_vs_central = relative_l2_error(qp_sim.final.E, cd_sim.final.E, grid);
  r.runs.push_back({"central", w_cd, cd_sim});
  try {
    SimResult ls_sim = simulate(init, sim_config(cfg, w_ls), cfg.snapshot_every);
    r.ls_peak_energy_ratio = ls_sim.peak_energy_ratio();
    r.runs.push_back({"least_squares", w_ls, std::move(ls_sim)});
  } catch (const NumericalError& e) {
    r.ls_failure = e.what();
    r.ls_peak_energy_ratio = std::numeric_limits<double>::infinity();
  }
  r.runs.push_back({"constrained", w_qp, qp_sim});
  return r;
}

inline NoisyResult run_noisy(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::Noisy;
  cfg.validate();
  prepare_output(cfg);
  NoisyResult result = noisy_run(cfg, cfg.noisy_sigma);
  if (writes_output(cfg)) {
    const Grid1D& grid = cfg.training.grid;
    write_energy_table(cfg.output_dir / "energy.csv", result.runs, cfg.dt());
    write_final_fields(cfg.output_dir / "final_fields.csv", result.runs, grid);
    write_spacetime_table(cfg.output_dir / "spacetime.csv", result.runs, grid);
    nlohmann::json j;
    j["sigma"] = result.sigma;
    j["radius"] = cfg.noisy_radius;
    j["central"] = to_json(result.central);
    j["least_squares"] = to_json(result.least_squares);
    j["constrained"] = to_json(result.constrained);
    j["ls_condition"] = result.ls_condition;
    j["ls_eq_residual"] = result.ls_eq_residual;
    j["qp_eq_residual"] = result.qp_eq_residual;
    j["ls_peak_energy_ratio"] = std::isfinite(result.ls_peak_energy_ratio) ? nlohmann::json(result.ls_peak_energy_ratio)
                                                                            : nlohmann::json("inf");
    j["ls_failure"] = result.ls_failure;
    j["qp_energy_drift"] = result.qp_energy_drift;
    j["central_energy_drift"] = result.central_energy_drift;
    j["qp_error_vs_central"] = result.qp_error_vs_central;
    write_json(cfg.output_dir / "noisy.json", j);
    if (!cfg.sigma_sweep.empty()) {
      CsvWriter csv(cfg.output_dir / "sigma_sweep.csv",
                    {"sigma", "ls_condition", "ls_peak_energy_ratio", "qp_energy_drift", "qp_error_vs_central"});
      for (double s : cfg.sigma_sweep) {
        const NoisyResult sw = noisy_run(cfg, s);
        csv.cell(s).cell(sw.ls_condition).cell(sw.ls_peak_energy_ratio).cell(sw.qp_energy_drift).cell(sw.qp_error_vs_central);
        csv.end_row();
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Solver benchmark

struct SolverBenchResult {
  std::map<SolverMethod, SolverReport> reports;
  double reference_objective = 0.0;
  bool pg_monotone = false;
  int nag_increases = 0;
  bool nag_not_worse_than_pg = false;
  /// First NAG iteration reaching PG's final objective (-1 if never).
  int nag_iterations_to_pg_final = -1;
  double admm_first_iterate_gap = 0.0;
  bool admm_first_beats_nag_20 = false;
  /// Largest pairwise relative gap between final objectives.
  double max_final_gap = 0.0;
};

/// PG and NAG share a budget of bench_iters iterations and the configured tol.
inline SolverBenchResult run_solver_bench(ExperimentConfig cfg) {
  cfg.kind = ExperimentKind::SolverBench;
  cfg.validate();
  prepare_output(cfg);
  const TrainingSet ts = generate_training_set(cfg.training);
  const RegressionSystem sys = assemble_regression(ts, cfg.radius, cfg.lambda, cfg.box);
  const ConstraintSet cs = build_skew_constraints(cfg.radius);

  SolverBenchResult r;
  for (auto m : {SolverMethod::ProjectedGradient, SolverMethod::Nesterov, SolverMethod::Admm, SolverMethod::Reference}) {
    SolverOptions o = cfg.solver_options(m);
    if (m == SolverMethod::ProjectedGradient || m == SolverMethod::Nesterov) o.max_iters = cfg.bench_iters;
    r.reports.emplace(m, solve(m, sys, cs, o));
  }
  const auto& pg = r.reports.at(SolverMethod::ProjectedGradient);
  const auto& nag = r.reports.at(SolverMethod::Nesterov);
  const auto& admm = r.reports.at(SolverMethod::Admm);
  r.reference_objective = r.reports.at(SolverMethod::Reference).final_objective();
  r.pg_monotone = is_monotone_nonincreasing(pg.objective);
  r.nag_increases = count_increases(nag.objective);
  r.nag_not_worse_than_pg = nag.final_objective() <= pg.final_objective();
  for (int k = 0; k < nag.iterations; ++k)
    if (nag.objective[k] <= pg.final_objective()) {
      r.nag_iterations_to_pg_final = k + 1;
      break;
    }
  r.admm_first_iterate_gap = relative_gap(admm.objective.front(), r.reference_objective);
  if (nag.iterations >= 20) r.admm_first_beats_nag_20 = admm.objective.front() <= nag.objective[19];
  for (const auto& [m1, a] : r.reports)
    for (const auto& [m2, b] : r.reports)
      r.max_final_gap = std::max(r.max_final_gap, relative_gap(a.final_objective(), b.final_objective()));

  if (writes_output(cfg)) {
    nlohmann::json j;
    for (const auto& [m, rep] : r.reports) {
      write_trace_csv(cfg.output_dir / ("trace_" + to_string(m) + ".csv"), rep);
      j["reports"][to_string(m)] = to_json(rep);
    }
    j["reference_objective"] = r.reference_objective;
    j["pg_monotone"] = r.pg_monotone;
    j["nag_increases"] = r.nag_increases;
    j["nag_not_worse_than_pg"] = r.nag_not_worse_than_pg;
    j["nag_iterations_to_pg_final"] = r.nag_iterations_to_pg_final;
    j["admm_first_iterate_gap"] = r.admm_first_iterate_gap;
    j["admm_first_beats_nag_20"] = r.admm_first_beats_nag_20;
    j["max_final_gap"] = r.max_final_gap;
    write_json(cfg.output_dir / "bench.json", j);
  }
  return r;
}

}  // namespace stencil_lab
