#pragma once

// File formats: CSV tables, TrainingSet / SolverReport / stencil JSON.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stencil_lab/analysis.hpp"
#include "stencil_lab/core.hpp"
#include "stencil_lab/simulate.hpp"
#include "stencil_lab/solvers.hpp"
#include "stencil_lab/training.hpp"

namespace stencil_lab {

namespace fs = std::filesystem;

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Minimal CSV writer: one header line, then rows of numbers or strings.
class CsvWriter {
 public:
  CsvWriter(const fs::path& path, std::initializer_list<std::string> header) : out_(path) {
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
    write_header(std::vector<std::string>(header));
  }

  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ConfigError("cannot open " + path.string() + " for writing");
    write_header(header);
  }

  CsvWriter& cell(double v) { return raw(format_number(v)); }
  CsvWriter& cell(int v) { return raw(std::to_string(v)); }
  CsvWriter& cell(long v) { return raw(std::to_string(v)); }
  CsvWriter& cell(const std::string& s) { return raw(s); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void write_header(const std::vector<std::string>& header) {
    for (const auto& h : header) raw(h);
    end_row();
  }

  CsvWriter& raw(const std::string& s) {
    if (!first_) out_ << ',';
    out_ << s;
    first_ = false;
    return *this;
  }

  std::ofstream out_;
  bool first_ = true;
};

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void save_stencil(const fs::path& path, const Stencil& w) { write_json(path, to_json(w)); }
inline Stencil load_stencil(const fs::path& path) { return stencil_from_json(read_json(path)); }

// TrainingSet: {"n_sims", "N", "L", "m_max", "seed", "sigma", "states", "derivatives"}
// where states/derivatives are row-major [n_sims][2][N] flattened (0 = E, 1 = H).

inline nlohmann::json to_json(const TrainingSet& ts) {
  ts.check();
  const int n = ts.grid.size();
  auto flatten = [&](const std::vector<FieldPair>& v) {
    std::vector<double> flat;
    flat.reserve(v.size() * 2 * static_cast<std::size_t>(n));
    for (const auto& f : v) {
      flat.insert(flat.end(), f.E.begin(), f.E.end());
      flat.insert(flat.end(), f.H.begin(), f.H.end());
    }
    return flat;
  };
  nlohmann::json j;
  j["n_sims"] = ts.n_sims();
  j["N"] = n;
  j["L"] = ts.grid.length();
  j["m_max"] = ts.m_max;
  j["seed"] = ts.seed;
  j["sigma"] = ts.noise_std;
  j["states"] = flatten(ts.states);
  j["derivatives"] = flatten(ts.derivatives);
  return j;
}

inline TrainingSet training_set_from_json(const nlohmann::json& j) {
  try {
    const int count = j.at("n_sims").get<int>();
    const int n = j.at("N").get<int>();
    TrainingSet ts;
    ts.grid = Grid1D(n, j.at("L").get<double>());
    ts.m_max = j.at("m_max").get<int>();
    ts.seed = j.at("seed").get<std::uint64_t>();
    ts.noise_std = j.at("sigma").get<double>();
    auto unflatten = [&](const char* key) {
      const auto flat = j.at(key).get<std::vector<double>>();
      detail::require(flat.size() == static_cast<std::size_t>(count) * 2 * static_cast<std::size_t>(n),
                      std::string("training set: '") + key + "' has the wrong length");
      std::vector<FieldPair> out;
      for (int s = 0; s < count; ++s) {
        const double* base = flat.data() + static_cast<std::size_t>(s) * 2 * n;
        out.push_back({Eigen::Map<const Vector>(base, n), Eigen::Map<const Vector>(base + n, n)});
      }
      return out;
    };
    ts.states = unflatten("states");
    ts.derivatives = unflatten("derivatives");
    ts.check();
    return ts;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training set JSON: ") + e.what());
  }
}

inline void save_training_set(const fs::path& path, const TrainingSet& ts) { write_json(path, to_json(ts)); }
inline TrainingSet load_training_set(const fs::path& path) { return training_set_from_json(read_json(path)); }

inline nlohmann::json to_json(const SolverReport& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["w_final"] = std::vector<double>(r.w_final.begin(), r.w_final.end());
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["objective"] = r.objective;
  j["eq_residual"] = r.eq_residual;
  j["step_diff"] = r.step_diff;
  j["elapsed_s"] = r.elapsed_s;
  return j;
}

/// iter, objective, eq_residual, step_diff, elapsed_s.
inline void write_trace_csv(const fs::path& path, const SolverReport& r) {
  CsvWriter csv(path, {"iter", "objective", "eq_residual", "step_diff", "elapsed_s"});
  for (int k = 0; k < r.iterations; ++k) {
    csv.cell(k + 1).cell(r.objective[k]).cell(r.eq_residual[k]).cell(r.step_diff[k]).cell(r.elapsed_s[k]);
    csv.end_row();
  }
}

/// step, t, energy, energy_minus_initial.
inline void write_energy_csv(const fs::path& path, const SimResult& sim, double dt) {
  CsvWriter csv(path, {"step", "t", "energy", "energy_minus_initial"});
  for (std::size_t n = 0; n < sim.energy.size(); ++n) {
    csv.cell(static_cast<long>(n)).cell(static_cast<double>(n) * dt).cell(sim.energy[n]).cell(sim.energy[n] - sim.energy[0]);
    csv.end_row();
  }
}

/// x, E, H.
inline void write_field_csv(const fs::path& path, const FieldPair& f, const Grid1D& grid) {
  CsvWriter csv(path, {"x", "E", "H"});
  for (int i = 0; i < grid.size(); ++i) {
    csv.cell(grid.point(i)).cell(f.E[i]).cell(f.H[i]);
    csv.end_row();
  }
}

/// t, x, E over the recorded snapshots.
inline void write_spacetime_csv(const fs::path& path, const SimResult& sim, const Grid1D& grid) {
  CsvWriter csv(path, {"t", "x", "E"});
  for (const auto& snap : sim.snapshots)
    for (int i = 0; i < grid.size(); ++i) {
      csv.cell(snap.time).cell(grid.point(i)).cell(snap.fields.E[i]);
      csv.end_row();
    }
}

/// theta, re_mu, im_mu.
inline void write_symbol_csv(const fs::path& path, const SymbolCurve& c) {
  CsvWriter csv(path, {"theta", "re_mu", "im_mu"});
  for (std::size_t i = 0; i < c.thetas.size(); ++i) {
    csv.cell(c.thetas[i]).cell(c.values[i].real()).cell(c.values[i].imag());
    csv.end_row();
  }
}

/// theta, amplification, phase_ratio, reference_phase_ratio.
inline void write_dispersion_csv(const fs::path& path, const DispersionCurves& d) {
  CsvWriter csv(path, {"theta", "amplification", "phase_ratio", "reference_phase_ratio"});
  for (std::size_t i = 0; i < d.thetas.size(); ++i) {
    csv.cell(d.thetas[i]).cell(d.amplification[i]).cell(d.phase_ratio[i]).cell(d.reference_phase_ratio[i]);
    csv.end_row();
  }
}

/// N_x, dx, error, order (empty on the first row).
inline void write_convergence_csv(const fs::path& path, const ConvergenceStudy& study) {
  CsvWriter csv(path, {"N_x", "dx", "error", "order"});
  for (const auto& row : study.rows) {
    csv.cell(row.cells).cell(row.dx).cell(row.error).cell(row.order ? format_number(*row.order) : std::string());
    csv.end_row();
  }
}

}  // namespace stencil_lab
