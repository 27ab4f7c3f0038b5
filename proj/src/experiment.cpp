// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "pinnflow/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pinnflow {

using nlohmann::json;

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "single-run") return ExperimentKind::SingleRun;
  if (name == "restart-study") return ExperimentKind::RestartStudy;
  if (name == "collocation-sweep") return ExperimentKind::CollocationSweep;
  if (name == "nK-sweep") return ExperimentKind::NkSweep;
  if (name == "nU-sweep") return ExperimentKind::NuSweep;
  if (name == "map-vs-pinn") return ExperimentKind::MapVsPinn;
  if (name == "nonlinear") return ExperimentKind::Nonlinear;
  if (name == "nonlinear-noisy") return ExperimentKind::NonlinearNoisy;
  throw std::invalid_argument("unknown experiment kind: " + name);
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SingleRun: return "single-run";
    case ExperimentKind::RestartStudy: return "restart-study";
    case ExperimentKind::CollocationSweep: return "collocation-sweep";
    case ExperimentKind::NkSweep: return "nK-sweep";
    case ExperimentKind::NuSweep: return "nU-sweep";
    case ExperimentKind::MapVsPinn: return "map-vs-pinn";
    case ExperimentKind::Nonlinear: return "nonlinear";
    case ExperimentKind::NonlinearNoisy: return "nonlinear-noisy";
  }
  return "unknown";
}

namespace {

Grid2D grid_from_json(const json& j, const Grid2D& fallback) {
  return Grid2D(j.value("nx", fallback.nx), j.value("ny", fallback.ny),
                j.value("Lx", fallback.Lx), j.value("Ly", fallback.Ly));
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(j.value("kind", "single-run"));
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  if (j.contains("grid")) cfg.grid = grid_from_json(j["grid"], cfg.grid);
  if (j.contains("gp")) {
    cfg.gp.sigma = j["gp"].value("sigma", cfg.gp.sigma);
    cfg.gp.lambda = j["gp"].value("lambda", cfg.gp.lambda);
    cfg.gp.seed = j["gp"].value("seed", cfg.gp.seed);
  }
  if (j.contains("vg")) {
    const json& v = j["vg"];
    cfg.vg.Ks = v.value("Ks", cfg.vg.Ks);
    cfg.vg.alpha = v.value("alpha", cfg.vg.alpha);
    cfg.vg.m = v.value("m", cfg.vg.m);
    cfg.vg.ug = v.value("ug", cfg.vg.ug);
    cfg.vg.u0 = v.value("u0", cfg.vg.u0);
    cfg.vg.q = v.value("q", cfg.vg.q);
  }
  if (j.contains("vg_grid")) cfg.vg_grid = grid_from_json(j["vg_grid"], cfg.vg_grid);
  cfg.n_k = j.value("n_k", cfg.n_k);
  cfg.n_u = j.value("n_u", cfg.n_u);
  cfg.n_c = j.value("n_c", cfg.n_c);
  cfg.n_bc_per_edge = j.value("n_bc_per_edge", cfg.n_bc_per_edge);
  cfg.restarts = j.value("restarts", cfg.restarts);
  if (j.contains("sweep")) cfg.sweep = j["sweep"].get<std::vector<double>>();
  cfg.noise_level = j.value("noise_level", cfg.noise_level);
  cfg.gamma_reg = j.value("gamma_reg", cfg.gamma_reg);
  cfg.collocation_lhs_scheme = j.value("collocation_lhs", cfg.collocation_lhs_scheme);
  if (j.contains("train")) {
    const json& t = j["train"];
    cfg.train.hidden_units = t.value("hidden_units", cfg.train.hidden_units);
    cfg.train.hidden_layers = t.value("hidden_layers", cfg.train.hidden_layers);
    cfg.train.block_size = t.value("block_size", cfg.train.block_size);
    cfg.train.use_reference_path = t.value("use_reference_path", cfg.train.use_reference_path);
    cfg.train.lbfgs.max_iterations = t.value("max_iterations", cfg.train.lbfgs.max_iterations);
    cfg.train.lbfgs.memory = t.value("memory", cfg.train.lbfgs.memory);
    cfg.train.lbfgs.grad_tolerance = t.value("grad_tolerance", cfg.train.lbfgs.grad_tolerance);
    cfg.train.lbfgs.loss_change_tolerance =
        t.value("loss_change_tolerance", cfg.train.lbfgs.loss_change_tolerance);
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    cfg.weights.w_data_k = w.value("data_k", 1.0);
    cfg.weights.w_data_u = w.value("data_u", 1.0);
    cfg.weights.w_dirichlet = w.value("dirichlet", 1.0);
    cfg.weights.w_neumann = w.value("neumann", 1.0);
    cfg.weights.w_residual = w.value("residual", 1.0);
  }
  cfg.k_field_file = j.value("k_field_file", std::string());
  cfg.u_field_file = j.value("u_field_file", std::string());
  cfg.k_measurement_file = j.value("k_measurement_file", std::string());
  cfg.u_measurement_file = j.value("u_measurement_file", std::string());
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ExperimentConfig: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str());
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["kind"] = to_string(kind);
  j["out_dir"] = out_dir;
  j["master_seed"] = master_seed;
  j["grid"] = {{"nx", grid.nx}, {"ny", grid.ny}, {"Lx", grid.Lx}, {"Ly", grid.Ly}};
  j["gp"] = {{"sigma", gp.sigma}, {"lambda", gp.lambda}, {"seed", gp.seed}};
  j["vg"] = {{"Ks", vg.Ks},   {"alpha", vg.alpha}, {"m", vg.m},
             {"ug", vg.ug},   {"u0", vg.u0},       {"q", vg.q}};
  j["vg_grid"] = {{"nx", vg_grid.nx}, {"ny", vg_grid.ny}, {"Lx", vg_grid.Lx},
                  {"Ly", vg_grid.Ly}};
  j["n_k"] = n_k;
  j["n_u"] = n_u;
  j["n_c"] = n_c;
  j["n_bc_per_edge"] = n_bc_per_edge;
  j["restarts"] = restarts;
  j["sweep"] = sweep;
  j["noise_level"] = noise_level;
  j["gamma_reg"] = gamma_reg;
  j["collocation_lhs"] = collocation_lhs_scheme;
  j["train"] = {{"hidden_units", train.hidden_units},
                {"hidden_layers", train.hidden_layers},
                {"block_size", train.block_size},
                {"use_reference_path", train.use_reference_path},
                {"max_iterations", train.lbfgs.max_iterations},
                {"memory", train.lbfgs.memory},
                {"grad_tolerance", train.lbfgs.grad_tolerance},
                {"loss_change_tolerance", train.lbfgs.loss_change_tolerance}};
  return j.dump(2);
}

void SweepReport::save_csv(const std::string& sweep_path, const std::string& runs_path) const {
  {
    std::ofstream out(sweep_path);
    if (!out) throw std::runtime_error("SweepReport: cannot open " + sweep_path);
    out << std::setprecision(17);
    out << "sweep_var,eps_u_mean,eps_u_std,eps_K_mean,eps_K_std,n_runs,n_failed\n";
    for (const SweepRow& r : rows) {
      out << r.sweep_var << ',' << r.eps_u_mean << ',' << r.eps_u_std << ',' << r.eps_k_mean
          << ',' << r.eps_k_std << ',' << r.n_runs << ',' << r.n_failed << '\n';
    }
  }
  {
    // Wall times go to a separate file: runs.csv stays byte-identical
    // across repeats of the same seed.
    std::ofstream out(runs_path);
    if (!out) throw std::runtime_error("SweepReport: cannot open " + runs_path);
    out << std::setprecision(17);
    out << "sweep_var,run_index,seed,eps_u,eps_K,eps_K_map,loss,iterations,status\n";
    std::ofstream times(runs_path + ".timings");
    times << "sweep_var,run_index,wall_seconds\n";
    for (const RunRow& r : runs) {
      out << r.sweep_var << ',' << r.run_index << ',' << r.seed << ',' << r.eps_u << ','
          << r.eps_k << ',' << r.eps_k_map << ',' << r.loss << ',' << r.iterations << ','
          << (r.ok ? "ok" : r.error) << '\n';
      times << r.sweep_var << ',' << r.run_index << ',' << r.wall_seconds << '\n';
    }
  }
}

namespace {

namespace fs = std::filesystem;

struct RunCounter {
  std::uint64_t master;
  std::uint64_t next = 1;
  // run index k maps to seed master + k; k starts at 1 so the master seed
  // itself stays reserved for experiment-level draws.
  std::uint64_t take() { return master + next++; }
};

SweepRow aggregate(double sweep_var, const std::vector<RunRow>& runs) {
  SweepRow row;
  row.sweep_var = sweep_var;
  std::vector<double> eps_u, eps_k;
  for (const RunRow& r : runs) {
    row.n_runs += 1;
    if (!r.ok) {
      row.n_failed += 1;
      continue;
    }
    eps_u.push_back(r.eps_u);
    eps_k.push_back(r.eps_k);
  }
  if (!eps_u.empty()) {
    RestartStats su = compute_restart_stats(eps_u);
    RestartStats sk = compute_restart_stats(eps_k);
    row.eps_u_mean = su.mean;
    row.eps_u_std = su.stddev;
    row.eps_k_mean = sk.mean;
    row.eps_k_std = sk.stddev;
  }
  return row;
}

LossSpec linear_spec(const ExperimentConfig& cfg, const MeasurementSet& ms,
                     const CollocationSet& cs) {
  LossSpec spec = LossSpec::for_available(ProblemKind::LinearK, ms, cs);
  spec.w_data_k = cfg.weights.w_data_k;
  spec.w_data_u = cfg.weights.w_data_u;
  spec.w_dirichlet = cfg.weights.w_dirichlet;
  spec.w_neumann = cfg.weights.w_neumann;
  spec.w_residual = cfg.weights.w_residual;
  return spec;
}

LinearSetup load_or_generate_linear(const ExperimentConfig& cfg) {
  if (!cfg.k_field_file.empty()) {
    LinearSetup setup;
    setup.k_ref = Field::load_file(cfg.k_field_file);
    setup.grid = setup.k_ref.grid;
    if (!cfg.u_field_file.empty()) {
      setup.u_ref = Field::load_file(cfg.u_field_file);
    } else {
      setup.u_ref = fv_solve_linear(setup.grid, setup.k_ref, BoundarySpec::layered_flow());
    }
    return setup;
  }
  return LinearSetup::generate(cfg.grid, cfg.gp);
}

MeasurementSet linear_measurements(const ExperimentConfig& cfg, const LinearSetup& setup,
                                   std::uint64_t seed) {
  if (!cfg.k_measurement_file.empty() || !cfg.u_measurement_file.empty()) {
    MeasurementSet ms = sample_linear_measurements(setup, 0, 0, seed, cfg.n_bc_per_edge);
    if (!cfg.k_measurement_file.empty()) {
      PointValues pv = PointValues::load_file(cfg.k_measurement_file);
      ms.k_points = pv.points;
      ms.k_values = pv.values;
    }
    if (!cfg.u_measurement_file.empty()) {
      PointValues pv = PointValues::load_file(cfg.u_measurement_file);
      ms.u_points = pv.points;
      ms.u_values = pv.values;
    }
    return ms;
  }
  return sample_linear_measurements(setup, cfg.n_k, cfg.n_u, seed, cfg.n_bc_per_edge);
}

void write_linear_reference(const ExperimentConfig& cfg, const LinearSetup& setup) {
  setup.k_ref.save_file((fs::path(cfg.out_dir) / "reference_k.txt").string());
  setup.k_ref.log().save_file((fs::path(cfg.out_dir) / "reference_lnk.txt").string());
  setup.u_ref.save_file((fs::path(cfg.out_dir) / "reference_u.txt").string());
}

RunRow train_linear_run(const ExperimentConfig& cfg, const LinearSetup& setup,
                        const MeasurementSet& ms, const CollocationSet& cs, double sweep_var,
                        int run_index, std::uint64_t init_seed) {
  RunRow row;
  row.sweep_var = sweep_var;
  row.run_index = run_index;
  row.seed = init_seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    TrainConfig tc = cfg.train;
    tc.init_seed = init_seed;
    LossSpec spec = linear_spec(cfg, ms, cs);
    TrainOutcome outcome = train_linear(setup, ms, cs, spec, tc);
    row.eps_u = outcome.eps_u;
    row.eps_k = outcome.eps_k;
    row.loss = outcome.opt.loss;
    row.iterations = outcome.opt.report.iterations;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

CollocationSet experiment_collocation(const ExperimentConfig& cfg, int n_c,
                                      std::uint64_t seed) {
  if (n_c <= 0) return CollocationSet{};
  if (cfg.collocation_lhs_scheme) return collocation_lhs(cfg.grid, n_c, seed);
  if (n_c == cfg.grid.cell_count()) return collocation_all_centroids(cfg.grid);
  return collocation_lhs(cfg.grid, n_c, seed);
}

} // namespace

SweepReport run_experiment(const ExperimentConfig& config) {
  fs::create_directories(config.out_dir);
  {
    std::ofstream echo(fs::path(config.out_dir) / "config.json");
    echo << config.to_json_text() << '\n';
  }

  SweepReport report;
  RunCounter counter{config.master_seed};

  switch (config.kind) {
    case ExperimentKind::SingleRun: {
      LinearSetup setup = load_or_generate_linear(config);
      write_linear_reference(config, setup);
      MeasurementSet ms = linear_measurements(config, setup, config.master_seed);
      CollocationSet cs = experiment_collocation(config, config.n_c, config.master_seed);
      RunRow row;
      row.sweep_var = config.n_c;
      row.seed = counter.take();
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainConfig tc = config.train;
        tc.init_seed = row.seed;
        LossSpec spec = linear_spec(config, ms, cs);
        TrainOutcome outcome = train_linear(setup, ms, cs, spec, tc);
        row.eps_u = outcome.eps_u;
        row.eps_k = outcome.eps_k;
        row.loss = outcome.opt.loss;
        row.iterations = outcome.opt.report.iterations;
        outcome.model.u_field(setup.grid).save_file(
            (fs::path(config.out_dir) / "estimate_u.txt").string());
        outcome.model.k_field(setup.grid).save_file(
            (fs::path(config.out_dir) / "estimate_k.txt").string());
        outcome.opt.report.save_csv((fs::path(config.out_dir) / "train_report.csv").string());
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.runs.push_back(row);
      report.rows.push_back(aggregate(config.n_c, {row}));
      break;
    }

    case ExperimentKind::RestartStudy: {
      LinearSetup setup = load_or_generate_linear(config);
      write_linear_reference(config, setup);
      MeasurementSet ms = linear_measurements(config, setup, config.master_seed);
      CollocationSet cs = experiment_collocation(config, config.n_c, config.master_seed);
      std::vector<RunRow> rows;
      for (int k = 0; k < config.restarts; ++k) {
        RunRow row = train_linear_run(config, setup, ms, cs, config.n_c, k, counter.take());
        rows.push_back(row);
        report.runs.push_back(row);
      }
      report.rows.push_back(aggregate(config.n_c, rows));
      break;
    }

    case ExperimentKind::CollocationSweep: {
      LinearSetup setup = load_or_generate_linear(config);
      write_linear_reference(config, setup);
      MeasurementSet ms = linear_measurements(config, setup, config.master_seed);
      for (double value : config.sweep) {
        std::vector<RunRow> rows;
        for (int k = 0; k < config.restarts; ++k) {
          const std::uint64_t seed = counter.take();
          // Collocation locations redraw per run; initialization is fixed.
          CollocationSet cs = value > 0 ? collocation_lhs(config.grid,
                                                          static_cast<int>(value), seed)
                                        : CollocationSet{};
          RunRow row = train_linear_run(config, setup, ms, cs, value, k, config.master_seed);
          row.seed = seed;
          rows.push_back(row);
          report.runs.push_back(row);
        }
        report.rows.push_back(aggregate(value, rows));
      }
      break;
    }

    case ExperimentKind::NkSweep:
    case ExperimentKind::NuSweep: {
      LinearSetup setup = load_or_generate_linear(config);
      write_linear_reference(config, setup);
      const bool vary_k = config.kind == ExperimentKind::NkSweep;
      for (double value : config.sweep) {
        std::vector<RunRow> rows;
        for (int k = 0; k < config.restarts; ++k) {
          const std::uint64_t seed = counter.take();
          // The varying observation set redraws per run; the other set and
          // the initialization stay tied to the master seed.
          const int n_k = vary_k ? static_cast<int>(value) : config.n_k;
          const int n_u = vary_k ? config.n_u : static_cast<int>(value);
          MeasurementSet base =
              sample_linear_measurements(setup, n_k, n_u, config.master_seed,
                                         config.n_bc_per_edge);
          MeasurementSet varied = sample_linear_measurements(setup, n_k, n_u, seed,
                                                             config.n_bc_per_edge);
          MeasurementSet ms = base;
          if (vary_k) {
            ms.k_points = varied.k_points;
            ms.k_values = varied.k_values;
          } else {
            ms.u_points = varied.u_points;
            ms.u_values = varied.u_values;
          }
          CollocationSet cs = experiment_collocation(config, config.n_c, config.master_seed);
          RunRow row = train_linear_run(config, setup, ms, cs, value, k, config.master_seed);
          row.seed = seed;
          rows.push_back(row);
          report.runs.push_back(row);
        }
        report.rows.push_back(aggregate(value, rows));
      }
      break;
    }

    case ExperimentKind::MapVsPinn: {
      LinearSetup setup = load_or_generate_linear(config);
      write_linear_reference(config, setup);
      std::vector<double> values = config.sweep.empty()
                                       ? std::vector<double>{static_cast<double>(config.n_k)}
                                       : config.sweep;
      for (double value : values) {
        const int n = static_cast<int>(value);
        std::vector<RunRow> rows;
        for (int k = 0; k < config.restarts; ++k) {
          const std::uint64_t seed = counter.take();
          MeasurementSet ms =
              sample_linear_measurements(setup, n, n, seed, config.n_bc_per_edge);
          CollocationSet cs = experiment_collocation(config, config.n_c, seed);
          RunRow row = train_linear_run(config, setup, ms, cs, value, k, seed);
          if (row.ok) {
            try {
              MapConfig mc;
              mc.gamma_reg = config.gamma_reg;
              MapResult map = map_estimate(setup.grid, ms, BoundarySpec::layered_flow(), mc);
              row.eps_k_map = relative_error(map.k_hat, setup.k_ref);
              if (k == 0) {
                map.k_hat.save_file((fs::path(config.out_dir) /
                                     ("map_k_hat_n" + std::to_string(n) + ".txt"))
                                        .string());
              }
            } catch (const std::exception& e) {
              row.ok = false;
              row.error = std::string("map: ") + e.what();
            }
          }
          rows.push_back(row);
          report.runs.push_back(row);
        }
        report.rows.push_back(aggregate(value, rows));
      }
      break;
    }

    case ExperimentKind::Nonlinear:
    case ExperimentKind::NonlinearNoisy: {
      NonlinearSetup setup = NonlinearSetup::generate(config.vg_grid, config.vg);
      setup.u_ref.save_file((fs::path(config.out_dir) / "reference_u.txt").string());
      const double noise =
          config.kind == ExperimentKind::NonlinearNoisy ? config.noise_level : 0.0;
      const std::uint64_t seed = counter.take();
      MeasurementSet ms = sample_nonlinear_measurements(setup, config.n_u, config.master_seed,
                                                        noise, seed, config.n_bc_per_edge);
      RunRow row;
      row.sweep_var = noise;
      row.run_index = 0;
      row.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        TrainConfig tc = config.train;
        tc.init_seed = seed;
        TrainOutcome outcome = train_nonlinear(setup, ms, config.n_c, config.n_bc_per_edge,
                                               config.master_seed, tc);
        row.eps_u = outcome.eps_u;
        row.eps_k = outcome.eps_k;
        row.loss = outcome.opt.loss;
        row.iterations = outcome.opt.report.iterations;
        outcome.model.u_field(setup.grid).save_file(
            (fs::path(config.out_dir) / "estimate_u.txt").string());
        outcome.opt.report.save_csv((fs::path(config.out_dir) / "train_report.csv").string());
        // Recovered constitutive curve against the closure, tabulated.
        std::ofstream curve(fs::path(config.out_dir) / "k_curve.csv");
        curve << std::setprecision(17) << "u,K_ref,K_hat\n";
        const double lo = setup.u_ref.values.minCoeff();
        const double hi = setup.u_ref.values.maxCoeff();
        for (int i = 0; i < 200; ++i) {
          const double u = lo + (hi - lo) * (i + 0.5) / 200;
          curve << u << ',' << van_genuchten_K(u, setup.vg) << ','
                << outcome.model.k_of_u(u) << '\n';
        }
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      row.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.runs.push_back(row);
      report.rows.push_back(aggregate(noise, {row}));
      break;
    }
  }

  report.save_csv((fs::path(config.out_dir) / "sweep.csv").string(),
                  (fs::path(config.out_dir) / "runs.csv").string());
  return report;
}

} // namespace pinnflow
