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
#include "pinnflow/map_estimate.hpp"
#include "pinnflow/problem.hpp"
#include "pinnflow/sampling.hpp"
#include "pinnflow/trainer.hpp"

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace pinnflow;

namespace {

ExperimentConfig load_config(const std::string& config_path, long long seed_override,
                             const std::string& out_override) {
  ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{}
                                             : ExperimentConfig::from_json_file(config_path);
  if (seed_override >= 0) cfg.master_seed = static_cast<std::uint64_t>(seed_override);
  if (!out_override.empty()) cfg.out_dir = out_override;
  return cfg;
}

int cmd_generate_data(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  if (cfg.kind == ExperimentKind::Nonlinear || cfg.kind == ExperimentKind::NonlinearNoisy) {
    NonlinearSetup setup = NonlinearSetup::generate(cfg.vg_grid, cfg.vg);
    setup.u_ref.save_file((fs::path(cfg.out_dir) / "reference_u.txt").string());
    const double noise = cfg.kind == ExperimentKind::NonlinearNoisy ? cfg.noise_level : 0.0;
    MeasurementSet ms = sample_nonlinear_measurements(setup, cfg.n_u, cfg.master_seed, noise,
                                                      cfg.master_seed + 1, cfg.n_bc_per_edge);
    PointValues pv{ms.u_points, ms.u_values};
    pv.save_file((fs::path(cfg.out_dir) / "u_measurements.txt").string());
    std::cout << "wrote reference_u.txt and u_measurements.txt to " << cfg.out_dir << "\n";
    return 0;
  }
  LinearSetup setup = LinearSetup::generate(cfg.grid, cfg.gp);
  setup.k_ref.save_file((fs::path(cfg.out_dir) / "reference_k.txt").string());
  setup.k_ref.log().save_file((fs::path(cfg.out_dir) / "reference_lnk.txt").string());
  setup.u_ref.save_file((fs::path(cfg.out_dir) / "reference_u.txt").string());
  MeasurementSet ms =
      sample_linear_measurements(setup, cfg.n_k, cfg.n_u, cfg.master_seed, cfg.n_bc_per_edge);
  PointValues kpv{ms.k_points, ms.k_values};
  kpv.save_file((fs::path(cfg.out_dir) / "k_measurements.txt").string());
  PointValues upv{ms.u_points, ms.u_values};
  upv.save_file((fs::path(cfg.out_dir) / "u_measurements.txt").string());
  std::cout << "wrote reference fields and measurement files to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_experiment(const ExperimentConfig& cfg) {
  SweepReport report = run_experiment(cfg);
  std::cout << std::setprecision(6);
  for (const SweepRow& row : report.rows) {
    std::cout << to_string(cfg.kind) << " sweep=" << row.sweep_var
              << " eps_u_mean=" << row.eps_u_mean << " eps_K_mean=" << row.eps_k_mean
              << " (n=" << row.n_runs << ", failed=" << row.n_failed << ")\n";
  }
  std::cout << "artifacts in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(ExperimentConfig cfg) {
  if (cfg.kind != ExperimentKind::SingleRun && cfg.kind != ExperimentKind::Nonlinear &&
      cfg.kind != ExperimentKind::NonlinearNoisy) {
    cfg.kind = ExperimentKind::SingleRun;
  }
  return cmd_experiment(cfg);
}

int cmd_map(const std::string& k_meas, const std::string& u_meas, const std::string& grid_file,
            double gamma, const std::string& out_dir, const std::string& reference_k) {
  Field grid_field = Field::load_file(grid_file);
  const Grid2D& grid = grid_field.grid;
  MeasurementSet ms;
  if (!k_meas.empty()) {
    PointValues pv = PointValues::load_file(k_meas);
    ms.k_points = pv.points;
    ms.k_values = pv.values;
  }
  if (!u_meas.empty()) {
    PointValues pv = PointValues::load_file(u_meas);
    ms.u_points = pv.points;
    ms.u_values = pv.values;
  }
  MapConfig mc;
  mc.gamma_reg = gamma;
  MapResult result = map_estimate(grid, ms, BoundarySpec::layered_flow(), mc);
  fs::create_directories(out_dir);
  result.k_hat.save_file((fs::path(out_dir) / "map_k_hat.txt").string());
  {
    std::ofstream out(fs::path(out_dir) / "map_objective.csv");
    out << std::setprecision(17) << "iteration,objective\n";
    for (std::size_t i = 0; i < result.objective_trajectory.size(); ++i) {
      out << i << ',' << result.objective_trajectory[i] << '\n';
    }
  }
  std::cout << "map-estimate: " << result.iterations << " accepted steps, "
            << (result.stagnated ? "stagnated" : "converged") << "\n";
  if (!reference_k.empty()) {
    Field ref = Field::load_file(reference_k);
    std::cout << "eps_K = " << std::setprecision(6) << relative_error(result.k_hat, ref) << "\n";
  }
  std::cout << "artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_metrics(const std::string& estimate, const std::string& reference) {
  Field est = Field::load_file(estimate);
  Field ref = Field::load_file(reference);
  std::cout << std::setprecision(17) << relative_error(est, ref) << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed surrogate training and classical baselines for diffusion "
               "coefficient identification"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  long long seed = -1;
  int threads = 0;
  app.add_option("--config", config_path, "JSON experiment configuration")->capture_default_str();
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--threads", threads, "OpenMP thread count (0 = default)");

  CLI::App* gen = app.add_subcommand("generate-data", "write reference fields and measurements");
  CLI::App* train = app.add_subcommand("train", "train surrogates on one configuration");
  CLI::App* experiment = app.add_subcommand("experiment", "run the configured study");

  CLI::App* map = app.add_subcommand("map-estimate", "classical regularized estimate of K");
  std::string map_k_meas, map_u_meas, map_grid, map_ref;
  double map_gamma = 1e-6;
  map->add_option("--k-measurements", map_k_meas, "K measurement file (x y value)");
  map->add_option("--u-measurements", map_u_meas, "u measurement file (x y value)");
  map->add_option("--grid", map_grid, "field file defining the grid")->required();
  map->add_option("--gamma", map_gamma, "gradient-penalty coefficient")->capture_default_str();
  map->add_option("--reference-k", map_ref, "reference K field for error reporting");

  CLI::App* metrics = app.add_subcommand("metrics", "relative error between two field files");
  std::string metrics_estimate, metrics_reference;
  metrics->add_option("--estimate", metrics_estimate, "estimated field file")->required();
  metrics->add_option("--reference", metrics_reference, "reference field file")->required();

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (gen->parsed() || train->parsed() || experiment->parsed()) {
      ExperimentConfig cfg = load_config(config_path, seed, out_dir);
      if (gen->parsed()) return cmd_generate_data(cfg);
      if (train->parsed()) return cmd_train(cfg);
      return cmd_experiment(cfg);
    }
    if (map->parsed()) {
      return cmd_map(map_k_meas, map_u_meas, map_grid, map_gamma,
                     out_dir.empty() ? "out" : out_dir, map_ref);
    }
    if (metrics->parsed()) {
      return cmd_metrics(metrics_estimate, metrics_reference);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
