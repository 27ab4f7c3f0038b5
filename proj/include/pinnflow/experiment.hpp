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

#pragma once

#include "pinnflow/map_estimate.hpp"
#include "pinnflow/trainer.hpp"

#include <string>
#include <vector>

namespace pinnflow {

enum class ExperimentKind {
  SingleRun,
  RestartStudy,
  CollocationSweep,
  NkSweep,
  NuSweep,
  MapVsPinn,
  Nonlinear,
  NonlinearNoisy,
};

ExperimentKind experiment_kind_from_string(const std::string& name);
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SingleRun;
  std::string out_dir = "out";
  std::uint64_t master_seed = 1;

  Grid2D grid{32, 32, 1.0, 1.0};
  GpConfig gp{1.0, 0.15, 7};
  VanGenuchtenParams vg{};
  Grid2D vg_grid{32, 32, 10.0, 10.0};

  int n_k = 250;
  int n_u = 100;
  int n_c = 1024;
  int n_bc_per_edge = 32;
  int restarts = 11;
  std::vector<double> sweep; // N_c values or N values, depending on kind
  double noise_level = 0.01;
  double gamma_reg = 1e-6;
  bool collocation_lhs_scheme = false; // single-run/restart default: centroids

  TrainConfig train;
  LossSpec weights; // term weights applied on top of availability toggles

  // Optional pre-generated inputs; empty means synthesize from seeds.
  std::string k_field_file;
  std::string u_field_file;
  std::string k_measurement_file;
  std::string u_measurement_file;

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct RunRow {
  double sweep_var = 0.0;
  int run_index = 0;
  std::uint64_t seed = 0;
  double eps_u = 0.0;
  double eps_k = 0.0;
  double eps_k_map = 0.0; // MapVsPinn only
  double loss = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool ok = true;
  std::string error;
};

struct SweepRow {
  double sweep_var = 0.0;
  double eps_u_mean = 0.0, eps_u_std = 0.0;
  double eps_k_mean = 0.0, eps_k_std = 0.0;
  int n_runs = 0;
  int n_failed = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<RunRow> runs;

  void save_csv(const std::string& sweep_path, const std::string& runs_path) const;
};

/// Executes the configured study end to end and writes per-run and
/// aggregate CSVs plus field artifacts into config.out_dir.
SweepReport run_experiment(const ExperimentConfig& config);

} // namespace pinnflow
