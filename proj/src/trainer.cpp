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

#include "pinnflow/trainer.hpp"

#include "pinnflow/sampling.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnflow {

namespace {

std::vector<int> layer_sizes(int inputs, const TrainConfig& config) {
  std::vector<int> sizes;
  sizes.push_back(inputs);
  for (int l = 0; l < config.hidden_layers; ++l) sizes.push_back(config.hidden_units);
  sizes.push_back(1);
  return sizes;
}

// Concatenated-parameter objective over both networks.
LbfgsResult run_optimizer(PinnProblem& problem, const MeasurementSet& ms,
                          const CollocationSet& cs, const LossSpec& spec,
                          const TrainConfig& config) {
  const int n_u = problem.u_net.parameter_count();
  const int n_k = problem.k_net.parameter_count();
  Eigen::VectorXd x0(n_u + n_k);
  x0.segment(0, n_u) = problem.u_net.flatten();
  x0.segment(n_u, n_k) = problem.k_net.flatten();

  auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    problem.u_net.unflatten(x.segment(0, n_u));
    problem.k_net.unflatten(x.segment(n_u, n_k));
    LossAndGrad lg = config.use_reference_path
                         ? loss_gradient_reference(problem, ms, cs, spec)
                         : loss_gradient_blocked(problem, ms, cs, spec, config.block_size);
    grad.resize(n_u + n_k);
    grad.segment(0, n_u) = lg.u_grad;
    grad.segment(n_u, n_k) = lg.k_grad;
    return lg.breakdown.total;
  };

  LbfgsResult result = lbfgs_minimize(objective, x0, config.lbfgs);
  problem.u_net.unflatten(result.x.segment(0, n_u));
  problem.k_net.unflatten(result.x.segment(n_u, n_k));
  return result;
}

} // namespace

LinearSetup LinearSetup::generate(const Grid2D& grid, const GpConfig& gp) {
  LinearSetup setup;
  setup.grid = grid;
  setup.k_ref = sample_gp_lnk(grid, gp).exp();
  setup.u_ref = fv_solve_linear(grid, setup.k_ref, BoundarySpec::layered_flow());
  return setup;
}

MeasurementSet sample_linear_measurements(const LinearSetup& setup, int n_k, int n_u,
                                          std::uint64_t seed, int n_bc_per_edge) {
  const Grid2D& grid = setup.grid;
  MeasurementSet ms;
  if (n_k > 0) {
    std::vector<int> cells = sample_cell_indices(grid, n_k, seed);
    ms.k_values.resize(n_k);
    for (int i = 0; i < n_k; ++i) {
      ms.k_points.push_back(grid.centroid(cells[i]));
      ms.k_values[i] = setup.k_ref.values[cells[i]];
    }
  }
  if (n_u > 0) {
    std::vector<int> cells = sample_cell_indices(grid, n_u, seed + 1);
    ms.u_values.resize(n_u);
    for (int i = 0; i < n_u; ++i) {
      ms.u_points.push_back(grid.centroid(cells[i]));
      ms.u_values[i] = setup.u_ref.values[cells[i]];
    }
  }
  for (const auto& p : edge_points(grid, Edge::YMin, n_bc_per_edge)) {
    ms.dirichlet_points.push_back(p);
  }
  for (const auto& p : edge_points(grid, Edge::YMax, n_bc_per_edge)) {
    ms.dirichlet_points.push_back(p);
  }
  ms.dirichlet_values.resize(2 * n_bc_per_edge);
  ms.dirichlet_values.segment(0, n_bc_per_edge).setConstant(1.0);
  ms.dirichlet_values.segment(n_bc_per_edge, n_bc_per_edge).setConstant(0.0);
  for (Edge e : {Edge::XMin, Edge::XMax}) {
    for (const auto& p : edge_points(grid, e, n_bc_per_edge)) {
      ms.neumann_points.push_back(p);
      ms.neumann_directions.push_back(0);
    }
  }
  ms.neumann_values = Eigen::VectorXd::Zero(2 * n_bc_per_edge);
  return ms;
}

CollocationSet collocation_all_centroids(const Grid2D& grid) {
  CollocationSet cs;
  cs.interior.reserve(grid.cell_count());
  for (int c = 0; c < grid.cell_count(); ++c) cs.interior.push_back(grid.centroid(c));
  return cs;
}

CollocationSet collocation_lhs(const Grid2D& grid, int n, std::uint64_t seed) {
  CollocationSet cs;
  cs.interior = sample_measurement_locations(grid, n, seed, SamplingScheme::LatinHypercube);
  return cs;
}

NonlinearSetup NonlinearSetup::generate(const Grid2D& grid, const VanGenuchtenParams& vg,
                                        const PicardConfig& picard) {
  NonlinearSetup setup;
  setup.grid = grid;
  setup.vg = vg;
  setup.u_ref = fv_solve_vangenuchten(grid, vg, picard);
  setup.u_scale = std::abs(vg.u0);
  if (setup.u_scale <= 0.0) {
    throw std::invalid_argument("NonlinearSetup: u0 must be nonzero to set the state scale");
  }
  setup.k_scale = vg.q * grid.Lx / setup.u_scale;
  return setup;
}

MeasurementSet sample_nonlinear_measurements(const NonlinearSetup& setup, int n_u,
                                             std::uint64_t seed, double noise_level,
                                             std::uint64_t noise_seed, int n_dirichlet) {
  const Grid2D& grid = setup.grid;
  MeasurementSet ms;
  std::vector<int> cells = sample_cell_indices(grid, n_u, seed);
  ms.u_values.resize(n_u);
  for (int i = 0; i < n_u; ++i) {
    ms.u_points.push_back(grid.centroid(cells[i]));
    ms.u_values[i] = setup.u_ref.values[cells[i]];
  }
  if (noise_level > 0.0) {
    ms.u_values = add_noise(ms.u_values, noise_level, noise_seed);
  }
  for (const auto& p : edge_points(grid, Edge::XMax, n_dirichlet)) {
    ms.dirichlet_points.push_back(p);
  }
  ms.dirichlet_values = Eigen::VectorXd::Constant(n_dirichlet, setup.vg.u0);
  return ms;
}

double TrainedModel::u_at(const Eigen::Vector2d& x_phys) const {
  return u_mult * problem.u_surrogate(x_phys / x_div);
}

double TrainedModel::k_at(const Eigen::Vector2d& x_phys) const {
  return k_mult * problem.k_surrogate(x_phys / x_div);
}

double TrainedModel::k_of_u(double u_phys) const {
  return k_mult * problem.k_of_u(u_phys / u_mult);
}

Field TrainedModel::u_field(const Grid2D& physical_grid) const {
  Field f(physical_grid);
  for (int c = 0; c < physical_grid.cell_count(); ++c) {
    f.values[c] = u_at(physical_grid.centroid(c));
  }
  return f;
}

Field TrainedModel::k_field(const Grid2D& physical_grid) const {
  Field f(physical_grid);
  for (int c = 0; c < physical_grid.cell_count(); ++c) {
    f.values[c] = k_at(physical_grid.centroid(c));
  }
  return f;
}

TrainOutcome train_linear(const LinearSetup& setup, const MeasurementSet& measurements,
                          const CollocationSet& collocation, const LossSpec& spec,
                          const TrainConfig& config) {
  TrainOutcome outcome;
  PinnProblem& problem = outcome.model.problem;
  problem.kind = ProblemKind::LinearK;
  problem.Lx = setup.grid.Lx;
  problem.Ly = setup.grid.Ly;
  problem.u_net = MlpParams::xavier(layer_sizes(2, config), config.init_seed);
  problem.k_net =
      MlpParams::xavier(layer_sizes(2, config), config.init_seed + 0x9e3779b97f4a7c15ULL);
  problem.normalize_spatial_inputs();

  outcome.opt = run_optimizer(problem, measurements, collocation, spec, config);

  outcome.eps_u = relative_error(outcome.model.u_field(setup.grid), setup.u_ref);
  outcome.eps_k = relative_error(outcome.model.k_field(setup.grid), setup.k_ref);
  return outcome;
}

TrainOutcome train_nonlinear(const NonlinearSetup& setup, const MeasurementSet& measurements,
                             int n_c, int n_boundary_per_edge, std::uint64_t collocation_seed,
                             const TrainConfig& config) {
  const Grid2D& grid = setup.grid;
  // Computational formulation: X = x / Lx, U = u / |u0|, K' = K / k_scale.
  // All three scales come from known boundary data; with
  // k_scale = q Lx / |u0| the influx target -K' dU/dX1 is exactly 1.
  Grid2D cgrid(grid.nx, grid.ny, 1.0, grid.Ly / grid.Lx);

  MeasurementSet ms;
  ms.u_values = measurements.u_values / setup.u_scale;
  for (const auto& p : measurements.u_points) ms.u_points.push_back(p / grid.Lx);
  ms.dirichlet_values = measurements.dirichlet_values / setup.u_scale;
  for (const auto& p : measurements.dirichlet_points) {
    ms.dirichlet_points.push_back(p / grid.Lx);
  }

  CollocationSet cs;
  cs.interior =
      sample_measurement_locations(cgrid, n_c, collocation_seed, SamplingScheme::LatinHypercube);
  cs.neumann_x1 = edge_points(cgrid, Edge::XMin, n_boundary_per_edge);
  cs.neumann_x2 = edge_points(cgrid, Edge::YMin, n_boundary_per_edge);
  for (const auto& p : edge_points(cgrid, Edge::YMax, n_boundary_per_edge)) {
    cs.neumann_x2.push_back(p);
  }

  TrainOutcome outcome;
  PinnProblem& problem = outcome.model.problem;
  problem.kind = ProblemKind::NonlinearKU;
  problem.Lx = cgrid.Lx;
  problem.Ly = cgrid.Ly;
  problem.u_net = MlpParams::xavier(layer_sizes(2, config), config.init_seed);
  problem.k_net =
      MlpParams::xavier(layer_sizes(1, config), config.init_seed + 0x9e3779b97f4a7c15ULL);
  problem.normalize_spatial_inputs();
  problem.neumann_q = setup.vg.q * grid.Lx / (setup.k_scale * setup.u_scale);
  // Coefficient-net input normalization from the observed state range.
  const double u_min = ms.u_values.minCoeff();
  const double u_max = ms.u_values.maxCoeff();
  if (u_max - u_min <= 0.0) {
    throw std::invalid_argument("train_nonlinear: observed state range is degenerate");
  }
  problem.k_in_scale = 2.0 / (u_max - u_min);
  problem.k_in_offset = -(u_max + u_min) / (u_max - u_min);

  outcome.model.x_div = grid.Lx;
  outcome.model.u_mult = setup.u_scale;
  outcome.model.k_mult = setup.k_scale;

  LossSpec spec = LossSpec::for_available(ProblemKind::NonlinearKU, ms, cs);
  outcome.opt = run_optimizer(problem, ms, cs, spec, config);

  outcome.eps_u = relative_error(outcome.model.u_field(grid), setup.u_ref);
  outcome.eps_k = k_curve_error(outcome.model, setup.vg, setup.u_ref.values.minCoeff(),
                                setup.u_ref.values.maxCoeff());
  return outcome;
}

double k_curve_error(const TrainedModel& model, const VanGenuchtenParams& vg, double u_min,
                     double u_max, int n_samples) {
  Eigen::VectorXd estimate(n_samples), reference(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    const double u = u_min + (u_max - u_min) * (i + 0.5) / n_samples;
    estimate[i] = model.k_of_u(u);
    reference[i] = van_genuchten_K(u, vg);
  }
  return relative_error_samples(estimate, reference);
}

} // namespace pinnflow
