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

#include "pinnflow/gaussian_field.hpp"
#include "pinnflow/lbfgs.hpp"
#include "pinnflow/loss_grad.hpp"
#include "pinnflow/problem.hpp"
#include "pinnflow/richards.hpp"

namespace pinnflow {

struct TrainConfig {
  int hidden_units = 50;
  int hidden_layers = 2;
  std::uint64_t init_seed = 0;
  // A deeper history pays off on these ill-conditioned composite losses;
  // the optimizer module itself keeps the standard default of 10.
  LbfgsConfig lbfgs{.memory = 50, .max_iterations = 20000, .loss_change_tolerance = 1e-11};
  bool use_reference_path = false; // serial tape path instead of blocked kernels
  int block_size = 64;
};

/// Reference data of the space-dependent problem: a log-conductivity
/// realization and its finite-volume solution under the layered-flow
/// boundary conditions.
struct LinearSetup {
  Grid2D grid;
  Field k_ref;
  Field u_ref;

  static LinearSetup generate(const Grid2D& grid, const GpConfig& gp);
};

/// K and u samples at random distinct centroids, Dirichlet samples on the
/// top/bottom edges and zero-flux samples on the lateral edges.
MeasurementSet sample_linear_measurements(const LinearSetup& setup, int n_k, int n_u,
                                          std::uint64_t seed, int n_bc_per_edge = 32);

/// All cell centroids as collocation points (the uniform choice).
CollocationSet collocation_all_centroids(const Grid2D& grid);
/// Latin-hypercube collocation points.
CollocationSet collocation_lhs(const Grid2D& grid, int n, std::uint64_t seed);

/// Reference data of the state-dependent problem: van Genuchten
/// conductivity, lateral-influx scenario, plus the data-derived scales
/// that nondimensionalize the training formulation.
struct NonlinearSetup {
  Grid2D grid; // physical domain
  VanGenuchtenParams vg;
  Field u_ref;    // physical pressure head
  double u_scale; // |u0|
  double k_scale; // q Lx / |u0|

  static NonlinearSetup generate(const Grid2D& grid, const VanGenuchtenParams& vg,
                                 const PicardConfig& picard = {});
};

/// u samples at random distinct centroids with optional multiplicative
/// noise, plus Dirichlet samples on the x1 = Lx edge. Points and values
/// are physical; training rescales internally.
MeasurementSet sample_nonlinear_measurements(const NonlinearSetup& setup, int n_u,
                                             std::uint64_t seed, double noise_level = 0.0,
                                             std::uint64_t noise_seed = 1, int n_dirichlet = 32);

/// A trained surrogate pair plus the affine maps back to physical units.
struct TrainedModel {
  PinnProblem problem;
  double x_div = 1.0;  // physical x / x_div = computational coordinate
  double u_mult = 1.0; // physical u = u_mult * state-net value
  double k_mult = 1.0; // physical K = k_mult * coefficient-net value

  double u_at(const Eigen::Vector2d& x_phys) const;
  double k_at(const Eigen::Vector2d& x_phys) const;
  double k_of_u(double u_phys) const;
  Field u_field(const Grid2D& physical_grid) const;
  Field k_field(const Grid2D& physical_grid) const;
};

struct TrainOutcome {
  TrainedModel model;
  LbfgsResult opt;
  double eps_u = 0.0;
  double eps_k = 0.0;
};

/// Trains the space-dependent surrogates on the given data and evaluates
/// the relative errors against the setup's reference fields.
TrainOutcome train_linear(const LinearSetup& setup, const MeasurementSet& measurements,
                          const CollocationSet& collocation, const LossSpec& spec,
                          const TrainConfig& config);

/// Trains the state-dependent surrogates (state data only) and evaluates
/// eps_u on the grid and eps_K for the recovered K(u) over the traversed
/// pressure range.
TrainOutcome train_nonlinear(const NonlinearSetup& setup, const MeasurementSet& measurements,
                             int n_c, int n_boundary_per_edge, std::uint64_t collocation_seed,
                             const TrainConfig& config);

/// Recovered-versus-reference conductivity curve error over [u_min, u_max]
/// (the metric in integral form, midpoint samples).
double k_curve_error(const TrainedModel& model, const VanGenuchtenParams& vg, double u_min,
                     double u_max, int n_samples = 1000);

} // namespace pinnflow
