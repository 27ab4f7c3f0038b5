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

#include "pinnflow/fv.hpp"
#include "pinnflow/grid.hpp"
#include "pinnflow/problem.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace pinnflow {

struct MapConfig {
  double gamma_reg = 1e-6;       // gradient-penalty coefficient
  double lm_initial_damping = 1e-3;
  double lm_increase = 10.0;     // damping factor on rejection
  double lm_decrease = 0.1;      // damping factor on acceptance
  double lm_damping_max = 1e14;  // stagnation threshold
  int max_iterations = 200;
  double objective_tolerance = 1e-12; // relative decrease per accepted step
  double cg_tolerance = 1e-10;
  int cg_max_iterations = 500;
};

/// Cell selections of the observed state and coefficient values,
/// canonically sorted so the estimate does not depend on input row order.
struct ObservationOperators {
  std::vector<int> u_cells;
  Eigen::VectorXd u_values;
  std::vector<int> k_cells;
  Eigen::VectorXd lnk_values;

  static ObservationOperators from_measurements(const Grid2D& grid, const MeasurementSet& ms);
};

/// One row per interior face: (m_neighbor - m_cell) / centroid spacing.
/// Exact on fields linear in either coordinate; 2*nx*ny - nx - ny rows.
Eigen::SparseMatrix<double> discrete_gradient_operator(const Grid2D& grid);

struct AdjointGradientResult {
  Eigen::VectorXd gradient; // d/d(ln k) of the u data misfit
  double misfit = 0.0;      // ||H_u u - u*||^2
  long linear_solves = 0;
};

/// Gradient of the state data misfit with respect to cell-wise ln k via
/// one forward and one adjoint solve.
AdjointGradientResult adjoint_gradient(const Grid2D& grid, const Eigen::VectorXd& k_cells,
                                       const BoundarySpec& bc, const std::vector<int>& u_cells,
                                       const Eigen::VectorXd& u_values);

// Generic matrix-free Levenberg-Marquardt over a residual whose Jacobian
// is available as apply/apply-transpose products. prepare(x) is called
// before the products are used at a new point.
struct LmOps {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  std::function<void(const Eigen::VectorXd&)> prepare;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> jacobian_apply;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> jacobian_apply_transpose;
};

struct LmResult {
  Eigen::VectorXd x;
  std::vector<double> objective_trajectory; // accepted objectives, strictly decreasing
  bool converged = false;
  bool stagnated = false;
  int iterations = 0;
};

LmResult lm_minimize(const LmOps& ops, const Eigen::VectorXd& x0, const MapConfig& config);

struct MapResult {
  Field k_hat;
  std::vector<double> objective_trajectory;
  bool converged = false;
  bool stagnated = false;
  int iterations = 0;
};

/// MAP estimate of the cell-wise conductivity: reduced-space Levenberg-
/// Marquardt over m = ln k for the stacked residual
///   [ H_u u(m) - u* ; H_K m - ln k* ; sqrt(gamma) L m ],
/// u(m) given by the TPFA constraint. Returns exp(m_hat).
MapResult map_estimate(const Grid2D& grid, const MeasurementSet& measurements,
                       const BoundarySpec& bc, const MapConfig& config);

} // namespace pinnflow
