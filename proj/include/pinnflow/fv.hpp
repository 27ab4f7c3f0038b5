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

#include "pinnflow/grid.hpp"

#include <Eigen/Sparse>

#include <functional>

namespace pinnflow {

/// One of: fixed value (Dirichlet), prescribed normal flux q = n.K grad(u)
/// (positive into the domain), or no-flow.
struct BoundaryCondition {
  enum class Kind { Dirichlet, NeumannFlux, NoFlow };
  Kind kind = Kind::NoFlow;
  std::function<double(const Eigen::Vector2d&)> value; // Dirichlet only
  double flux = 0.0;                                   // NeumannFlux only

  static BoundaryCondition dirichlet(double v);
  static BoundaryCondition dirichlet(std::function<double(const Eigen::Vector2d&)> fn);
  static BoundaryCondition neumann(double q);
  static BoundaryCondition no_flow();
};

struct BoundarySpec {
  BoundaryCondition x_min, x_max, y_min, y_max;

  const BoundaryCondition& edge(Edge e) const;
  bool has_dirichlet() const;

  /// u = 1 on x2 = 0, u = 0 on x2 = Ly, no-flow on the lateral sides.
  static BoundarySpec layered_flow();
  /// u = u0 on x1 = Lx, influx q on x1 = 0, no-flow top and bottom.
  static BoundarySpec lateral_influx(double u0, double q);
};

struct TpfaSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

/// Two-point flux approximation of -div(K grad u) with harmonic-mean face
/// transmissibilities by default (arithmetic mean is used inside the
/// nonlinear Picard loop where K varies smoothly).
enum class FaceAverage { Harmonic, Arithmetic };

TpfaSystem assemble_tpfa(const Grid2D& grid, const Eigen::VectorXd& k_cells,
                         const BoundarySpec& bc, FaceAverage avg = FaceAverage::Harmonic);

struct SolveStats {
  long linear_solves = 0;
};

/// Solves div(K grad u) = 0 on the grid. K must be strictly positive and
/// the boundary must contain at least one Dirichlet edge. The solution
/// satisfies the linear system to relative residual 1e-12.
Field fv_solve_linear(const Grid2D& grid, const Field& k_field, const BoundarySpec& bc,
                      SolveStats* stats = nullptr);

/// Net outflow per cell (flux balance); every cell of a converged solve
/// sums to zero up to roundoff.
Eigen::VectorXd cell_flux_balance(const Grid2D& grid, const Eigen::VectorXd& k_cells,
                                  const BoundarySpec& bc, const Eigen::VectorXd& u,
                                  FaceAverage avg = FaceAverage::Harmonic);

/// Total inflow through one boundary edge.
double boundary_inflow(const Grid2D& grid, const Eigen::VectorXd& k_cells, const BoundarySpec& bc,
                       const Eigen::VectorXd& u, Edge e, FaceAverage avg = FaceAverage::Harmonic);

/// x-directed flux through the vertical face column between cell columns
/// i and i+1 (positive toward +x1).
double cross_section_flux_x(const Grid2D& grid, const Eigen::VectorXd& k_cells,
                            const Eigen::VectorXd& u, int i_face,
                            FaceAverage avg = FaceAverage::Harmonic);

} // namespace pinnflow
