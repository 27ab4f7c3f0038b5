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

#include "pinnflow/fv.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>

#include <random>

using namespace pinnflow;

TEST_CASE("uniform conductivity reproduces the linear profile exactly") {
  Grid2D grid(32, 32);
  Field k(grid, 2.5);
  Field u = fv_solve_linear(grid, k, BoundarySpec::layered_flow());
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double expected = 1.0 - grid.centroid(i, j).y();
      CHECK(std::abs(u(i, j) - expected) <= 1e-10);
    }
  }
}

TEST_CASE("two-layer flux equals the series-resistance value") {
  Grid2D grid(16, 16);
  const double k1 = 0.5, k2 = 8.0;
  Field k(grid);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      k(i, j) = j < grid.ny / 2 ? k1 : k2;
    }
  }
  BoundarySpec bc = BoundarySpec::layered_flow();
  Field u = fv_solve_linear(grid, k, bc);
  // Unit head drop over unit height: flux = harmonic mean of the layers.
  const double expected = 2.0 * k1 * k2 / (k1 + k2);
  const double inflow = boundary_inflow(grid, k.values, bc, u.values, Edge::YMin);
  CHECK(std::abs(inflow - expected) <= 1e-8 * expected);
}

TEST_CASE("per-cell flux balance vanishes") {
  Grid2D grid(24, 24);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Field k(grid);
  for (int c = 0; c < grid.cell_count(); ++c) k.values[c] = std::exp(normal(rng));
  BoundarySpec bc = BoundarySpec::layered_flow();
  Field u = fv_solve_linear(grid, k, bc);
  Eigen::VectorXd balance = cell_flux_balance(grid, k.values, bc, u.values);
  const double boundary_scale =
      std::abs(boundary_inflow(grid, k.values, bc, u.values, Edge::YMin));
  CHECK(balance.cwiseAbs().maxCoeff() <= 1e-10 * boundary_scale);
}

TEST_CASE("TPFA matrix is symmetric positive definite") {
  Grid2D grid(12, 9);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd k(grid.cell_count());
  for (int c = 0; c < grid.cell_count(); ++c) k[c] = std::exp(normal(rng));
  TpfaSystem sys = assemble_tpfa(grid, k, BoundarySpec::layered_flow());
  Eigen::MatrixXd dense = sys.matrix;
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("discrete maximum principle holds") {
  Grid2D grid(20, 20);
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.5);
  Field k(grid);
  for (int c = 0; c < grid.cell_count(); ++c) k.values[c] = std::exp(normal(rng));
  Field u = fv_solve_linear(grid, k, BoundarySpec::layered_flow());
  CHECK(u.values.minCoeff() >= 0.0 - 1e-12);
  CHECK(u.values.maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("invalid inputs are rejected") {
  Grid2D grid(4, 4);
  SUBCASE("nonpositive conductivity") {
    Eigen::VectorXd k = Eigen::VectorXd::Ones(grid.cell_count());
    k[3] = 0.0;
    CHECK_THROWS_AS(assemble_tpfa(grid, k, BoundarySpec::layered_flow()),
                    std::invalid_argument);
  }
  SUBCASE("all-Neumann boundary") {
    BoundarySpec bc; // defaults to no-flow everywhere
    Eigen::VectorXd k = Eigen::VectorXd::Ones(grid.cell_count());
    CHECK_THROWS_AS(assemble_tpfa(grid, k, bc), std::invalid_argument);
  }
}
