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
#include "pinnflow/van_genuchten.hpp"

#include <functional>
#include <vector>

namespace pinnflow {

struct PicardConfig {
  double damping = 0.5;
  double tolerance = 1e-8; // max pressure update
  int max_iterations = 500;
};

struct PicardReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> update_norms; // max-norm of each damped update
};

/// Solves div(K(u) grad u) = 0 by damped Picard iteration: K(u) frozen at
/// the current iterate (arithmetic face mean), linear TPFA solve,
/// under-relaxed update. Throws std::runtime_error when the iteration cap
/// is hit without convergence.
Field fv_solve_nonlinear(const Grid2D& grid, const std::function<double(double)>& K_of_u,
                         const BoundarySpec& bc, const PicardConfig& config = {},
                         double initial_guess = 0.0, PicardReport* report = nullptr);

/// The unsaturated-flow reference scenario: Dirichlet u0 at x1 = Lx,
/// influx q at x1 = 0, no-flow laterals, van Genuchten conductivity.
Field fv_solve_vangenuchten(const Grid2D& grid, const VanGenuchtenParams& params,
                            const PicardConfig& config = {}, PicardReport* report = nullptr);

} // namespace pinnflow
