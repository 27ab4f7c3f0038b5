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

#include "pinnflow/richards.hpp"

#include <Eigen/SparseCholesky>

#include <stdexcept>

namespace pinnflow {

Field fv_solve_nonlinear(const Grid2D& grid, const std::function<double(double)>& K_of_u,
                         const BoundarySpec& bc, const PicardConfig& config,
                         double initial_guess, PicardReport* report) {
  const int n = grid.cell_count();
  Eigen::VectorXd u = Eigen::VectorXd::Constant(n, initial_guess);
  Eigen::VectorXd k(n);

  PicardReport local;
  PicardReport& rep = report ? *report : local;
  rep = PicardReport{};

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    for (int c = 0; c < n; ++c) {
      k[c] = K_of_u(u[c]);
    }
    if ((k.array() <= 0.0).all()) {
      throw std::runtime_error("fv_solve_nonlinear: K(u) vanished everywhere");
    }
    TpfaSystem sys = assemble_tpfa(grid, k, bc, FaceAverage::Arithmetic);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sys.matrix);
    if (solver.info() != Eigen::Success) {
      throw std::runtime_error("fv_solve_nonlinear: factorization failed");
    }
    Eigen::VectorXd u_lin = solver.solve(sys.rhs);
    Eigen::VectorXd du = config.damping * (u_lin - u);
    u += du;
    const double update = du.cwiseAbs().maxCoeff();
    rep.update_norms.push_back(update);
    rep.iterations = iter + 1;
    if (update <= config.tolerance) {
      rep.converged = true;
      return Field(grid, std::move(u));
    }
  }
  throw std::runtime_error("fv_solve_nonlinear: Picard iteration did not converge");
}

Field fv_solve_vangenuchten(const Grid2D& grid, const VanGenuchtenParams& params,
                            const PicardConfig& config, PicardReport* report) {
  params.validate();
  BoundarySpec bc = BoundarySpec::lateral_influx(params.u0, params.q);
  auto K = [&params](double u) { return van_genuchten_K(u, params); };
  return fv_solve_nonlinear(grid, K, bc, config, params.u0, report);
}

} // namespace pinnflow
