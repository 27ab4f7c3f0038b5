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

#include "pinnflow/map_estimate.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace pinnflow {

namespace {

int locate_cell(const Grid2D& grid, const Eigen::Vector2d& p) {
  const int i = static_cast<int>(std::floor(p.x() / grid.hx()));
  const int j = static_cast<int>(std::floor(p.y() / grid.hy()));
  const int ci = std::clamp(i, 0, grid.nx - 1);
  const int cj = std::clamp(j, 0, grid.ny - 1);
  const int cell = grid.cell_index(ci, cj);
  if ((grid.centroid(cell) - p).norm() > 1e-9 * std::max(grid.hx(), grid.hy())) {
    throw std::invalid_argument("ObservationOperators: measurement not at a cell centroid");
  }
  return cell;
}

} // namespace

ObservationOperators ObservationOperators::from_measurements(const Grid2D& grid,
                                                             const MeasurementSet& ms) {
  ObservationOperators ops;
  std::vector<std::pair<int, double>> u_obs, k_obs;
  u_obs.reserve(ms.n_u());
  k_obs.reserve(ms.n_k());
  for (int i = 0; i < ms.n_u(); ++i) {
    u_obs.emplace_back(locate_cell(grid, ms.u_points[i]), ms.u_values[i]);
  }
  for (int i = 0; i < ms.n_k(); ++i) {
    if (ms.k_values[i] <= 0.0) {
      throw std::invalid_argument("ObservationOperators: K observations must be positive");
    }
    k_obs.emplace_back(locate_cell(grid, ms.k_points[i]), std::log(ms.k_values[i]));
  }
  // Canonical ordering makes the estimate independent of row permutations.
  std::sort(u_obs.begin(), u_obs.end());
  std::sort(k_obs.begin(), k_obs.end());
  ops.u_values.resize(static_cast<int>(u_obs.size()));
  for (std::size_t i = 0; i < u_obs.size(); ++i) {
    ops.u_cells.push_back(u_obs[i].first);
    ops.u_values[static_cast<int>(i)] = u_obs[i].second;
  }
  ops.lnk_values.resize(static_cast<int>(k_obs.size()));
  for (std::size_t i = 0; i < k_obs.size(); ++i) {
    ops.k_cells.push_back(k_obs[i].first);
    ops.lnk_values[static_cast<int>(i)] = k_obs[i].second;
  }
  return ops;
}

Eigen::SparseMatrix<double> discrete_gradient_operator(const Grid2D& grid) {
  const int rows = grid.x_face_count() + grid.y_face_count();
  Eigen::SparseMatrix<double> L(rows, grid.cell_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * rows);
  int row = 0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i + 1 < grid.nx; ++i) {
      triplets.emplace_back(row, grid.cell_index(i, j), -1.0 / grid.hx());
      triplets.emplace_back(row, grid.cell_index(i + 1, j), 1.0 / grid.hx());
      ++row;
    }
  }
  for (int j = 0; j + 1 < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      triplets.emplace_back(row, grid.cell_index(i, j), -1.0 / grid.hy());
      triplets.emplace_back(row, grid.cell_index(i, j + 1), 1.0 / grid.hy());
      ++row;
    }
  }
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

namespace {

// Directional derivative of the TPFA residual l(u,m) = A(m)u - b(m) with
// respect to m = ln k. Harmonic face mean: dH/dm_a = H^2 / (2 k_a);
// Dirichlet half-cell transmissibility: dT/dm_a = T.
struct TpfaDerivative {
  const Grid2D& grid;
  const BoundarySpec& bc;
  const Eigen::VectorXd& k;
  const Eigen::VectorXd& u;

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.cell_count());
    face_loop([&](int a, int b, double coef, double du) {
      const double h = 2.0 * k[a] * k[b] / (k[a] + k[b]);
      const double contrib =
          coef * h * h * du * (v[a] / (2.0 * k[a]) + v[b] / (2.0 * k[b]));
      out[a] += contrib;
      out[b] -= contrib;
    });
    dirichlet_loop([&](int a, double t, double residual) { out[a] += t * residual * v[a]; });
    return out;
  }

  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& psi) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.cell_count());
    face_loop([&](int a, int b, double coef, double du) {
      const double h = 2.0 * k[a] * k[b] / (k[a] + k[b]);
      const double dpsi = psi[a] - psi[b];
      out[a] += coef * h * h / (2.0 * k[a]) * du * dpsi;
      out[b] += coef * h * h / (2.0 * k[b]) * du * dpsi;
    });
    dirichlet_loop([&](int a, double t, double residual) { out[a] += t * residual * psi[a]; });
    return out;
  }

private:
  template <class F>
  void face_loop(F&& f) const {
    const double cx = grid.hy() / grid.hx();
    const double cy = grid.hx() / grid.hy();
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) {
        const int c = grid.cell_index(i, j);
        if (i + 1 < grid.nx) {
          f(c, grid.cell_index(i + 1, j), cx, u[c] - u[grid.cell_index(i + 1, j)]);
        }
        if (j + 1 < grid.ny) {
          f(c, grid.cell_index(i, j + 1), cy, u[c] - u[grid.cell_index(i, j + 1)]);
        }
      }
    }
  }

  template <class F>
  void dirichlet_loop(F&& f) const {
    auto visit = [&](Edge e, int cell, const Eigen::Vector2d& mid, double t_coef) {
      const BoundaryCondition& cond = bc.edge(e);
      if (cond.kind != BoundaryCondition::Kind::Dirichlet) return;
      f(cell, t_coef * k[cell], u[cell] - cond.value(mid));
    };
    const double tx = 2.0 * grid.hy() / grid.hx();
    const double ty = 2.0 * grid.hx() / grid.hy();
    for (int j = 0; j < grid.ny; ++j) {
      visit(Edge::XMin, grid.cell_index(0, j), {0.0, (j + 0.5) * grid.hy()}, tx);
      visit(Edge::XMax, grid.cell_index(grid.nx - 1, j), {grid.Lx, (j + 0.5) * grid.hy()}, tx);
    }
    for (int i = 0; i < grid.nx; ++i) {
      visit(Edge::YMin, grid.cell_index(i, 0), {(i + 0.5) * grid.hx(), 0.0}, ty);
      visit(Edge::YMax, grid.cell_index(i, grid.ny - 1), {(i + 0.5) * grid.hx(), grid.Ly}, ty);
    }
  }
};

Eigen::VectorXd gather(const Eigen::VectorXd& u, const std::vector<int>& cells) {
  Eigen::VectorXd out(static_cast<int>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) out[static_cast<int>(i)] = u[cells[i]];
  return out;
}

Eigen::VectorXd scatter(const Eigen::VectorXd& w, const std::vector<int>& cells, int n) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < cells.size(); ++i) out[cells[i]] += w[static_cast<int>(i)];
  return out;
}

} // namespace

AdjointGradientResult adjoint_gradient(const Grid2D& grid, const Eigen::VectorXd& k_cells,
                                       const BoundarySpec& bc, const std::vector<int>& u_cells,
                                       const Eigen::VectorXd& u_values) {
  AdjointGradientResult result;
  TpfaSystem sys = assemble_tpfa(grid, k_cells, bc);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(sys.matrix);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("adjoint_gradient: factorization failed");
  }
  Eigen::VectorXd u = solver.solve(sys.rhs);
  ++result.linear_solves;

  Eigen::VectorXd misfit = gather(u, u_cells) - u_values;
  result.misfit = misfit.squaredNorm();

  Eigen::VectorXd psi = solver.solve(scatter(misfit, u_cells, grid.cell_count()));
  ++result.linear_solves;

  TpfaDerivative deriv{grid, bc, k_cells, u};
  // d/dm ||H u - u*||^2 = -2 (dl/dm)^T A^{-1} H^T (H u - u*)
  result.gradient = -2.0 * deriv.apply_transpose(psi);
  return result;
}

LmResult lm_minimize(const LmOps& ops, const Eigen::VectorXd& x0, const MapConfig& config) {
  if (config.lm_initial_damping <= 0.0 || config.lm_increase <= 1.0 ||
      config.lm_decrease <= 0.0) {
    throw std::invalid_argument("lm_minimize: invalid damping schedule");
  }
  LmResult result;
  Eigen::VectorXd x = x0;
  Eigen::VectorXd r = ops.residual(x);
  double objective = r.squaredNorm();
  result.objective_trajectory.push_back(objective);
  double damping = config.lm_initial_damping;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    ops.prepare(x);
    Eigen::VectorXd rhs = -ops.jacobian_apply_transpose(r);

    bool accepted = false;
    while (damping <= config.lm_damping_max) {
      // CG on the damped normal equations (J^T J + damping I) delta = rhs.
      Eigen::VectorXd delta = Eigen::VectorXd::Zero(x.size());
      Eigen::VectorXd res = rhs;
      Eigen::VectorXd p = res;
      double rr = res.squaredNorm();
      const double rhs_norm = std::sqrt(rr);
      if (rhs_norm > 0.0) {
        for (int cg = 0; cg < config.cg_max_iterations; ++cg) {
          Eigen::VectorXd ap = ops.jacobian_apply_transpose(ops.jacobian_apply(p)) + damping * p;
          const double alpha = rr / p.dot(ap);
          delta += alpha * p;
          res -= alpha * ap;
          const double rr_new = res.squaredNorm();
          if (std::sqrt(rr_new) <= config.cg_tolerance * rhs_norm) break;
          p = res + (rr_new / rr) * p;
          rr = rr_new;
        }
      }

      Eigen::VectorXd x_try = x + delta;
      Eigen::VectorXd r_try = ops.residual(x_try);
      const double obj_try = r_try.squaredNorm();
      if (obj_try < objective) {
        const double drop = (objective - obj_try) / std::max(objective, 1e-300);
        x = std::move(x_try);
        r = std::move(r_try);
        objective = obj_try;
        result.objective_trajectory.push_back(objective);
        damping = std::max(damping * config.lm_decrease, 1e-16);
        accepted = true;
        result.iterations = iter + 1;
        if (drop <= config.objective_tolerance) {
          result.converged = true;
          result.x = x;
          return result;
        }
        break;
      }
      damping *= config.lm_increase;
    }
    if (!accepted) {
      result.stagnated = true;
      break;
    }
  }
  result.converged = !result.stagnated;
  result.x = x;
  return result;
}

MapResult map_estimate(const Grid2D& grid, const MeasurementSet& measurements,
                       const BoundarySpec& bc, const MapConfig& config) {
  if (config.gamma_reg < 0.0) throw std::invalid_argument("map_estimate: gamma_reg must be >= 0");
  const int n = grid.cell_count();
  ObservationOperators obs = ObservationOperators::from_measurements(grid, measurements);
  Eigen::SparseMatrix<double> L = discrete_gradient_operator(grid);
  Eigen::SparseMatrix<double> Lt = L.transpose();
  const double sqrt_gamma = std::sqrt(config.gamma_reg);
  const int n_u = static_cast<int>(obs.u_cells.size());
  const int n_k = static_cast<int>(obs.k_cells.size());
  const int n_l = static_cast<int>(L.rows());

  // State shared across the LM callbacks: factorization of A(m) plus the
  // matching conductivity and solution.
  struct SolverState {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    Eigen::VectorXd k;
    Eigen::VectorXd u;
  };
  auto state = std::make_shared<SolverState>();

  auto solve_state = [state, &grid, &bc](const Eigen::VectorXd& m) {
    state->k = m.array().exp();
    TpfaSystem sys = assemble_tpfa(grid, state->k, bc);
    state->solver.compute(sys.matrix);
    if (state->solver.info() != Eigen::Success) {
      throw std::runtime_error("map_estimate: TPFA factorization failed");
    }
    state->u = state->solver.solve(sys.rhs);
  };

  LmOps ops;
  ops.residual = [=](const Eigen::VectorXd& m) {
    solve_state(m);
    Eigen::VectorXd r(n_u + n_k + n_l);
    r.segment(0, n_u) = gather(state->u, obs.u_cells) - obs.u_values;
    r.segment(n_u, n_k) = gather(m, obs.k_cells) - obs.lnk_values;
    r.segment(n_u + n_k, n_l) = sqrt_gamma * (L * m);
    return r;
  };
  ops.prepare = [=](const Eigen::VectorXd& m) {
    solve_state(m); // refresh factorization at the Jacobian point
  };
  ops.jacobian_apply = [=, &grid, &bc](const Eigen::VectorXd& v) {
    TpfaDerivative deriv{grid, bc, state->k, state->u};
    Eigen::VectorXd udot = state->solver.solve((-deriv.apply(v)).eval());
    Eigen::VectorXd out(n_u + n_k + n_l);
    out.segment(0, n_u) = gather(udot, obs.u_cells);
    out.segment(n_u, n_k) = gather(v, obs.k_cells);
    out.segment(n_u + n_k, n_l) = sqrt_gamma * (L * v);
    return out;
  };
  ops.jacobian_apply_transpose = [=, &grid, &bc](const Eigen::VectorXd& w) {
    TpfaDerivative deriv{grid, bc, state->k, state->u};
    Eigen::VectorXd psi = state->solver.solve(scatter(w.segment(0, n_u), obs.u_cells, n));
    Eigen::VectorXd out = -deriv.apply_transpose(psi);
    out += scatter(w.segment(n_u, n_k), obs.k_cells, n);
    out += sqrt_gamma * (Lt * w.segment(n_u + n_k, n_l));
    return out;
  };

  double m0 = 0.0;
  if (n_k > 0) m0 = obs.lnk_values.mean();
  LmResult lm = lm_minimize(ops, Eigen::VectorXd::Constant(n, m0), config);

  MapResult result;
  result.k_hat = Field(grid, lm.x.array().exp());
  result.objective_trajectory = std::move(lm.objective_trajectory);
  result.converged = lm.converged;
  result.stagnated = lm.stagnated;
  result.iterations = lm.iterations;
  return result;
}

} // namespace pinnflow
