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

#include "pinnflow/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnflow {

namespace {

constexpr double kBoundaryTol = 1e-10;

bool on_pair(double v, double lo, double hi) {
  return std::abs(v - lo) <= kBoundaryTol * std::max(1.0, hi - lo) ||
         std::abs(v - hi) <= kBoundaryTol * std::max(1.0, hi - lo);
}

void check_inside(const std::vector<Eigen::Vector2d>& pts, double Lx, double Ly,
                  const char* what) {
  for (const auto& p : pts) {
    if (p.x() < -kBoundaryTol || p.x() > Lx + kBoundaryTol || p.y() < -kBoundaryTol ||
        p.y() > Ly + kBoundaryTol) {
      throw std::invalid_argument(std::string("MeasurementSet: ") + what +
                                  " location outside the closed domain");
    }
  }
}

} // namespace

void MeasurementSet::validate(double Lx, double Ly) const {
  if (k_values.size() != n_k() || u_values.size() != n_u() ||
      dirichlet_values.size() != n_dirichlet() || neumann_values.size() != n_neumann() ||
      static_cast<int>(neumann_directions.size()) != n_neumann()) {
    throw std::invalid_argument("MeasurementSet: point/value count mismatch");
  }
  check_inside(k_points, Lx, Ly, "K");
  check_inside(u_points, Lx, Ly, "u");
  check_inside(dirichlet_points, Lx, Ly, "Dirichlet");
  check_inside(neumann_points, Lx, Ly, "Neumann");
  for (int i = 0; i < n_neumann(); ++i) {
    const int d = neumann_directions[i];
    if (d != 0 && d != 1) {
      throw std::invalid_argument("MeasurementSet: Neumann direction must be 0 or 1");
    }
    const Eigen::Vector2d& p = neumann_points[i];
    const bool ok = (d == 0) ? on_pair(p.x(), 0.0, Lx) : on_pair(p.y(), 0.0, Ly);
    if (!ok) {
      throw std::invalid_argument("MeasurementSet: Neumann sample off its declared boundary");
    }
  }
}

void LossSpec::validate() const {
  if (!(use_data_k || use_data_u || use_dirichlet || use_neumann || use_residual)) {
    throw std::invalid_argument("LossSpec: at least one term must be enabled");
  }
  if (w_data_k < 0 || w_data_u < 0 || w_dirichlet < 0 || w_neumann < 0 || w_residual < 0) {
    throw std::invalid_argument("LossSpec: weights must be non-negative");
  }
}

LossSpec LossSpec::for_available(ProblemKind kind, const MeasurementSet& ms,
                                 const CollocationSet& cs) {
  LossSpec spec;
  spec.kind = kind;
  spec.use_data_k = ms.n_k() > 0;
  spec.use_data_u = ms.n_u() > 0;
  spec.use_dirichlet = ms.n_dirichlet() > 0;
  spec.use_neumann = kind == ProblemKind::LinearK
                         ? ms.n_neumann() > 0
                         : !cs.neumann_x1.empty() || !cs.neumann_x2.empty();
  spec.use_residual = cs.n_interior() > 0;
  spec.validate();
  return spec;
}

void PinnProblem::normalize_spatial_inputs() {
  x_scale = Eigen::Vector2d(2.0 / Lx, 2.0 / Ly);
  x_offset = Eigen::Vector2d(-1.0, -1.0);
}

double PinnProblem::u_surrogate(const Eigen::Vector2d& x) const {
  Eigen::VectorXd mapped = x_scale.cwiseProduct(x) + x_offset;
  return mlp_forward(u_net, mapped);
}

double PinnProblem::k_of_u(double u) const {
  Eigen::VectorXd in(1);
  in[0] = k_in_scale * u + k_in_offset;
  return mlp_forward(k_net, in);
}

double PinnProblem::k_surrogate(const Eigen::Vector2d& x) const {
  if (kind == ProblemKind::LinearK) {
    Eigen::VectorXd mapped = x_scale.cwiseProduct(x) + x_offset;
    return mlp_forward(k_net, mapped);
  }
  return k_of_u(u_surrogate(x));
}

Jet2 PinnProblem::u_jet(const Eigen::Vector2d& x) const {
  JetSpec spec{2, JetMode::Full};
  Eigen::MatrixXd seeds = affine_spatial_seeds(x, x_scale, x_offset, spec);
  Eigen::MatrixXd out = mlp_jet_forward(u_net, seeds, spec);
  Jet2 jet;
  jet.value = out(0, 0);
  jet.grad = out.row(0).segment(1, 2).transpose();
  jet.hess.resize(2, 2);
  jet.hess(0, 0) = out(0, spec.hess_col(0, 0));
  jet.hess(0, 1) = jet.hess(1, 0) = out(0, spec.hess_col(0, 1));
  jet.hess(1, 1) = out(0, spec.hess_col(1, 1));
  return jet;
}

Jet2 PinnProblem::k_jet(const Eigen::Vector2d& x) const {
  JetSpec spec{2, JetMode::Full};
  if (kind == ProblemKind::LinearK) {
    Eigen::MatrixXd seeds = affine_spatial_seeds(x, x_scale, x_offset, spec);
    Eigen::MatrixXd out = mlp_jet_forward(k_net, seeds, spec);
    Jet2 jet;
    jet.value = out(0, 0);
    jet.grad = out.row(0).segment(1, 2).transpose();
    jet.hess.resize(2, 2);
    jet.hess(0, 0) = out(0, spec.hess_col(0, 0));
    jet.hess(0, 1) = jet.hess(1, 0) = out(0, spec.hess_col(0, 1));
    jet.hess(1, 1) = out(0, spec.hess_col(1, 1));
    return jet;
  }
  // Chain the state jet through the scalar-input coefficient network.
  Jet2 u = u_jet(x);
  Eigen::MatrixXd seeds(1, spec.comps());
  seeds(0, 0) = k_in_scale * u.value + k_in_offset;
  seeds(0, spec.grad_col(0)) = k_in_scale * u.grad[0];
  seeds(0, spec.grad_col(1)) = k_in_scale * u.grad[1];
  seeds(0, spec.hess_col(0, 0)) = k_in_scale * u.hess(0, 0);
  seeds(0, spec.hess_col(0, 1)) = k_in_scale * u.hess(0, 1);
  seeds(0, spec.hess_col(1, 1)) = k_in_scale * u.hess(1, 1);
  Eigen::MatrixXd out = mlp_jet_forward(k_net, seeds, spec);
  Jet2 jet;
  jet.value = out(0, 0);
  jet.grad = out.row(0).segment(1, 2).transpose();
  jet.hess.resize(2, 2);
  jet.hess(0, 0) = out(0, spec.hess_col(0, 0));
  jet.hess(0, 1) = jet.hess(1, 0) = out(0, spec.hess_col(0, 1));
  jet.hess(1, 1) = out(0, spec.hess_col(1, 1));
  return jet;
}

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string(what) + ": non-finite jet component");
  }
}

} // namespace

double linear_residual(const PinnProblem& problem, const Eigen::Vector2d& x) {
  Jet2 u = problem.u_jet(x);
  Jet2 k = problem.k_jet(x);
  const double r = k.grad.dot(u.grad) + k.value * (u.hess(0, 0) + u.hess(1, 1));
  check_finite(r, "linear_residual");
  return r;
}

double linear_neumann_flux(const PinnProblem& problem, const Eigen::Vector2d& x) {
  if (!on_pair(x.x(), 0.0, problem.Lx)) {
    throw std::invalid_argument("linear_neumann_flux: point not on a lateral boundary");
  }
  return problem.u_jet(x).grad[0];
}

double nonlinear_residual(const PinnProblem& problem, const Eigen::Vector2d& x) {
  Jet2 u = problem.u_jet(x);
  Jet2 ku = problem.k_jet(x); // K(u(x)) composed: grad = K'(u) grad u
  const double r = ku.grad.dot(u.grad) + ku.value * (u.hess(0, 0) + u.hess(1, 1));
  check_finite(r, "nonlinear_residual");
  return r;
}

double nonlinear_neumann_flux(const PinnProblem& problem, const Eigen::Vector2d& x,
                              int direction) {
  if (direction != 0 && direction != 1) {
    throw std::invalid_argument("nonlinear_neumann_flux: direction must be 0 or 1");
  }
  const bool ok = (direction == 0) ? on_pair(x.x(), 0.0, problem.Lx)
                                   : on_pair(x.y(), 0.0, problem.Ly);
  if (!ok) {
    throw std::invalid_argument("nonlinear_neumann_flux: point off the matching boundary");
  }
  Jet2 u = problem.u_jet(x);
  const double k = problem.k_of_u(u.value);
  return -k * u.grad[direction];
}

LossBreakdown assemble_loss(const PinnProblem& problem, const MeasurementSet& measurements,
                            const CollocationSet& collocation, const LossSpec& spec) {
  spec.validate();
  measurements.validate(problem.Lx, problem.Ly);
  LossBreakdown out;

  auto require = [](bool nonempty, const char* term) {
    if (!nonempty) {
      throw std::invalid_argument(std::string("assemble_loss: enabled ") + term +
                                  " term has no points");
    }
  };

  if (spec.use_data_k) {
    require(measurements.n_k() > 0, "data-K");
    double sum = 0.0;
    for (int i = 0; i < measurements.n_k(); ++i) {
      const double d = problem.k_surrogate(measurements.k_points[i]) - measurements.k_values[i];
      sum += d * d;
    }
    out.data_k = sum / measurements.n_k();
  }
  if (spec.use_data_u) {
    require(measurements.n_u() > 0, "data-u");
    double sum = 0.0;
    for (int i = 0; i < measurements.n_u(); ++i) {
      const double d = problem.u_surrogate(measurements.u_points[i]) - measurements.u_values[i];
      sum += d * d;
    }
    out.data_u = sum / measurements.n_u();
  }
  if (spec.use_dirichlet) {
    require(measurements.n_dirichlet() > 0, "Dirichlet");
    double sum = 0.0;
    for (int i = 0; i < measurements.n_dirichlet(); ++i) {
      const double d =
          problem.u_surrogate(measurements.dirichlet_points[i]) - measurements.dirichlet_values[i];
      sum += d * d;
    }
    out.dirichlet = sum / measurements.n_dirichlet();
  }
  if (spec.use_neumann) {
    if (problem.kind == ProblemKind::LinearK) {
      require(measurements.n_neumann() > 0, "Neumann");
      double sum = 0.0;
      for (int i = 0; i < measurements.n_neumann(); ++i) {
        const double d = linear_neumann_flux(problem, measurements.neumann_points[i]) -
                         measurements.neumann_values[i];
        sum += d * d;
      }
      out.neumann = sum / measurements.n_neumann();
    } else {
      require(!collocation.neumann_x1.empty() || !collocation.neumann_x2.empty(), "Neumann");
      double term = 0.0;
      if (!collocation.neumann_x1.empty()) {
        double sum = 0.0;
        for (const auto& p : collocation.neumann_x1) {
          const double d = nonlinear_neumann_flux(problem, p, 0) - problem.neumann_q;
          sum += d * d;
        }
        term += sum / static_cast<double>(collocation.neumann_x1.size());
      }
      if (!collocation.neumann_x2.empty()) {
        double sum = 0.0;
        for (const auto& p : collocation.neumann_x2) {
          const double d = nonlinear_neumann_flux(problem, p, 1);
          sum += d * d;
        }
        term += sum / static_cast<double>(collocation.neumann_x2.size());
      }
      out.neumann = term;
    }
  }
  if (spec.use_residual) {
    require(collocation.n_interior() > 0, "residual");
    double sum = 0.0;
    for (const auto& p : collocation.interior) {
      const double f = problem.kind == ProblemKind::LinearK ? linear_residual(problem, p)
                                                            : nonlinear_residual(problem, p);
      sum += f * f;
    }
    out.residual = sum / collocation.n_interior();
  }

  out.total = spec.w_data_k * out.data_k + spec.w_data_u * out.data_u +
              spec.w_dirichlet * out.dirichlet + spec.w_neumann * out.neumann +
              spec.w_residual * out.residual;
  return out;
}

double relative_error(const Field& estimate, const Field& reference) {
  if (!(estimate.grid == reference.grid)) {
    throw std::invalid_argument("relative_error: fields on different grids");
  }
  const double denom = reference.values.squaredNorm();
  if (denom == 0.0) {
    throw std::invalid_argument("relative_error: reference field has zero norm");
  }
  return (estimate.values - reference.values).squaredNorm() / denom;
}

double relative_error_samples(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size()) {
    throw std::invalid_argument("relative_error_samples: size mismatch");
  }
  const double denom = reference.squaredNorm();
  if (denom == 0.0) {
    throw std::invalid_argument("relative_error_samples: reference has zero norm");
  }
  return (estimate - reference).squaredNorm() / denom;
}

RestartStats compute_restart_stats(const std::vector<double>& raw_errors) {
  if (raw_errors.empty()) {
    throw std::invalid_argument("compute_restart_stats: empty input");
  }
  const double n = static_cast<double>(raw_errors.size());
  double mean = 0.0;
  for (double e : raw_errors) mean += e;
  mean /= n;
  double var = 0.0;
  for (double e : raw_errors) var += (e - mean) * (e - mean);
  var /= n; // population formula
  return RestartStats{mean, std::sqrt(var)};
}

} // namespace pinnflow
