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
#include "pinnflow/jet.hpp"
#include "pinnflow/mlp.hpp"

#include <optional>
#include <vector>

namespace pinnflow {

enum class ProblemKind { LinearK, NonlinearKU };

/// Point observations entering the loss: coefficient and state samples,
/// Dirichlet boundary samples, and prescribed-flux samples with the
/// derivative direction they constrain.
struct MeasurementSet {
  std::vector<Eigen::Vector2d> k_points;
  Eigen::VectorXd k_values;
  std::vector<Eigen::Vector2d> u_points;
  Eigen::VectorXd u_values;
  std::vector<Eigen::Vector2d> dirichlet_points;
  Eigen::VectorXd dirichlet_values;
  std::vector<Eigen::Vector2d> neumann_points;
  Eigen::VectorXd neumann_values;
  std::vector<int> neumann_directions; // 0 or 1, the x-component the flux constrains

  int n_k() const { return static_cast<int>(k_points.size()); }
  int n_u() const { return static_cast<int>(u_points.size()); }
  int n_dirichlet() const { return static_cast<int>(dirichlet_points.size()); }
  int n_neumann() const { return static_cast<int>(neumann_points.size()); }

  /// Checks value/point count consistency and that every location lies in
  /// the closed domain (boundary samples on their declared segment).
  void validate(double Lx, double Ly) const;
};

/// Interior residual collocation points, plus boundary collocation for the
/// flux terms of the state-dependent problem (grouped by direction).
struct CollocationSet {
  std::vector<Eigen::Vector2d> interior;
  std::vector<Eigen::Vector2d> neumann_x1;
  std::vector<Eigen::Vector2d> neumann_x2;

  int n_interior() const { return static_cast<int>(interior.size()); }

  /// Interior points must lie strictly inside the domain; boundary groups
  /// on their edge pair.
  void validate(double Lx, double Ly) const;
};

/// Term toggles and weights of the composite loss. All weights default to
/// one, matching the unweighted means of the formulation.
struct LossSpec {
  ProblemKind kind = ProblemKind::LinearK;
  bool use_data_k = true;
  bool use_data_u = true;
  bool use_dirichlet = true;
  bool use_neumann = true;
  bool use_residual = true;
  double w_data_k = 1.0;
  double w_data_u = 1.0;
  double w_dirichlet = 1.0;
  double w_neumann = 1.0;
  double w_residual = 1.0;

  void validate() const;

  /// Convenience builder that drops every term with zero points.
  static LossSpec for_available(ProblemKind kind, const MeasurementSet& ms,
                                const CollocationSet& cs);
};

/// The trainable surrogate pair plus the input normalizations tying the
/// networks to the computational domain.
struct PinnProblem {
  ProblemKind kind = ProblemKind::LinearK;
  double Lx = 1.0;
  double Ly = 1.0;
  MlpParams u_net;
  MlpParams k_net;

  // Network spatial input = x_scale .* x + x_offset (per dimension).
  Eigen::Vector2d x_scale{1.0, 1.0};
  Eigen::Vector2d x_offset{0.0, 0.0};
  // Coefficient-network input normalization for the state-dependent case:
  // K-net input = k_in_scale * u + k_in_offset.
  double k_in_scale = 1.0;
  double k_in_offset = 0.0;
  // Prescribed influx matched by the x1-boundary flux term of the
  // state-dependent problem, in the problem's computational units.
  double neumann_q = 0.0;

  /// Sets the spatial map to send (0,Lx)x(0,Ly) onto [-1,1]^2.
  void normalize_spatial_inputs();

  /// Coefficient surrogate value: K_hat(x) for the space-dependent kind,
  /// K_hat(u_hat(x)) for the state-dependent kind.
  double k_surrogate(const Eigen::Vector2d& x) const;
  /// State-dependent coefficient surrogate evaluated directly at a state value.
  double k_of_u(double u) const;
  /// State surrogate value.
  double u_surrogate(const Eigen::Vector2d& x) const;

  /// Jet of the state surrogate in domain coordinates.
  Jet2 u_jet(const Eigen::Vector2d& x) const;
  /// Jet of the coefficient surrogate in domain coordinates.
  Jet2 k_jet(const Eigen::Vector2d& x) const;
};

/// Residual of div(K(x) grad u) at x, expanded as
/// grad(K).grad(u) + K laplace(u) from the two network jets.
double linear_residual(const PinnProblem& problem, const Eigen::Vector2d& x);

/// Lateral-boundary flux surrogate du/dx1 for the space-dependent problem.
/// x must lie on x1 = 0 or x1 = Lx.
double linear_neumann_flux(const PinnProblem& problem, const Eigen::Vector2d& x);

/// Residual of div(K(u) grad u) at x via exact composition through the
/// state network: K'(u)|grad u|^2 + K(u) laplace(u).
double nonlinear_residual(const PinnProblem& problem, const Eigen::Vector2d& x);

/// Flux surrogate -K(u) du/dx_direction; x must lie on the matching
/// boundary pair.
double nonlinear_neumann_flux(const PinnProblem& problem, const Eigen::Vector2d& x,
                              int direction);

/// Per-term unweighted means of the composite loss; total applies the
/// LossSpec weights.
struct LossBreakdown {
  double total = 0.0;
  double data_k = 0.0;
  double data_u = 0.0;
  double dirichlet = 0.0;
  double neumann = 0.0; // sum of the per-direction group means
  double residual = 0.0;
};

/// Reference loss assembly: straightforward serial summation over every
/// term. Throws std::invalid_argument when an enabled term has no points.
LossBreakdown assemble_loss(const PinnProblem& problem, const MeasurementSet& measurements,
                            const CollocationSet& collocation, const LossSpec& spec);

/// Relative L2 error in the integral form eps = sum((a-b)^2) / sum(b^2)
/// over cells (no square root), cell areas cancelling on uniform grids.
double relative_error(const Field& estimate, const Field& reference);

/// Same metric for a sampled curve (used for recovered K(u) against the
/// closure it approximates).
double relative_error_samples(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

struct ErrorReport {
  double eps_u = 0.0;
  double eps_k = 0.0;
  Field u_abs_error;
  Field k_abs_error;
};

struct RestartStats {
  double mean = 0.0;
  double stddev = 0.0; // population form (divide by N)
};

/// Population mean and standard deviation of restart errors.
RestartStats compute_restart_stats(const std::vector<double>& raw_errors);

} // namespace pinnflow
