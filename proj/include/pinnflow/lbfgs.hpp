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

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace pinnflow {

/// Objective callback: fills the gradient and returns the function value.
using ObjectiveWithGradient =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsConfig {
  int memory = 10;
  int max_iterations = 50000;
  /// Gradient stopping threshold, relative: the run stops when
  /// ||g|| <= grad_tolerance * max(1, ||g0||).
  double grad_tolerance = 1e-9;
  /// Relative loss decrease over a 5-iteration window below which the run
  /// stops. Zero still triggers on five fully stagnant iterations.
  double loss_change_tolerance = 0.0;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_steps = 40;
};

enum class TerminationReason { GradientTolerance, LossChange, MaxIterations, LineSearchFailure };

std::string to_string(TerminationReason reason);

struct TrainReport {
  int iterations = 0;
  std::vector<double> loss_history;      // loss at x0 and after each accepted step
  std::vector<double> grad_norm_history; // matching gradient norms
  double final_grad_norm = 0.0;
  TerminationReason reason = TerminationReason::MaxIterations;
  double wall_seconds = 0.0;
  long objective_evaluations = 0;

  void save_csv(const std::string& path) const;
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double loss = 0.0;
  TrainReport report;
};

struct LineSearchResult {
  bool success = false;
  double step = 0.0;
  double f = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
  int evaluations = 0;
};

/// Strong Wolfe line search (bracket + zoom with cubic interpolation).
/// Requires a descent direction; throws std::invalid_argument otherwise.
/// On success the returned step satisfies
///   f(x+a d) <= f(x) + c1 a g.d   and   |g(x+a d).d| <= c2 |g.d|.
LineSearchResult wolfe_line_search(const ObjectiveWithGradient& objective,
                                   const Eigen::VectorXd& x, double f0,
                                   const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                   const LbfgsConfig& config, double initial_step);

/// Limited-memory BFGS (two-loop recursion) with strong Wolfe line search.
/// Deterministic: identical inputs give identical trajectories. Returns the
/// best iterate seen even when the line search fails.
/// Throws std::invalid_argument when the objective is not finite at x0.
LbfgsResult lbfgs_minimize(const ObjectiveWithGradient& objective, const Eigen::VectorXd& x0,
                           const LbfgsConfig& config = {});

} // namespace pinnflow
