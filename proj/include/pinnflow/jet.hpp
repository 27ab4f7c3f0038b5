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

#include "pinnflow/mlp.hpp"

#include <Eigen/Dense>

namespace pinnflow {

/// Second-order jet of a scalar network output: value, gradient and
/// Hessian with respect to the evaluation point. The Hessian is stored
/// fully and is exactly symmetric.
struct Jet2 {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

/// Exact gradient of a scalar functional with respect to one network's
/// parameters, in the flat layout of MlpParams::flatten().
struct ParamGradient {
  Eigen::VectorXd flat;
  double norm() const { return flat.norm(); }
};

/// Which jet components are propagated. Value-only evaluations skip the
/// gradient and Hessian blocks entirely.
enum class JetMode { Value, Gradient, Full };

struct JetSpec {
  int jet_dim = 2;
  JetMode mode = JetMode::Full;

  int n_grad() const { return mode == JetMode::Value ? 0 : jet_dim; }
  int n_hess() const { return mode == JetMode::Full ? jet_dim * (jet_dim + 1) / 2 : 0; }
  /// Total component count: value + gradient + packed upper-triangle Hessian.
  int comps() const { return 1 + n_grad() + n_hess(); }
  /// Column index of gradient direction d.
  int grad_col(int d) const { return 1 + d; }
  /// Column index of Hessian entry (i,j), i <= j, packed row-wise.
  int hess_col(int i, int j) const;
};

/// Stored forward state of one jet evaluation, consumed by the reverse pass.
struct JetTrace {
  std::vector<Eigen::MatrixXd> a; // a[0] = input seeds, a[l+1] = output of layer l
  std::vector<Eigen::MatrixXd> z; // pre-activations of hidden layers
};

/// Per-layer parameter gradient accumulator for one network.
struct MlpGradient {
  std::vector<Eigen::MatrixXd> weight_grads;
  std::vector<Eigen::VectorXd> bias_grads;

  explicit MlpGradient(const MlpParams& params);
  void set_zero();
  Eigen::VectorXd flatten() const;
};

/// Seed jets for a spatial evaluation point, one row per network input:
/// value x_d, unit gradient along direction d, zero Hessian.
Eigen::MatrixXd spatial_seeds(const Eigen::VectorXd& x, const JetSpec& spec);

/// Seed jets for an affinely mapped point: value scale_d*x_d + offset_d,
/// gradient scale_d along direction d, zero Hessian.
Eigen::MatrixXd affine_spatial_seeds(const Eigen::VectorXd& x, const Eigen::VectorXd& scale,
                                     const Eigen::VectorXd& offset, const JetSpec& spec);

/// Propagates input jets through the network layer by layer (chain rule on
/// value/gradient/Hessian triples). Returns the output jets, one row per
/// network output. When trace is non-null the forward state is recorded
/// for a later reverse pass.
Eigen::MatrixXd mlp_jet_forward(const MlpParams& params, const Eigen::MatrixXd& seeds,
                                const JetSpec& spec, JetTrace* trace = nullptr);

/// Reverse pass over a recorded jet evaluation. out_adjoint holds the
/// sensitivities of some scalar with respect to every output jet
/// component. Parameter gradients accumulate into grad; the return value
/// is the adjoint of the input seeds (used to chain composed networks).
Eigen::MatrixXd mlp_jet_backward(const MlpParams& params, const JetTrace& trace,
                                 const Eigen::MatrixXd& out_adjoint, const JetSpec& spec,
                                 MlpGradient& grad);

/// Value, gradient and Hessian of a scalar network at x. The value equals
/// mlp_forward(params, x) bit for bit.
Jet2 eval_jet(const MlpParams& params, const Eigen::VectorXd& x);

} // namespace pinnflow
