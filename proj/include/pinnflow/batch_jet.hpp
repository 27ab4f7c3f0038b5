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

#include "pinnflow/jet.hpp"
#include "pinnflow/mlp.hpp"

#include <vector>

namespace pinnflow {

/// Batched jets over a block of B points, stored as one (units x C*B)
/// matrix per layer with component c occupying columns [c*B, (c+1)*B).
/// One GEMM then advances all components of all points at once.
struct BatchTrace {
  std::vector<Eigen::MatrixXd> a; // a[0] = seeds, a[l+1] = output of layer l
  std::vector<Eigen::MatrixXd> z; // pre-activations of hidden layers
  int points = 0;
};

inline auto jet_comp(Eigen::MatrixXd& m, int c, int b) { return m.middleCols(c * b, b); }
inline auto jet_comp(const Eigen::MatrixXd& m, int c, int b) { return m.middleCols(c * b, b); }

/// Seeds for a block of spatial points (2 x B), affinely mapped per
/// dimension. Returns a (2 x C*B) matrix.
Eigen::MatrixXd batch_spatial_seeds(const Eigen::Matrix2Xd& points, const Eigen::Vector2d& scale,
                                    const Eigen::Vector2d& offset, const JetSpec& spec);

/// Forward jet propagation over a block; the forward state lands in trace
/// and the returned reference points at the output components
/// (output_dim x C*B).
const Eigen::MatrixXd& batch_jet_forward(const MlpParams& params, Eigen::MatrixXd seeds,
                                         const JetSpec& spec, BatchTrace& trace);

/// Reverse pass over a recorded block; accumulates parameter gradients and
/// returns the adjoint of the seeds (input_dim x C*B).
Eigen::MatrixXd batch_jet_backward(const MlpParams& params, const BatchTrace& trace,
                                   const Eigen::MatrixXd& out_adjoint, const JetSpec& spec,
                                   MlpGradient& grad);

} // namespace pinnflow
