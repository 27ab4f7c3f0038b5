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

#include "pinnflow/loss_graph.hpp"
#include "pinnflow/problem.hpp"

namespace pinnflow {

struct LossAndGrad {
  LossBreakdown breakdown;
  Eigen::VectorXd u_grad; // flat gradient over the state network
  Eigen::VectorXd k_grad; // flat gradient over the coefficient network
};

/// Reference path: records the whole loss on a LossGraph and runs one
/// reverse sweep. Serial; kept as the oracle for the blocked kernels.
LossAndGrad loss_gradient_reference(const PinnProblem& problem,
                                    const MeasurementSet& measurements,
                                    const CollocationSet& collocation, const LossSpec& spec);

/// Production path: points are split into fixed-size blocks, each block is
/// evaluated with batched GEMM jet kernels, blocks run under OpenMP, and
/// partial results reduce in block order. Output is bit-reproducible for a
/// given block size regardless of thread count.
LossAndGrad loss_gradient_blocked(const PinnProblem& problem, const MeasurementSet& measurements,
                                  const CollocationSet& collocation, const LossSpec& spec,
                                  int block_size = 64);

} // namespace pinnflow
