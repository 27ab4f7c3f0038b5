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

#include <Eigen/Dense>

#include <cstdint>

namespace pinnflow {

/// Squared-exponential Gaussian process for log-conductivity fields:
/// zero mean, covariance sigma^2 exp(-|x-x'|^2 / (2 lambda^2)).
struct GpConfig {
  double sigma = 1.0;
  double lambda = 0.15;
  std::uint64_t seed = 0;
};

/// Caches the Cholesky factor of the dense covariance over cell centroids
/// so repeated realizations cost one matrix-vector product each.
/// Sized for grids up to ~10^4 cells.
class GpSampler {
public:
  GpSampler(const Grid2D& grid, double sigma, double lambda);

  /// One realization of ln K at the cell centroids.
  Field sample(std::uint64_t seed) const;

  const Grid2D& grid() const { return grid_; }

private:
  Grid2D grid_;
  Eigen::MatrixXd chol_; // lower factor of covariance + jitter
};

/// Single ln K realization; exponentiate downstream for K itself.
Field sample_gp_lnk(const Grid2D& grid, const GpConfig& config);

} // namespace pinnflow
