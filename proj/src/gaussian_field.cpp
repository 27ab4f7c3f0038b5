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

#include "pinnflow/gaussian_field.hpp"

#include <Eigen/Cholesky>

#include <random>
#include <stdexcept>

namespace pinnflow {

GpSampler::GpSampler(const Grid2D& grid, double sigma, double lambda) : grid_(grid) {
  if (sigma <= 0.0 || lambda <= 0.0) {
    throw std::invalid_argument("GpSampler: sigma and lambda must be positive");
  }
  if (grid.cell_count() > 20000) {
    throw std::invalid_argument("GpSampler: grid too large for dense covariance factorization");
  }
  const int n = grid.cell_count();
  const double var = sigma * sigma;
  const double inv_two_lambda2 = 1.0 / (2.0 * lambda * lambda);

  Eigen::MatrixXd cov(n, n);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < n; ++a) {
    const Eigen::Vector2d xa = grid.centroid(a);
    for (int b = 0; b <= a; ++b) {
      const double d2 = (xa - grid.centroid(b)).squaredNorm();
      const double c = var * std::exp(-d2 * inv_two_lambda2);
      cov(a, b) = c;
      cov(b, a) = c;
    }
  }

  // Squared-exponential covariances are numerically rank-deficient; add
  // escalating diagonal jitter until the factorization succeeds.
  double jitter = 1e-12 * var;
  const double jitter_max = 1e-6 * var;
  while (true) {
    Eigen::MatrixXd work = cov;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      chol_ = llt.matrixL();
      return;
    }
    if (jitter >= jitter_max) {
      throw std::runtime_error("GpSampler: covariance factorization failed at maximum jitter");
    }
    jitter *= 10.0;
  }
}

Field GpSampler::sample(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(grid_.cell_count());
  for (int c = 0; c < z.size(); ++c) {
    z[c] = normal(rng);
  }
  return Field(grid_, chol_ * z);
}

Field sample_gp_lnk(const Grid2D& grid, const GpConfig& config) {
  return GpSampler(grid, config.sigma, config.lambda).sample(config.seed);
}

} // namespace pinnflow
