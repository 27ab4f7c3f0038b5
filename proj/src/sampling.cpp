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

#include "pinnflow/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace pinnflow {

std::vector<int> sample_cell_indices(const Grid2D& grid, int n, std::uint64_t seed) {
  const int total = grid.cell_count();
  if (n > total) {
    throw std::invalid_argument("sample_cell_indices: N exceeds available centroids");
  }
  std::vector<int> cells(total);
  std::iota(cells.begin(), cells.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n entries are a draw without replacement.
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, total - 1);
    std::swap(cells[i], cells[pick(rng)]);
  }
  cells.resize(n);
  return cells;
}

std::vector<Eigen::Vector2d> sample_measurement_locations(const Grid2D& grid, int n,
                                                          std::uint64_t seed,
                                                          SamplingScheme scheme) {
  std::vector<Eigen::Vector2d> points;
  points.reserve(n);
  if (scheme == SamplingScheme::RandomCentroids) {
    for (int cell : sample_cell_indices(grid, n, seed)) {
      points.push_back(grid.centroid(cell));
    }
    return points;
  }

  // Latin hypercube: one point per stratum per axis, uniform within its
  // stratum, with an independent stratum permutation for the second axis.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 0; i < n; ++i) {
    const double x = (i + unit(rng)) / n * grid.Lx;
    const double y = (perm[i] + unit(rng)) / n * grid.Ly;
    points.emplace_back(x, y);
  }
  return points;
}

std::vector<Eigen::Vector2d> edge_points(const Grid2D& grid, Edge edge, int n) {
  std::vector<Eigen::Vector2d> points;
  points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double t = (i + 0.5) / n;
    switch (edge) {
      case Edge::XMin: points.emplace_back(0.0, t * grid.Ly); break;
      case Edge::XMax: points.emplace_back(grid.Lx, t * grid.Ly); break;
      case Edge::YMin: points.emplace_back(t * grid.Lx, 0.0); break;
      case Edge::YMax: points.emplace_back(t * grid.Lx, grid.Ly); break;
    }
  }
  return points;
}

Eigen::VectorXd add_noise(const Eigen::VectorXd& values, double level, std::uint64_t seed) {
  if (level < 0.0) throw std::invalid_argument("add_noise: level must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd noisy = values;
  for (int i = 0; i < noisy.size(); ++i) {
    noisy[i] *= 1.0 + level * normal(rng);
  }
  return noisy;
}

Eigen::VectorXd add_noise_additive(const Eigen::VectorXd& values, double level,
                                   std::uint64_t seed) {
  if (level < 0.0) throw std::invalid_argument("add_noise_additive: level must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double range = values.size() ? values.maxCoeff() - values.minCoeff() : 0.0;
  Eigen::VectorXd noisy = values;
  for (int i = 0; i < noisy.size(); ++i) {
    noisy[i] += level * range * normal(rng);
  }
  return noisy;
}

} // namespace pinnflow
