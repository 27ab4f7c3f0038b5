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

#include <cstdint>
#include <vector>

namespace pinnflow {

enum class SamplingScheme { RandomCentroids, LatinHypercube };

/// Deterministic measurement-location sampling. The centroid scheme draws
/// N distinct cell centroids without replacement; Latin hypercube places
/// one point per stratum per axis inside the domain.
std::vector<Eigen::Vector2d> sample_measurement_locations(const Grid2D& grid, int n,
                                                          std::uint64_t seed,
                                                          SamplingScheme scheme);

/// Indices of the sampled cells for the centroid scheme (same draw as
/// sample_measurement_locations with RandomCentroids).
std::vector<int> sample_cell_indices(const Grid2D& grid, int n, std::uint64_t seed);

/// N evenly spaced points along one boundary edge, midpoints of N equal
/// segments.
std::vector<Eigen::Vector2d> edge_points(const Grid2D& grid, Edge edge, int n);

/// Multiplicative Gaussian noise: v -> v (1 + level xi), xi ~ N(0,1).
Eigen::VectorXd add_noise(const Eigen::VectorXd& values, double level, std::uint64_t seed);

/// Additive Gaussian noise scaled by the value range, kept behind a switch
/// for noise-model comparisons: v -> v + level*range*xi.
Eigen::VectorXd add_noise_additive(const Eigen::VectorXd& values, double level,
                                   std::uint64_t seed);

} // namespace pinnflow
