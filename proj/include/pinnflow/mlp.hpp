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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pinnflow {

/// Weights and biases of a fully connected feed-forward network.
///
/// Hidden layers use tanh, the output layer is affine. The parameters of
/// all layers can be flattened into a single vector (weights row-major,
/// then biases, layer by layer) for the optimizer.
class MlpParams {
public:
  MlpParams() = default;

  /// Zero-initialized network with the given layer sizes
  /// (input dim, hidden dims..., output dim).
  explicit MlpParams(std::vector<int> layer_sizes);

  /// Glorot normal initialization: weights ~ N(0, 2/(fan_in+fan_out)),
  /// biases zero. Deterministic for a given seed.
  static MlpParams xavier(std::vector<int> layer_sizes, std::uint64_t seed);

  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  int input_dim() const { return layer_sizes_.front(); }
  int output_dim() const { return layer_sizes_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }

  const Eigen::MatrixXd& weight(int layer) const { return weights_[layer]; }
  const Eigen::VectorXd& bias(int layer) const { return biases_[layer]; }
  Eigen::MatrixXd& weight(int layer) { return weights_[layer]; }
  Eigen::VectorXd& bias(int layer) { return biases_[layer]; }

  /// Total parameter count: sum over layers of fan_in*fan_out + fan_out.
  int parameter_count() const;

  /// Row-major weights then biases, layer by layer.
  Eigen::VectorXd flatten() const;

  /// Inverse of flatten(). Throws std::invalid_argument on length mismatch.
  void unflatten(const Eigen::VectorXd& flat);

  bool operator==(const MlpParams& other) const;

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  static MlpParams load(std::istream& in);
  static MlpParams load_file(const std::string& path);

private:
  std::vector<int> layer_sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// Network value at x. Hidden activations tanh, affine output layer.
/// Throws std::invalid_argument on input dimension mismatch.
double mlp_forward(const MlpParams& params, std::span<const double> x);

/// Vector-input overload used throughout the problem layer.
double mlp_forward(const MlpParams& params, const Eigen::VectorXd& x);

} // namespace pinnflow
