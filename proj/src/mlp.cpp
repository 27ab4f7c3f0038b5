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

#include "pinnflow/mlp.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

namespace pinnflow {

namespace {

void check_architecture(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("MlpParams: need at least input and output layer sizes");
  }
  for (int n : layer_sizes) {
    if (n <= 0) {
      throw std::invalid_argument("MlpParams: layer sizes must be positive");
    }
  }
}

} // namespace

MlpParams::MlpParams(std::vector<int> layer_sizes) : layer_sizes_(std::move(layer_sizes)) {
  check_architecture(layer_sizes_);
  const int n_layers = static_cast<int>(layer_sizes_.size()) - 1;
  weights_.reserve(n_layers);
  biases_.reserve(n_layers);
  for (int l = 0; l < n_layers; ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(layer_sizes_[l + 1], layer_sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(layer_sizes_[l + 1]));
  }
}

MlpParams MlpParams::xavier(std::vector<int> layer_sizes, std::uint64_t seed) {
  MlpParams params(std::move(layer_sizes));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < params.num_layers(); ++l) {
    const int fan_in = params.layer_sizes_[l];
    const int fan_out = params.layer_sizes_[l + 1];
    const double stddev = std::sqrt(2.0 / (fan_in + fan_out));
    Eigen::MatrixXd& w = params.weights_[l];
    // Row-major fill order so the draw sequence matches the flat layout.
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        w(i, j) = stddev * normal(rng);
      }
    }
  }
  return params;
}

int MlpParams::parameter_count() const {
  int count = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    count += layer_sizes_[l] * layer_sizes_[l + 1] + layer_sizes_[l + 1];
  }
  return count;
}

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  int pos = 0;
  for (int l = 0; l < num_layers(); ++l) {
    const Eigen::MatrixXd& w = weights_[l];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        flat[pos++] = w(i, j);
      }
    }
    flat.segment(pos, biases_[l].size()) = biases_[l];
    pos += static_cast<int>(biases_[l].size());
  }
  return flat;
}

void MlpParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("MlpParams::unflatten: length mismatch");
  }
  int pos = 0;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd& w = weights_[l];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        w(i, j) = flat[pos++];
      }
    }
    biases_[l] = flat.segment(pos, biases_[l].size());
    pos += static_cast<int>(biases_[l].size());
  }
}

bool MlpParams::operator==(const MlpParams& other) const {
  if (layer_sizes_ != other.layer_sizes_) return false;
  for (int l = 0; l < num_layers(); ++l) {
    if (weights_[l] != other.weights_[l] || biases_[l] != other.biases_[l]) return false;
  }
  return true;
}

void MlpParams::save(std::ostream& out) const {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < layer_sizes_.size(); ++i) {
    out << (i ? " " : "") << layer_sizes_[i];
  }
  out << '\n';
  for (int l = 0; l < num_layers(); ++l) {
    const Eigen::MatrixXd& w = weights_[l];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        out << w(i, j) << '\n';
      }
    }
    for (int i = 0; i < biases_[l].size(); ++i) {
      out << biases_[l][i] << '\n';
    }
  }
}

void MlpParams::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("MlpParams: cannot open " + path + " for writing");
  save(out);
}

MlpParams MlpParams::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw std::runtime_error("MlpParams: empty parameter stream");
  }
  std::istringstream hs(header);
  std::vector<int> sizes;
  int n = 0;
  while (hs >> n) sizes.push_back(n);
  MlpParams params(sizes);
  for (int l = 0; l < params.num_layers(); ++l) {
    Eigen::MatrixXd& w = params.weights_[l];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        if (!(in >> w(i, j))) throw std::runtime_error("MlpParams: truncated parameter stream");
      }
    }
    for (int i = 0; i < params.biases_[l].size(); ++i) {
      if (!(in >> params.biases_[l][i])) throw std::runtime_error("MlpParams: truncated parameter stream");
    }
  }
  return params;
}

MlpParams MlpParams::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("MlpParams: cannot open " + path);
  return load(in);
}

double mlp_forward(const MlpParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.input_dim()) {
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  }
  Eigen::VectorXd a = x;
  const int n_layers = params.num_layers();
  for (int l = 0; l < n_layers; ++l) {
    // Product first, bias second: the jet evaluator follows the same
    // sequence so values agree bit for bit.
    Eigen::VectorXd z(params.weight(l).rows());
    z.noalias() = params.weight(l) * a;
    z += params.bias(l);
    if (l + 1 < n_layers) {
      a = z.array().tanh();
    } else {
      a = std::move(z);
    }
  }
  return a[0];
}

double mlp_forward(const MlpParams& params, std::span<const double> x) {
  Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<int>(x.size()));
  return mlp_forward(params, xv);
}

} // namespace pinnflow
