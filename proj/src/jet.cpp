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

#include "pinnflow/jet.hpp"

#include <stdexcept>

namespace pinnflow {

int JetSpec::hess_col(int i, int j) const {
  if (i > j) std::swap(i, j);
  const int d = jet_dim;
  return 1 + d + i * d - i * (i - 1) / 2 + (j - i);
}

MlpGradient::MlpGradient(const MlpParams& params) {
  weight_grads.reserve(params.num_layers());
  bias_grads.reserve(params.num_layers());
  for (int l = 0; l < params.num_layers(); ++l) {
    weight_grads.push_back(Eigen::MatrixXd::Zero(params.weight(l).rows(), params.weight(l).cols()));
    bias_grads.push_back(Eigen::VectorXd::Zero(params.bias(l).size()));
  }
}

void MlpGradient::set_zero() {
  for (auto& g : weight_grads) g.setZero();
  for (auto& g : bias_grads) g.setZero();
}

Eigen::VectorXd MlpGradient::flatten() const {
  int count = 0;
  for (std::size_t l = 0; l < weight_grads.size(); ++l) {
    count += static_cast<int>(weight_grads[l].size() + bias_grads[l].size());
  }
  Eigen::VectorXd flat(count);
  int pos = 0;
  for (std::size_t l = 0; l < weight_grads.size(); ++l) {
    const Eigen::MatrixXd& w = weight_grads[l];
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        flat[pos++] = w(i, j);
      }
    }
    flat.segment(pos, bias_grads[l].size()) = bias_grads[l];
    pos += static_cast<int>(bias_grads[l].size());
  }
  return flat;
}

Eigen::MatrixXd spatial_seeds(const Eigen::VectorXd& x, const JetSpec& spec) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(x.size());
  return affine_spatial_seeds(x, ones, Eigen::VectorXd::Zero(x.size()), spec);
}

Eigen::MatrixXd affine_spatial_seeds(const Eigen::VectorXd& x, const Eigen::VectorXd& scale,
                                     const Eigen::VectorXd& offset, const JetSpec& spec) {
  if (spec.mode != JetMode::Value && x.size() != spec.jet_dim) {
    throw std::invalid_argument("affine_spatial_seeds: jet_dim must match point dimension");
  }
  Eigen::MatrixXd seeds = Eigen::MatrixXd::Zero(x.size(), spec.comps());
  for (int d = 0; d < x.size(); ++d) {
    seeds(d, 0) = scale[d] * x[d] + offset[d];
    if (spec.mode != JetMode::Value) {
      seeds(d, spec.grad_col(d)) = scale[d];
    }
  }
  return seeds;
}

namespace {

// Jet chain rule through tanh. zjet holds pre-activation jets, one row per
// unit; the result holds post-activation jets.
Eigen::MatrixXd tanh_jet(const Eigen::MatrixXd& zjet, const JetSpec& spec) {
  const int n = static_cast<int>(zjet.rows());
  Eigen::MatrixXd out(n, zjet.cols());
  Eigen::ArrayXd a = zjet.col(0).array().tanh();
  out.col(0) = a.matrix();
  if (spec.mode == JetMode::Value) return out;

  Eigen::ArrayXd p = 1.0 - a.square(); // tanh'
  for (int d = 0; d < spec.jet_dim; ++d) {
    out.col(spec.grad_col(d)).array() = p * zjet.col(spec.grad_col(d)).array();
  }
  if (spec.mode == JetMode::Full) {
    Eigen::ArrayXd q = -2.0 * a * p; // tanh''
    for (int i = 0; i < spec.jet_dim; ++i) {
      for (int j = i; j < spec.jet_dim; ++j) {
        out.col(spec.hess_col(i, j)).array() =
            q * zjet.col(spec.grad_col(i)).array() * zjet.col(spec.grad_col(j)).array() +
            p * zjet.col(spec.hess_col(i, j)).array();
      }
    }
  }
  return out;
}

// Reverse of tanh_jet: converts the adjoint of post-activation jets into
// the adjoint of pre-activation jets.
Eigen::MatrixXd tanh_jet_backward(const Eigen::MatrixXd& zjet, const Eigen::ArrayXd& a,
                                  const Eigen::MatrixXd& adj, const JetSpec& spec) {
  Eigen::MatrixXd zadj(adj.rows(), adj.cols());
  Eigen::ArrayXd p = 1.0 - a.square();
  zadj.col(0).array() = adj.col(0).array() * p;
  if (spec.mode == JetMode::Value) return zadj;

  Eigen::ArrayXd q = -2.0 * a * p;
  for (int d = 0; d < spec.jet_dim; ++d) {
    const int gc = spec.grad_col(d);
    zadj.col(0).array() += adj.col(gc).array() * q * zjet.col(gc).array();
    zadj.col(gc).array() = adj.col(gc).array() * p;
  }
  if (spec.mode == JetMode::Full) {
    Eigen::ArrayXd r = -2.0 * p.square() + 4.0 * a.square() * p; // tanh'''
    for (int i = 0; i < spec.jet_dim; ++i) {
      for (int j = i; j < spec.jet_dim; ++j) {
        const int hc = spec.hess_col(i, j);
        const auto zi = zjet.col(spec.grad_col(i)).array();
        const auto zj = zjet.col(spec.grad_col(j)).array();
        zadj.col(0).array() += adj.col(hc).array() * (r * zi * zj + q * zjet.col(hc).array());
        zadj.col(spec.grad_col(i)).array() += adj.col(hc).array() * q * zj;
        zadj.col(spec.grad_col(j)).array() += adj.col(hc).array() * q * zi;
        zadj.col(hc).array() = adj.col(hc).array() * p;
      }
    }
  }
  return zadj;
}

} // namespace

Eigen::MatrixXd mlp_jet_forward(const MlpParams& params, const Eigen::MatrixXd& seeds,
                                const JetSpec& spec, JetTrace* trace) {
  if (seeds.rows() != params.input_dim() || seeds.cols() != spec.comps()) {
    throw std::invalid_argument("mlp_jet_forward: seed shape mismatch");
  }
  const int n_layers = params.num_layers();
  if (trace) {
    trace->a.assign(1, seeds);
    trace->z.clear();
  }
  Eigen::MatrixXd a = seeds;
  for (int l = 0; l < n_layers; ++l) {
    const Eigen::MatrixXd& w = params.weight(l);
    Eigen::MatrixXd z(w.rows(), a.cols());
    // Column-wise GEMV keeps the value column bitwise identical to
    // mlp_forward, which uses the same per-vector product.
    for (int c = 0; c < a.cols(); ++c) {
      z.col(c).noalias() = w * a.col(c);
    }
    z.col(0) += params.bias(l);
    if (l + 1 < n_layers) {
      if (trace) trace->z.push_back(z);
      a = tanh_jet(z, spec);
      if (trace) trace->a.push_back(a);
    } else {
      a = std::move(z);
      if (trace) trace->a.push_back(a);
    }
  }
  return a;
}

Eigen::MatrixXd mlp_jet_backward(const MlpParams& params, const JetTrace& trace,
                                 const Eigen::MatrixXd& out_adjoint, const JetSpec& spec,
                                 MlpGradient& grad) {
  const int n_layers = params.num_layers();
  Eigen::MatrixXd zadj = out_adjoint; // output layer is affine
  for (int l = n_layers - 1; l >= 0; --l) {
    grad.weight_grads[l].noalias() += zadj * trace.a[l].transpose();
    grad.bias_grads[l] += zadj.col(0);
    Eigen::MatrixXd aadj = params.weight(l).transpose() * zadj;
    if (l == 0) return aadj;
    zadj = tanh_jet_backward(trace.z[l - 1], trace.a[l].col(0).array(), aadj, spec);
  }
  return zadj; // unreachable
}

Jet2 eval_jet(const MlpParams& params, const Eigen::VectorXd& x) {
  if (x.size() != params.input_dim()) {
    throw std::invalid_argument("eval_jet: input dimension mismatch");
  }
  if (params.output_dim() != 1) {
    throw std::invalid_argument("eval_jet: network output must be scalar");
  }
  JetSpec spec{static_cast<int>(x.size()), JetMode::Full};
  Eigen::MatrixXd out = mlp_jet_forward(params, spatial_seeds(x, spec), spec);
  Jet2 jet;
  jet.value = out(0, 0);
  jet.grad.resize(spec.jet_dim);
  jet.hess.resize(spec.jet_dim, spec.jet_dim);
  for (int d = 0; d < spec.jet_dim; ++d) {
    jet.grad[d] = out(0, spec.grad_col(d));
  }
  for (int i = 0; i < spec.jet_dim; ++i) {
    for (int j = i; j < spec.jet_dim; ++j) {
      jet.hess(i, j) = out(0, spec.hess_col(i, j));
      jet.hess(j, i) = jet.hess(i, j);
    }
  }
  return jet;
}

} // namespace pinnflow
