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

#include "pinnflow/batch_jet.hpp"

#include <stdexcept>

namespace pinnflow {

Eigen::MatrixXd batch_spatial_seeds(const Eigen::Matrix2Xd& points, const Eigen::Vector2d& scale,
                                    const Eigen::Vector2d& offset, const JetSpec& spec) {
  const int b = static_cast<int>(points.cols());
  Eigen::MatrixXd seeds = Eigen::MatrixXd::Zero(2, spec.comps() * b);
  auto value = jet_comp(seeds, 0, b);
  value = scale.asDiagonal() * points;
  value.colwise() += offset;
  for (int d = 0; d < spec.n_grad(); ++d) {
    jet_comp(seeds, spec.grad_col(d), b).row(d).setConstant(scale[d]);
  }
  return seeds;
}

namespace {

// Post-activation jets from pre-activation jets, written into `out`.
void batch_tanh(const Eigen::MatrixXd& z, Eigen::MatrixXd& out, const JetSpec& spec, int b) {
  Eigen::ArrayXXd a = jet_comp(z, 0, b).array().tanh();
  jet_comp(out, 0, b) = a.matrix();
  if (spec.mode == JetMode::Value) return;
  Eigen::ArrayXXd p = 1.0 - a.square();
  for (int d = 0; d < spec.jet_dim; ++d) {
    const int gc = spec.grad_col(d);
    jet_comp(out, gc, b).array() = p * jet_comp(z, gc, b).array();
  }
  if (spec.mode == JetMode::Full) {
    Eigen::ArrayXXd q = -2.0 * a * p;
    for (int i = 0; i < spec.jet_dim; ++i) {
      for (int j = i; j < spec.jet_dim; ++j) {
        const int hc = spec.hess_col(i, j);
        jet_comp(out, hc, b).array() =
            q * jet_comp(z, spec.grad_col(i), b).array() *
                jet_comp(z, spec.grad_col(j), b).array() +
            p * jet_comp(z, hc, b).array();
      }
    }
  }
}

Eigen::MatrixXd batch_tanh_backward(const Eigen::MatrixXd& z, const Eigen::ArrayXXd& a,
                                    const Eigen::MatrixXd& adj, const JetSpec& spec, int b) {
  Eigen::MatrixXd zadj(adj.rows(), adj.cols());
  Eigen::ArrayXXd p = 1.0 - a.square();
  jet_comp(zadj, 0, b).array() = jet_comp(adj, 0, b).array() * p;
  if (spec.mode == JetMode::Value) return zadj;

  Eigen::ArrayXXd q = -2.0 * a * p;
  for (int d = 0; d < spec.jet_dim; ++d) {
    const int gc = spec.grad_col(d);
    jet_comp(zadj, 0, b).array() += jet_comp(adj, gc, b).array() * q * jet_comp(z, gc, b).array();
    jet_comp(zadj, gc, b).array() = jet_comp(adj, gc, b).array() * p;
  }
  if (spec.mode == JetMode::Full) {
    Eigen::ArrayXXd r = -2.0 * p.square() + 4.0 * a.square() * p;
    for (int i = 0; i < spec.jet_dim; ++i) {
      for (int j = i; j < spec.jet_dim; ++j) {
        const int hc = spec.hess_col(i, j);
        const auto zi = jet_comp(z, spec.grad_col(i), b).array();
        const auto zj = jet_comp(z, spec.grad_col(j), b).array();
        const auto ah = jet_comp(adj, hc, b).array();
        jet_comp(zadj, 0, b).array() += ah * (r * zi * zj + q * jet_comp(z, hc, b).array());
        jet_comp(zadj, spec.grad_col(i), b).array() += ah * q * zj;
        jet_comp(zadj, spec.grad_col(j), b).array() += ah * q * zi;
        jet_comp(zadj, hc, b).array() = ah * p;
      }
    }
  }
  return zadj;
}

} // namespace

const Eigen::MatrixXd& batch_jet_forward(const MlpParams& params, Eigen::MatrixXd seeds,
                                         const JetSpec& spec, BatchTrace& trace) {
  if (seeds.rows() != params.input_dim() || seeds.cols() % spec.comps() != 0) {
    throw std::invalid_argument("batch_jet_forward: seed shape mismatch");
  }
  const int b = static_cast<int>(seeds.cols()) / spec.comps();
  const int n_layers = params.num_layers();
  trace.points = b;
  trace.a.clear();
  trace.z.clear();
  trace.a.reserve(n_layers + 1);
  trace.z.reserve(n_layers - 1);
  trace.a.push_back(std::move(seeds));

  for (int l = 0; l < n_layers; ++l) {
    const Eigen::MatrixXd& w = params.weight(l);
    Eigen::MatrixXd z(w.rows(), trace.a[l].cols());
    z.noalias() = w * trace.a[l];
    jet_comp(z, 0, b).colwise() += params.bias(l);
    if (l + 1 < n_layers) {
      trace.z.push_back(std::move(z));
      Eigen::MatrixXd a(w.rows(), trace.z.back().cols());
      batch_tanh(trace.z.back(), a, spec, b);
      trace.a.push_back(std::move(a));
    } else {
      trace.a.push_back(std::move(z));
    }
  }
  return trace.a.back();
}

Eigen::MatrixXd batch_jet_backward(const MlpParams& params, const BatchTrace& trace,
                                   const Eigen::MatrixXd& out_adjoint, const JetSpec& spec,
                                   MlpGradient& grad) {
  const int n_layers = params.num_layers();
  const int b = trace.points;
  Eigen::MatrixXd zadj = out_adjoint;
  for (int l = n_layers - 1; l >= 0; --l) {
    grad.weight_grads[l].noalias() += zadj * trace.a[l].transpose();
    grad.bias_grads[l] += jet_comp(zadj, 0, b).rowwise().sum();
    Eigen::MatrixXd aadj(params.weight(l).cols(), zadj.cols());
    aadj.noalias() = params.weight(l).transpose() * zadj;
    if (l == 0) return aadj;
    zadj = batch_tanh_backward(trace.z[l - 1], jet_comp(trace.a[l], 0, b).array(), aadj, spec, b);
  }
  return zadj; // unreachable
}

} // namespace pinnflow
