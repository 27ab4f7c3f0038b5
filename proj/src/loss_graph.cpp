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

#include "pinnflow/loss_graph.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnflow {

LossGraph::Var LossGraph::NetJet::hess_at(int i, int j) const {
  const int base = 1 + spec.jet_dim;
  return hess.at(spec.hess_col(i, j) - base);
}

int LossGraph::add_network(const MlpParams& params) {
  networks_.push_back(&params);
  return static_cast<int>(networks_.size()) - 1;
}

LossGraph::Var LossGraph::make_node(double val, double w1, int p1, double w2, int p2) {
  nodes_.push_back(Node{val, w1, w2, p1, p2});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

LossGraph::Var LossGraph::constant(double c) { return make_node(c); }

LossGraph::Var LossGraph::add(Var a, Var b) {
  return make_node(nodes_[a.id].val + nodes_[b.id].val, 1.0, a.id, 1.0, b.id);
}

LossGraph::Var LossGraph::sub(Var a, Var b) {
  return make_node(nodes_[a.id].val - nodes_[b.id].val, 1.0, a.id, -1.0, b.id);
}

LossGraph::Var LossGraph::mul(Var a, Var b) {
  return make_node(nodes_[a.id].val * nodes_[b.id].val, nodes_[b.id].val, a.id,
                   nodes_[a.id].val, b.id);
}

LossGraph::Var LossGraph::div(Var a, Var b) {
  const double bv = nodes_[b.id].val;
  const double v = nodes_[a.id].val / bv;
  return make_node(v, 1.0 / bv, a.id, -v / bv, b.id);
}

LossGraph::Var LossGraph::neg(Var a) { return make_node(-nodes_[a.id].val, -1.0, a.id); }

LossGraph::Var LossGraph::square(Var a) {
  const double v = nodes_[a.id].val;
  return make_node(v * v, 2.0 * v, a.id);
}

LossGraph::Var LossGraph::scale(Var a, double s) {
  return make_node(s * nodes_[a.id].val, s, a.id);
}

LossGraph::Var LossGraph::add_const(Var a, double c) {
  return make_node(nodes_[a.id].val + c, 1.0, a.id);
}

LossGraph::NetJet LossGraph::run_eval(int net, const Eigen::MatrixXd& seeds, const JetSpec& spec,
                                      std::vector<int> seed_vars, double seed_scale) {
  NetEval eval;
  eval.net = net;
  eval.spec = spec;
  eval.seed_vars = std::move(seed_vars);
  eval.seed_scale = seed_scale;
  eval.created_before_node = static_cast<int>(nodes_.size());

  Eigen::MatrixXd out = mlp_jet_forward(*networks_[net], seeds, spec, &eval.trace);
  if (networks_[net]->output_dim() != 1) {
    throw std::invalid_argument("LossGraph: network output must be scalar");
  }

  NetJet jet;
  jet.spec = spec;
  eval.out_vars.reserve(spec.comps());
  for (int c = 0; c < spec.comps(); ++c) {
    Var v = make_node(out(0, c));
    eval.out_vars.push_back(v.id);
    if (c == 0) {
      jet.value = v;
    } else if (c <= spec.n_grad()) {
      jet.grad.push_back(v);
    } else {
      jet.hess.push_back(v);
    }
  }
  evals_.push_back(std::move(eval));
  return jet;
}

LossGraph::Var LossGraph::net_value(int net, const Eigen::VectorXd& x) {
  JetSpec spec{static_cast<int>(x.size()), JetMode::Value};
  Eigen::MatrixXd seeds = x;
  return run_eval(net, seeds, spec, {}, 1.0).value;
}

LossGraph::NetJet LossGraph::net_jet(int net, const Eigen::VectorXd& x, JetMode mode) {
  JetSpec spec{static_cast<int>(x.size()), mode};
  return run_eval(net, spatial_seeds(x, spec), spec, {}, 1.0);
}

LossGraph::NetJet LossGraph::net_jet_affine(int net, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& in_scale,
                                            const Eigen::VectorXd& in_offset, JetMode mode) {
  JetSpec spec{static_cast<int>(x.size()), mode};
  return run_eval(net, affine_spatial_seeds(x, in_scale, in_offset, spec), spec, {}, 1.0);
}

LossGraph::NetJet LossGraph::net_jet_chain(int net, const NetJet& input, double in_scale,
                                           double in_offset) {
  if (networks_[net]->input_dim() != 1) {
    throw std::invalid_argument("LossGraph::net_jet_chain: network must take a scalar input");
  }
  const JetSpec spec = input.spec;
  Eigen::MatrixXd seeds(1, spec.comps());
  std::vector<int> seed_vars(spec.comps(), -1);
  seeds(0, 0) = in_scale * nodes_[input.value.id].val + in_offset;
  seed_vars[0] = input.value.id;
  for (int d = 0; d < spec.n_grad(); ++d) {
    seeds(0, spec.grad_col(d)) = in_scale * nodes_[input.grad[d].id].val;
    seed_vars[spec.grad_col(d)] = input.grad[d].id;
  }
  for (int h = 0; h < spec.n_hess(); ++h) {
    const int col = 1 + spec.n_grad() + h;
    seeds(0, col) = in_scale * nodes_[input.hess[h].id].val;
    seed_vars[col] = input.hess[h].id;
  }
  return run_eval(net, seeds, spec, std::move(seed_vars), in_scale);
}

double LossGraph::value(Var v) const { return nodes_.at(v.id).val; }

std::vector<ParamGradient> LossGraph::gradients(Var loss) const {
  if (!std::isfinite(nodes_.at(loss.id).val)) {
    throw std::runtime_error("LossGraph::gradients: loss is not finite");
  }
  std::vector<double> adjoint(nodes_.size(), 0.0);
  adjoint[loss.id] = 1.0;

  std::vector<MlpGradient> grads;
  grads.reserve(networks_.size());
  for (const MlpParams* net : networks_) grads.emplace_back(*net);

  auto fire_eval = [&](const NetEval& eval) {
    Eigen::MatrixXd out_adj(1, eval.spec.comps());
    for (int c = 0; c < eval.spec.comps(); ++c) {
      out_adj(0, c) = adjoint[eval.out_vars[c]];
    }
    Eigen::MatrixXd seed_adj =
        mlp_jet_backward(*networks_[eval.net], eval.trace, out_adj, eval.spec, grads[eval.net]);
    if (!eval.seed_vars.empty()) {
      for (int r = 0; r < seed_adj.rows(); ++r) {
        for (int c = 0; c < seed_adj.cols(); ++c) {
          const int var = eval.seed_vars[r * seed_adj.cols() + c];
          if (var >= 0) adjoint[var] += eval.seed_scale * seed_adj(r, c);
        }
      }
    }
  };

  // Walk nodes newest to oldest; a network evaluation fires once every
  // node created after it has been processed, so its output adjoints are
  // final at that point.
  int next_eval = static_cast<int>(evals_.size()) - 1;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    while (next_eval >= 0 && evals_[next_eval].created_before_node == i + 1) {
      fire_eval(evals_[next_eval]);
      --next_eval;
    }
    const Node& node = nodes_[i];
    const double a = adjoint[i];
    if (a != 0.0) {
      if (node.p1 >= 0) adjoint[node.p1] += node.w1 * a;
      if (node.p2 >= 0) adjoint[node.p2] += node.w2 * a;
    }
  }
  while (next_eval >= 0) {
    fire_eval(evals_[next_eval]);
    --next_eval;
  }

  std::vector<ParamGradient> result;
  result.reserve(grads.size());
  for (const MlpGradient& g : grads) result.push_back(ParamGradient{g.flatten()});
  return result;
}

std::vector<ParamGradient> loss_param_gradient(const LossEvaluator& evaluator,
                                               std::span<const MlpParams* const> nets,
                                               double* loss_value) {
  LossGraph graph;
  std::vector<int> handles;
  handles.reserve(nets.size());
  for (const MlpParams* net : nets) handles.push_back(graph.add_network(*net));
  LossGraph::Var loss = evaluator(graph, handles);
  if (loss_value) *loss_value = graph.value(loss);
  return graph.gradients(loss);
}

} // namespace pinnflow
