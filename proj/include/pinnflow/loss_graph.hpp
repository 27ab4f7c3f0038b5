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

#include "pinnflow/jet.hpp"
#include "pinnflow/mlp.hpp"

#include <functional>
#include <span>
#include <vector>

namespace pinnflow {

/// Records a scalar computation built from network evaluations and
/// arithmetic, then differentiates it with respect to every parameter of
/// every registered network in one reverse sweep.
///
/// Network evaluations enter the graph as jets (value, spatial gradient,
/// Hessian), so the reverse sweep differentiates through second spatial
/// derivatives: the parameter gradient of a PDE residual is exact.
class LossGraph {
public:
  struct Var {
    int id = -1;
  };

  /// Jet of one scalar network output whose components are graph variables.
  struct NetJet {
    Var value;
    std::vector<Var> grad;
    std::vector<Var> hess; // packed upper triangle, (0,0),(0,1),...,(1,1)
    JetSpec spec;

    Var grad_at(int d) const { return grad.at(d); }
    Var hess_at(int i, int j) const;
  };

  LossGraph() = default;

  /// Registers a network whose parameters the reverse sweep differentiates
  /// against. The reference must stay valid for the graph's lifetime.
  int add_network(const MlpParams& params);

  Var constant(double c);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var square(Var a);
  Var scale(Var a, double s);
  Var add_const(Var a, double c);

  /// Plain forward value of a registered network at x.
  Var net_value(int net, const Eigen::VectorXd& x);

  /// Jet evaluation at a spatial point (identity input map).
  NetJet net_jet(int net, const Eigen::VectorXd& x, JetMode mode = JetMode::Full);

  /// Jet evaluation with a per-input affine map applied first.
  NetJet net_jet_affine(int net, const Eigen::VectorXd& x, const Eigen::VectorXd& in_scale,
                        const Eigen::VectorXd& in_offset, JetMode mode = JetMode::Full);

  /// Feeds an existing jet into a scalar-input network, optionally through
  /// an affine input normalization v = in_scale*u + in_offset. Used to
  /// compose a state-dependent coefficient network with the state network.
  NetJet net_jet_chain(int net, const NetJet& input, double in_scale = 1.0,
                       double in_offset = 0.0);

  double value(Var v) const;

  /// Reverse sweep from `loss`. Returns one flat parameter gradient per
  /// registered network, in registration order. Throws std::runtime_error
  /// if the loss value is not finite.
  std::vector<ParamGradient> gradients(Var loss) const;

  std::size_t node_count() const { return nodes_.size(); }

private:
  struct Node {
    double val = 0.0;
    double w1 = 0.0, w2 = 0.0;
    int p1 = -1, p2 = -1;
  };

  struct NetEval {
    int net = -1;
    JetSpec spec;
    JetTrace trace;
    std::vector<int> seed_vars;  // per seed entry (row-major), -1 when constant
    double seed_scale = 1.0;     // chain factor applied to variable seeds
    std::vector<int> out_vars;   // graph ids of the output jet components
    int created_before_node = 0; // nodes_.size() at creation time
  };

  Var make_node(double val, double w1 = 0.0, int p1 = -1, double w2 = 0.0, int p2 = -1);
  NetJet run_eval(int net, const Eigen::MatrixXd& seeds, const JetSpec& spec,
                  std::vector<int> seed_vars, double seed_scale);

  std::vector<Node> nodes_;
  std::vector<NetEval> evals_;
  std::vector<const MlpParams*> networks_;
};

/// Builds a scalar loss from network evaluations recorded on the graph.
/// The callable receives the graph and the handles of the registered
/// networks (in the order of `nets`).
using LossEvaluator = std::function<LossGraph::Var(LossGraph&, const std::vector<int>&)>;

/// Exact gradient of an arbitrary scalar functional of network values and
/// jets with respect to every parameter of every network. Returns one
/// ParamGradient per network; the loss value itself is written to
/// loss_value when given.
std::vector<ParamGradient> loss_param_gradient(const LossEvaluator& evaluator,
                                               std::span<const MlpParams* const> nets,
                                               double* loss_value = nullptr);

} // namespace pinnflow
