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

#include "pinnflow/loss_grad.hpp"

#include "pinnflow/batch_jet.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnflow {

namespace {

// ---------------------------------------------------------------------
// Reference path: the full loss expression on one LossGraph.
// ---------------------------------------------------------------------

using Var = LossGraph::Var;

Var mean_of_squares(LossGraph& g, const std::vector<Var>& residuals) {
  Var sum = g.constant(0.0);
  for (Var r : residuals) sum = g.add(sum, g.square(r));
  return g.scale(sum, 1.0 / static_cast<double>(residuals.size()));
}

struct GraphNets {
  int u = -1;
  int k = -1;
};

Var graph_u_value(LossGraph& g, const PinnProblem& p, GraphNets nets, const Eigen::Vector2d& x) {
  Eigen::VectorXd mapped = p.x_scale.cwiseProduct(x) + p.x_offset;
  return g.net_value(nets.u, mapped);
}

LossGraph::NetJet graph_u_jet(LossGraph& g, const PinnProblem& p, GraphNets nets,
                              const Eigen::Vector2d& x, JetMode mode) {
  return g.net_jet_affine(nets.u, x, p.x_scale, p.x_offset, mode);
}

Var graph_residual(LossGraph& g, const PinnProblem& p, GraphNets nets,
                   const Eigen::Vector2d& x) {
  LossGraph::NetJet u = graph_u_jet(g, p, nets, x, JetMode::Full);
  LossGraph::NetJet k = p.kind == ProblemKind::LinearK
                            ? g.net_jet_affine(nets.k, x, p.x_scale, p.x_offset, JetMode::Full)
                            : g.net_jet_chain(nets.k, u, p.k_in_scale, p.k_in_offset);
  Var gdot = g.add(g.mul(k.grad_at(0), u.grad_at(0)), g.mul(k.grad_at(1), u.grad_at(1)));
  Var lap = g.add(u.hess_at(0, 0), u.hess_at(1, 1));
  return g.add(gdot, g.mul(k.value, lap));
}

} // namespace

LossAndGrad loss_gradient_reference(const PinnProblem& problem,
                                    const MeasurementSet& measurements,
                                    const CollocationSet& collocation, const LossSpec& spec) {
  spec.validate();
  measurements.validate(problem.Lx, problem.Ly);

  LossGraph g;
  GraphNets nets;
  nets.u = g.add_network(problem.u_net);
  nets.k = g.add_network(problem.k_net);

  auto require = [](bool nonempty, const char* term) {
    if (!nonempty) {
      throw std::invalid_argument(std::string("loss_gradient: enabled ") + term +
                                  " term has no points");
    }
  };

  LossAndGrad out;
  Var total = g.constant(0.0);

  if (spec.use_data_k) {
    require(measurements.n_k() > 0, "data-K");
    std::vector<Var> res;
    res.reserve(measurements.n_k());
    for (int i = 0; i < measurements.n_k(); ++i) {
      Var kv;
      if (problem.kind == ProblemKind::LinearK) {
        Eigen::VectorXd mapped =
            problem.x_scale.cwiseProduct(measurements.k_points[i]) + problem.x_offset;
        kv = g.net_value(nets.k, mapped);
      } else {
        LossGraph::NetJet u = graph_u_jet(g, problem, nets, measurements.k_points[i],
                                          JetMode::Value);
        kv = g.net_jet_chain(nets.k, u, problem.k_in_scale, problem.k_in_offset).value;
      }
      res.push_back(g.add_const(kv, -measurements.k_values[i]));
    }
    Var term = mean_of_squares(g, res);
    out.breakdown.data_k = g.value(term);
    total = g.add(total, g.scale(term, spec.w_data_k));
  }
  if (spec.use_data_u) {
    require(measurements.n_u() > 0, "data-u");
    std::vector<Var> res;
    res.reserve(measurements.n_u());
    for (int i = 0; i < measurements.n_u(); ++i) {
      Var uv = graph_u_value(g, problem, nets, measurements.u_points[i]);
      res.push_back(g.add_const(uv, -measurements.u_values[i]));
    }
    Var term = mean_of_squares(g, res);
    out.breakdown.data_u = g.value(term);
    total = g.add(total, g.scale(term, spec.w_data_u));
  }
  if (spec.use_dirichlet) {
    require(measurements.n_dirichlet() > 0, "Dirichlet");
    std::vector<Var> res;
    res.reserve(measurements.n_dirichlet());
    for (int i = 0; i < measurements.n_dirichlet(); ++i) {
      Var uv = graph_u_value(g, problem, nets, measurements.dirichlet_points[i]);
      res.push_back(g.add_const(uv, -measurements.dirichlet_values[i]));
    }
    Var term = mean_of_squares(g, res);
    out.breakdown.dirichlet = g.value(term);
    total = g.add(total, g.scale(term, spec.w_dirichlet));
  }
  if (spec.use_neumann) {
    if (problem.kind == ProblemKind::LinearK) {
      require(measurements.n_neumann() > 0, "Neumann");
      std::vector<Var> res;
      res.reserve(measurements.n_neumann());
      for (int i = 0; i < measurements.n_neumann(); ++i) {
        LossGraph::NetJet u =
            graph_u_jet(g, problem, nets, measurements.neumann_points[i], JetMode::Gradient);
        Var flux = u.grad_at(measurements.neumann_directions[i]);
        res.push_back(g.add_const(flux, -measurements.neumann_values[i]));
      }
      Var term = mean_of_squares(g, res);
      out.breakdown.neumann = g.value(term);
      total = g.add(total, g.scale(term, spec.w_neumann));
    } else {
      require(!collocation.neumann_x1.empty() || !collocation.neumann_x2.empty(), "Neumann");
      Var term = g.constant(0.0);
      auto flux_group = [&](const std::vector<Eigen::Vector2d>& pts, int direction,
                            double target) {
        std::vector<Var> res;
        res.reserve(pts.size());
        for (const auto& p : pts) {
          LossGraph::NetJet u = graph_u_jet(g, problem, nets, p, JetMode::Gradient);
          LossGraph::NetJet ku =
              g.net_jet_chain(nets.k, u, problem.k_in_scale, problem.k_in_offset);
          Var flux = g.neg(g.mul(ku.value, u.grad_at(direction)));
          res.push_back(g.add_const(flux, -target));
        }
        return mean_of_squares(g, res);
      };
      if (!collocation.neumann_x1.empty()) {
        term = g.add(term, flux_group(collocation.neumann_x1, 0, problem.neumann_q));
      }
      if (!collocation.neumann_x2.empty()) {
        term = g.add(term, flux_group(collocation.neumann_x2, 1, 0.0));
      }
      out.breakdown.neumann = g.value(term);
      total = g.add(total, g.scale(term, spec.w_neumann));
    }
  }
  if (spec.use_residual) {
    require(collocation.n_interior() > 0, "residual");
    std::vector<Var> res;
    res.reserve(collocation.n_interior());
    for (const auto& p : collocation.interior) {
      res.push_back(graph_residual(g, problem, nets, p));
    }
    Var term = mean_of_squares(g, res);
    out.breakdown.residual = g.value(term);
    total = g.add(total, g.scale(term, spec.w_residual));
  }

  out.breakdown.total = g.value(total);
  std::vector<ParamGradient> grads = g.gradients(total);
  out.u_grad = std::move(grads[0].flat);
  out.k_grad = std::move(grads[1].flat);
  return out;
}

// -----------------------------------------------------------------------
// Blocked path.
// -----------------------------------------------------------------------

namespace {

enum class TermTag { DataK, DataU, Dirichlet, NeumannMeas, NeumannX1, NeumannX2, Residual };

struct BlockTask {
  TermTag tag;
  int begin = 0;
  int end = 0;
  double coef = 0.0; // 2 * weight / N_term, the residual-to-gradient factor
};

struct BlockResult {
  double sum_sq = 0.0;
  MlpGradient u_grad;
  MlpGradient k_grad;

  BlockResult(const MlpParams& u, const MlpParams& k) : u_grad(u), k_grad(k) {}
};

Eigen::Matrix2Xd gather_points(const std::vector<Eigen::Vector2d>& pts, int begin, int end) {
  Eigen::Matrix2Xd m(2, end - begin);
  for (int i = begin; i < end; ++i) m.col(i - begin) = pts[i];
  return m;
}

void run_block(const PinnProblem& p, const MeasurementSet& ms, const CollocationSet& cs,
               const BlockTask& task, BlockResult& result) {
  const JetSpec value_spec{2, JetMode::Value};
  const JetSpec grad_spec{2, JetMode::Gradient};
  const JetSpec full_spec{2, JetMode::Full};
  const int b = task.end - task.begin;

  switch (task.tag) {
    case TermTag::DataK: {
      const Eigen::Matrix2Xd pts = gather_points(ms.k_points, task.begin, task.end);
      const auto tgt = ms.k_values.segment(task.begin, b).transpose();
      if (p.kind == ProblemKind::LinearK) {
        BatchTrace trace;
        const Eigen::MatrixXd& out = batch_jet_forward(
            p.k_net, batch_spatial_seeds(pts, p.x_scale, p.x_offset, value_spec), value_spec,
            trace);
        Eigen::MatrixXd d = out.row(0) - tgt;
        result.sum_sq += d.squaredNorm();
        batch_jet_backward(p.k_net, trace, task.coef * d, value_spec, result.k_grad);
      } else {
        BatchTrace utrace;
        const Eigen::MatrixXd& uv = batch_jet_forward(
            p.u_net, batch_spatial_seeds(pts, p.x_scale, p.x_offset, value_spec), value_spec,
            utrace);
        BatchTrace ktrace;
        const Eigen::MatrixXd& kv = batch_jet_forward(
            p.k_net, (p.k_in_scale * uv.array() + p.k_in_offset).matrix(), value_spec, ktrace);
        Eigen::MatrixXd d = kv.row(0) - tgt;
        result.sum_sq += d.squaredNorm();
        Eigen::MatrixXd sadj =
            batch_jet_backward(p.k_net, ktrace, task.coef * d, value_spec, result.k_grad);
        batch_jet_backward(p.u_net, utrace, p.k_in_scale * sadj, value_spec, result.u_grad);
      }
      break;
    }
    case TermTag::DataU:
    case TermTag::Dirichlet: {
      const auto& src_pts = task.tag == TermTag::DataU ? ms.u_points : ms.dirichlet_points;
      const auto& src_val = task.tag == TermTag::DataU ? ms.u_values : ms.dirichlet_values;
      const Eigen::Matrix2Xd pts = gather_points(src_pts, task.begin, task.end);
      BatchTrace trace;
      const Eigen::MatrixXd& uv = batch_jet_forward(
          p.u_net, batch_spatial_seeds(pts, p.x_scale, p.x_offset, value_spec), value_spec,
          trace);
      Eigen::MatrixXd d = uv.row(0) - src_val.segment(task.begin, b).transpose();
      result.sum_sq += d.squaredNorm();
      batch_jet_backward(p.u_net, trace, task.coef * d, value_spec, result.u_grad);
      break;
    }
    case TermTag::NeumannMeas: {
      const Eigen::Matrix2Xd pts = gather_points(ms.neumann_points, task.begin, task.end);
      BatchTrace trace;
      const Eigen::MatrixXd& out = batch_jet_forward(
          p.u_net, batch_spatial_seeds(pts, p.x_scale, p.x_offset, grad_spec), grad_spec, trace);
      Eigen::RowVectorXd f(b);
      for (int i = 0; i < b; ++i) {
        const int dir = ms.neumann_directions[task.begin + i];
        f[i] = out(0, grad_spec.grad_col(dir) * b + i) - ms.neumann_values[task.begin + i];
      }
      result.sum_sq += f.squaredNorm();
      Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(1, grad_spec.comps() * b);
      for (int i = 0; i < b; ++i) {
        const int dir = ms.neumann_directions[task.begin + i];
        adj(0, grad_spec.grad_col(dir) * b + i) = task.coef * f[i];
      }
      batch_jet_backward(p.u_net, trace, adj, grad_spec, result.u_grad);
      break;
    }
    case TermTag::NeumannX1:
    case TermTag::NeumannX2: {
      const int dir = task.tag == TermTag::NeumannX1 ? 0 : 1;
      const auto& src = dir == 0 ? cs.neumann_x1 : cs.neumann_x2;
      const double target = dir == 0 ? p.neumann_q : 0.0;
      const Eigen::Matrix2Xd pts = gather_points(src, task.begin, task.end);
      BatchTrace utrace;
      const Eigen::MatrixXd& uout = batch_jet_forward(
          p.u_net, batch_spatial_seeds(pts, p.x_scale, p.x_offset, grad_spec), grad_spec,
          utrace);
      const int gc = grad_spec.grad_col(dir);
      BatchTrace ktrace;
      const Eigen::MatrixXd& kv = batch_jet_forward(
          p.k_net, (p.k_in_scale * jet_comp(uout, 0, b).array() + p.k_in_offset).matrix(),
          value_spec, ktrace);
      Eigen::ArrayXXd f = -(kv.array() * jet_comp(uout, gc, b).array()) - target;
      result.sum_sq += f.matrix().squaredNorm();
      Eigen::ArrayXXd fbar = task.coef * f;
      Eigen::MatrixXd sadj = batch_jet_backward(
          p.k_net, ktrace, (-(fbar * jet_comp(uout, gc, b).array())).matrix(), value_spec,
          result.k_grad);
      Eigen::MatrixXd uadj = Eigen::MatrixXd::Zero(1, grad_spec.comps() * b);
      jet_comp(uadj, 0, b) = p.k_in_scale * sadj;
      jet_comp(uadj, gc, b) = (-(fbar * kv.array())).matrix();
      batch_jet_backward(p.u_net, utrace, uadj, grad_spec, result.u_grad);
      break;
    }
    case TermTag::Residual: {
      const Eigen::Matrix2Xd pts = gather_points(cs.interior, task.begin, task.end);
      BatchTrace utrace;
      const Eigen::MatrixXd& u = batch_jet_forward(
          p.u_net, batch_spatial_seeds(pts, p.x_scale, p.x_offset, full_spec), full_spec,
          utrace);
      const int g0 = full_spec.grad_col(0), g1 = full_spec.grad_col(1);
      const int h00 = full_spec.hess_col(0, 0), h11 = full_spec.hess_col(1, 1);
      auto ucomp = [&](int c) { return jet_comp(u, c, b).array(); };

      BatchTrace ktrace;
      const Eigen::MatrixXd* k = nullptr;
      if (p.kind == ProblemKind::LinearK) {
        k = &batch_jet_forward(p.k_net,
                               batch_spatial_seeds(pts, p.x_scale, p.x_offset, full_spec),
                               full_spec, ktrace);
      } else {
        Eigen::MatrixXd kseeds = p.k_in_scale * u;
        jet_comp(kseeds, 0, b).array() += p.k_in_offset;
        k = &batch_jet_forward(p.k_net, std::move(kseeds), full_spec, ktrace);
      }
      auto kcomp = [&](int c) { return jet_comp(*k, c, b).array(); };

      Eigen::ArrayXXd lap = ucomp(h00) + ucomp(h11);
      Eigen::ArrayXXd r = kcomp(g0) * ucomp(g0) + kcomp(g1) * ucomp(g1) + kcomp(0) * lap;
      result.sum_sq += r.matrix().squaredNorm();
      Eigen::ArrayXXd rbar = task.coef * r;

      Eigen::MatrixXd kadj = Eigen::MatrixXd::Zero(1, full_spec.comps() * b);
      jet_comp(kadj, 0, b) = (rbar * lap).matrix();
      jet_comp(kadj, g0, b) = (rbar * ucomp(g0)).matrix();
      jet_comp(kadj, g1, b) = (rbar * ucomp(g1)).matrix();
      Eigen::ArrayXXd kv = kcomp(0), kg0 = kcomp(g0), kg1 = kcomp(g1);
      Eigen::MatrixXd sadj = batch_jet_backward(p.k_net, ktrace, kadj, full_spec, result.k_grad);

      Eigen::MatrixXd uadj = Eigen::MatrixXd::Zero(1, full_spec.comps() * b);
      jet_comp(uadj, g0, b) = (rbar * kg0).matrix();
      jet_comp(uadj, g1, b) = (rbar * kg1).matrix();
      jet_comp(uadj, h00, b) = (rbar * kv).matrix();
      jet_comp(uadj, h11, b) = (rbar * kv).matrix();
      if (p.kind == ProblemKind::NonlinearKU) {
        uadj += p.k_in_scale * sadj;
      }
      batch_jet_backward(p.u_net, utrace, uadj, full_spec, result.u_grad);
      break;
    }
  }
}

void add_tasks(std::vector<BlockTask>& tasks, TermTag tag, int count, double weight,
               int block_size) {
  if (count <= 0) return;
  const double coef = 2.0 * weight / count;
  for (int begin = 0; begin < count; begin += block_size) {
    tasks.push_back(BlockTask{tag, begin, std::min(begin + block_size, count), coef});
  }
}

} // namespace

LossAndGrad loss_gradient_blocked(const PinnProblem& problem, const MeasurementSet& measurements,
                                  const CollocationSet& collocation, const LossSpec& spec,
                                  int block_size) {
  spec.validate();
  measurements.validate(problem.Lx, problem.Ly);
  if (block_size <= 0) throw std::invalid_argument("loss_gradient_blocked: block size");

  auto require = [](bool nonempty, const char* term) {
    if (!nonempty) {
      throw std::invalid_argument(std::string("loss_gradient: enabled ") + term +
                                  " term has no points");
    }
  };

  std::vector<BlockTask> tasks;
  if (spec.use_data_k) {
    require(measurements.n_k() > 0, "data-K");
    add_tasks(tasks, TermTag::DataK, measurements.n_k(), spec.w_data_k, block_size);
  }
  if (spec.use_data_u) {
    require(measurements.n_u() > 0, "data-u");
    add_tasks(tasks, TermTag::DataU, measurements.n_u(), spec.w_data_u, block_size);
  }
  if (spec.use_dirichlet) {
    require(measurements.n_dirichlet() > 0, "Dirichlet");
    add_tasks(tasks, TermTag::Dirichlet, measurements.n_dirichlet(), spec.w_dirichlet,
              block_size);
  }
  if (spec.use_neumann) {
    if (problem.kind == ProblemKind::LinearK) {
      require(measurements.n_neumann() > 0, "Neumann");
      add_tasks(tasks, TermTag::NeumannMeas, measurements.n_neumann(), spec.w_neumann,
                block_size);
    } else {
      require(!collocation.neumann_x1.empty() || !collocation.neumann_x2.empty(), "Neumann");
      add_tasks(tasks, TermTag::NeumannX1, static_cast<int>(collocation.neumann_x1.size()),
                spec.w_neumann, block_size);
      add_tasks(tasks, TermTag::NeumannX2, static_cast<int>(collocation.neumann_x2.size()),
                spec.w_neumann, block_size);
    }
  }
  if (spec.use_residual) {
    require(collocation.n_interior() > 0, "residual");
    add_tasks(tasks, TermTag::Residual, collocation.n_interior(), spec.w_residual, block_size);
  }

  std::vector<BlockResult> results;
  results.reserve(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    results.emplace_back(problem.u_net, problem.k_net);
  }

#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < static_cast<int>(tasks.size()); ++t) {
    run_block(problem, measurements, collocation, tasks[t], results[t]);
  }

  // Deterministic reduction in task order, independent of thread count.
  LossAndGrad out;
  MlpGradient u_total(problem.u_net);
  MlpGradient k_total(problem.k_net);
  double sums[7] = {0, 0, 0, 0, 0, 0, 0};
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    sums[static_cast<int>(tasks[t].tag)] += results[t].sum_sq;
    for (std::size_t l = 0; l < u_total.weight_grads.size(); ++l) {
      u_total.weight_grads[l] += results[t].u_grad.weight_grads[l];
      u_total.bias_grads[l] += results[t].u_grad.bias_grads[l];
    }
    for (std::size_t l = 0; l < k_total.weight_grads.size(); ++l) {
      k_total.weight_grads[l] += results[t].k_grad.weight_grads[l];
      k_total.bias_grads[l] += results[t].k_grad.bias_grads[l];
    }
  }

  auto mean = [](double sum, int n) { return n > 0 ? sum / n : 0.0; };
  out.breakdown.data_k = mean(sums[static_cast<int>(TermTag::DataK)], measurements.n_k());
  out.breakdown.data_u = mean(sums[static_cast<int>(TermTag::DataU)], measurements.n_u());
  out.breakdown.dirichlet =
      mean(sums[static_cast<int>(TermTag::Dirichlet)], measurements.n_dirichlet());
  if (problem.kind == ProblemKind::LinearK) {
    out.breakdown.neumann =
        mean(sums[static_cast<int>(TermTag::NeumannMeas)], measurements.n_neumann());
  } else {
    out.breakdown.neumann =
        mean(sums[static_cast<int>(TermTag::NeumannX1)],
             static_cast<int>(collocation.neumann_x1.size())) +
        mean(sums[static_cast<int>(TermTag::NeumannX2)],
             static_cast<int>(collocation.neumann_x2.size()));
  }
  out.breakdown.residual =
      mean(sums[static_cast<int>(TermTag::Residual)], collocation.n_interior());
  out.breakdown.total =
      (spec.use_data_k ? spec.w_data_k * out.breakdown.data_k : 0.0) +
      (spec.use_data_u ? spec.w_data_u * out.breakdown.data_u : 0.0) +
      (spec.use_dirichlet ? spec.w_dirichlet * out.breakdown.dirichlet : 0.0) +
      (spec.use_neumann ? spec.w_neumann * out.breakdown.neumann : 0.0) +
      (spec.use_residual ? spec.w_residual * out.breakdown.residual : 0.0);

  out.u_grad = u_total.flatten();
  out.k_grad = k_total.flatten();
  return out;
}

} // namespace pinnflow
