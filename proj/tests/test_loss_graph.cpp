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

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pinnflow;

namespace {

std::vector<Eigen::Vector2d> random_points(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.05, 0.95);
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(n);
  for (int i = 0; i < n; ++i) pts.emplace_back(uni(rng), uni(rng));
  return pts;
}

double residual_loss(const MlpParams& u, const MlpParams& k,
                     const std::vector<Eigen::Vector2d>& pts) {
  double total = 0.0;
  for (const auto& p : pts) {
    Jet2 uj = eval_jet(u, p);
    Jet2 kj = eval_jet(k, p);
    const double r = kj.grad.dot(uj.grad) + kj.value * (uj.hess(0, 0) + uj.hess(1, 1));
    total += r * r;
  }
  return total;
}

LossGraph::Var build_residual_loss(LossGraph& g, const std::vector<int>& nets,
                                   const std::vector<Eigen::Vector2d>& pts) {
  LossGraph::Var total = g.constant(0.0);
  for (const auto& p : pts) {
    auto uj = g.net_jet(nets[0], p, JetMode::Full);
    auto kj = g.net_jet(nets[1], p, JetMode::Full);
    auto dot = g.add(g.mul(kj.grad_at(0), uj.grad_at(0)), g.mul(kj.grad_at(1), uj.grad_at(1)));
    auto lap = g.add(uj.hess_at(0, 0), uj.hess_at(1, 1));
    auto r = g.add(dot, g.mul(kj.value, lap));
    total = g.add(total, g.square(r));
  }
  return total;
}

} // namespace

TEST_CASE("stationary at an exact data fit") {
  // loss = (f(x0) - c)^2 with c = f(x0): gradient must vanish.
  MlpParams net = MlpParams::xavier({2, 6, 1}, 3);
  Eigen::Vector2d x0(0.3, 0.8);
  const double c = mlp_forward(net, Eigen::VectorXd(x0));

  const MlpParams* nets[1] = {&net};
  double loss = -1.0;
  auto grads = loss_param_gradient(
      [&](LossGraph& g, const std::vector<int>& hs) {
        auto v = g.net_value(hs[0], x0);
        return g.square(g.add_const(v, -c));
      },
      nets, &loss);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-30));
  CHECK(grads[0].norm() <= 1e-12);
}

TEST_CASE("residual loss gradient matches finite differences") {
  MlpParams u_net = MlpParams::xavier({2, 8, 8, 1}, 11);
  MlpParams k_net = MlpParams::xavier({2, 8, 8, 1}, 12);
  auto pts = random_points(10, 7);

  const MlpParams* nets[2] = {&u_net, &k_net};
  auto grads = loss_param_gradient(
      [&](LossGraph& g, const std::vector<int>& hs) { return build_residual_loss(g, hs, pts); },
      nets);

  const double h = 1e-5;
  int checked = 0;
  for (int which = 0; which < 2; ++which) {
    MlpParams& target = which ? k_net : u_net;
    Eigen::VectorXd flat = target.flatten();
    for (int i = 0; i < flat.size(); i += 5) {
      Eigen::VectorXd fp = flat, fm = flat;
      fp[i] += h;
      fm[i] -= h;
      MlpParams tp = target, tm = target;
      tp.unflatten(fp);
      tm.unflatten(fm);
      const double fd = which ? (residual_loss(u_net, tp, pts) - residual_loss(u_net, tm, pts))
                              : (residual_loss(tp, k_net, pts) - residual_loss(tm, k_net, pts));
      const double grad_fd = fd / (2 * h);
      const double grad_an = grads[which].flat[i];
      if (std::abs(grad_an) > 1e-8) {
        CHECK(std::abs(grad_fd - grad_an) / std::abs(grad_an) < 1e-5);
        ++checked;
      }
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("affine network recovers the least-squares gradient") {
  // f(x) = w.x + b with quadratic data loss: the gradient has the closed
  // form 2 X^T (X w + b - y) (plus the bias row).
  MlpParams net = MlpParams::xavier({2, 1}, 21);
  auto pts = random_points(12, 9);
  Eigen::VectorXd y(12);
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < 12; ++i) y[i] = uni(rng);

  const MlpParams* nets[1] = {&net};
  auto grads = loss_param_gradient(
      [&](LossGraph& g, const std::vector<int>& hs) {
        LossGraph::Var total = g.constant(0.0);
        for (int i = 0; i < 12; ++i) {
          auto v = g.net_value(hs[0], pts[i]);
          total = g.add(total, g.square(g.add_const(v, -y[i])));
        }
        return total;
      },
      nets);

  const Eigen::VectorXd w = net.weight(0).row(0).transpose();
  const double b = net.bias(0)[0];
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < 12; ++i) {
    const double resid = w.dot(pts[i]) + b - y[i];
    expected[0] += 2 * resid * pts[i][0];
    expected[1] += 2 * resid * pts[i][1];
    expected[2] += 2 * resid;
  }
  CHECK((grads[0].flat - expected).norm() < 1e-12 * std::max(1.0, expected.norm()));
}

TEST_CASE("gradient is linear in the loss scale") {
  MlpParams u_net = MlpParams::xavier({2, 6, 6, 1}, 31);
  MlpParams k_net = MlpParams::xavier({2, 6, 6, 1}, 32);
  auto pts = random_points(5, 17);
  const MlpParams* nets[2] = {&u_net, &k_net};

  const double alpha = 3.75;
  auto base = loss_param_gradient(
      [&](LossGraph& g, const std::vector<int>& hs) { return build_residual_loss(g, hs, pts); },
      nets);
  auto scaled = loss_param_gradient(
      [&](LossGraph& g, const std::vector<int>& hs) {
        return g.scale(build_residual_loss(g, hs, pts), alpha);
      },
      nets);
  for (int n = 0; n < 2; ++n) {
    CHECK((scaled[n].flat - alpha * base[n].flat).norm() <=
          1e-14 * std::max(1.0, scaled[n].flat.norm()));
  }
}

TEST_CASE("non-finite loss is rejected") {
  MlpParams net = MlpParams::xavier({2, 4, 1}, 41);
  const MlpParams* nets[1] = {&net};
  CHECK_THROWS_AS(loss_param_gradient(
                      [&](LossGraph& g, const std::vector<int>& hs) {
                        auto v = g.net_value(hs[0], Eigen::Vector2d(0.1, 0.2));
                        return g.div(v, g.constant(0.0));
                      },
                      nets),
                  std::runtime_error);
}
