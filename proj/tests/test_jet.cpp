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

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pinnflow;

namespace {

constexpr double kFdStep = 1e-5;

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

} // namespace

TEST_CASE("jet of the zero network is zero") {
  MlpParams params({2, 10, 10, 1});
  Eigen::VectorXd x(2);
  x << 0.4, 0.9;
  Jet2 jet = eval_jet(params, x);
  CHECK(jet.value == 0.0);
  CHECK(jet.grad.norm() == 0.0);
  CHECK(jet.hess.norm() == 0.0);
}

TEST_CASE("single tanh unit matches the closed form") {
  // u = w2 tanh(w1 x + b1) + b2, so du/dx = w2 w1 (1 - tanh^2(w1 x + b1)).
  MlpParams params({1, 1, 1});
  const double w1 = 0.8, b1 = -0.3, w2 = 1.7, b2 = 0.5;
  params.weight(0)(0, 0) = w1;
  params.bias(0)[0] = b1;
  params.weight(1)(0, 0) = w2;
  params.bias(1)[0] = b2;

  Eigen::VectorXd x(1);
  x << 0.6;
  Jet2 jet = eval_jet(params, x);
  const double t = std::tanh(w1 * x[0] + b1);
  CHECK(jet.value == doctest::Approx(w2 * t + b2).epsilon(1e-15));
  CHECK(jet.grad[0] == doctest::Approx(w2 * w1 * (1 - t * t)).epsilon(1e-14));
  CHECK(jet.hess(0, 0) ==
        doctest::Approx(w2 * w1 * w1 * (-2 * t) * (1 - t * t)).epsilon(1e-13));
}

TEST_CASE("value equals forward bit for bit") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    MlpParams params = MlpParams::xavier({2, 13, 9, 1}, rng());
    Eigen::VectorXd x = Eigen::VectorXd::Random(2);
    CHECK(eval_jet(params, x).value == mlp_forward(params, x));
  }
}

TEST_CASE("Hessian is exactly symmetric") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 25; ++trial) {
    MlpParams params = MlpParams::xavier({2, 11, 11, 1}, rng());
    Eigen::VectorXd x = Eigen::VectorXd::Random(2);
    Jet2 jet = eval_jet(params, x);
    CHECK(jet.hess(0, 1) == jet.hess(1, 0));
  }
}

TEST_CASE("finite differences confirm gradient and Hessian") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MlpParams params = MlpParams::xavier({2, 8, 8, 1}, rng());
    Eigen::VectorXd x(2);
    x << uni(rng), uni(rng);
    Jet2 jet = eval_jet(params, x);
    for (int d = 0; d < 2; ++d) {
      Eigen::VectorXd xp = x, xm = x;
      xp[d] += kFdStep;
      xm[d] -= kFdStep;
      const double fd = (mlp_forward(params, xp) - mlp_forward(params, xm)) / (2 * kFdStep);
      if (std::abs(jet.grad[d]) > 1e-8) {
        CHECK(rel_err(fd, jet.grad[d]) < 1e-6);
        ++checked;
      }
      // Second derivatives from differenced first derivatives.
      for (int e = 0; e < 2; ++e) {
        const double fd2 =
            (eval_jet(params, xp).grad[e] - eval_jet(params, xm).grad[e]) / (2 * kFdStep);
        if (std::abs(jet.hess(e, d)) > 1e-8) {
          CHECK(rel_err(fd2, jet.hess(e, d)) < 1e-6);
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 300); // the magnitude filter must not hollow the test out
}

TEST_CASE("input dimension mismatch throws") {
  MlpParams params = MlpParams::xavier({2, 4, 1}, 0);
  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK_THROWS_AS(eval_jet(params, x), std::invalid_argument);
}
