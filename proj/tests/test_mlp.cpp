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

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace pinnflow;

namespace {

// Straight-line re-evaluation of the network, independent of the library's
// layer routines.
double naive_forward(const MlpParams& params, const Eigen::VectorXd& x) {
  std::vector<double> a(x.data(), x.data() + x.size());
  for (int l = 0; l < params.num_layers(); ++l) {
    const Eigen::MatrixXd& w = params.weight(l);
    std::vector<double> z(w.rows(), 0.0);
    for (int i = 0; i < w.rows(); ++i) {
      for (int j = 0; j < w.cols(); ++j) {
        z[i] += w(i, j) * a[j];
      }
      z[i] += params.bias(l)[i];
      if (l + 1 < params.num_layers()) z[i] = std::tanh(z[i]);
    }
    a = z;
  }
  return a[0];
}

} // namespace

TEST_CASE("xavier initialization") {
  SUBCASE("parameter count of the production architecture") {
    MlpParams params = MlpParams::xavier({2, 50, 50, 1}, 0);
    CHECK(params.parameter_count() == 2751); // 150 + 2550 + 51
    CHECK(params.flatten().size() == 2751);
  }
  SUBCASE("same seed gives bit-identical parameters") {
    MlpParams a = MlpParams::xavier({2, 50, 50, 1}, 1234);
    MlpParams b = MlpParams::xavier({2, 50, 50, 1}, 1234);
    CHECK(a == b);
    MlpParams c = MlpParams::xavier({2, 50, 50, 1}, 1235);
    CHECK_FALSE(a == c);
  }
  SUBCASE("minimal affine network has zero biases") {
    MlpParams params = MlpParams::xavier({1, 1}, 7);
    CHECK(params.parameter_count() == 2);
    CHECK(params.bias(0)[0] == 0.0);
  }
  SUBCASE("weight variance follows 2/(fan_in+fan_out)") {
    MlpParams params = MlpParams::xavier({100, 100, 1}, 3);
    const Eigen::MatrixXd& w = params.weight(0);
    const double var = w.array().square().mean();
    CHECK(var == doctest::Approx(2.0 / 200).epsilon(0.1));
  }
  SUBCASE("invalid architectures are rejected") {
    CHECK_THROWS_AS(MlpParams::xavier({2}, 0), std::invalid_argument);
    CHECK_THROWS_AS(MlpParams::xavier({2, 0, 1}, 0), std::invalid_argument);
    CHECK_THROWS_AS(MlpParams::xavier({-1, 1}, 0), std::invalid_argument);
  }
}

TEST_CASE("flatten round trip is the identity") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    MlpParams params = MlpParams::xavier({3, 7, 5, 1}, rng());
    Eigen::VectorXd flat = params.flatten();
    MlpParams rebuilt({3, 7, 5, 1});
    rebuilt.unflatten(flat);
    CHECK(params == rebuilt);
  }
  MlpParams params({2, 4, 1});
  CHECK_THROWS_AS(params.unflatten(Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("forward evaluation") {
  SUBCASE("all-zero parameters give zero output") {
    MlpParams params({2, 50, 50, 1});
    Eigen::VectorXd x(2);
    x << 0.3, -1.7;
    CHECK(mlp_forward(params, x) == 0.0);
  }
  SUBCASE("single affine layer adds its inputs") {
    MlpParams params({2, 1});
    params.weight(0) << 1.0, 1.0;
    Eigen::VectorXd x(2);
    x << 0.25, 0.5;
    CHECK(mlp_forward(params, x) == doctest::Approx(0.75).epsilon(1e-15));
  }
  SUBCASE("matches a straight-line re-evaluation") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      MlpParams params = MlpParams::xavier({2, 8, 1}, rng());
      Eigen::VectorXd x = Eigen::VectorXd::Random(2);
      CHECK(mlp_forward(params, x) == doctest::Approx(naive_forward(params, x)).epsilon(1e-14));
    }
  }
  SUBCASE("dimension mismatch throws") {
    MlpParams params({2, 4, 1});
    Eigen::VectorXd x(3);
    x.setZero();
    CHECK_THROWS_AS(mlp_forward(params, x), std::invalid_argument);
  }
}

TEST_CASE("parameter serialization round trip") {
  MlpParams params = MlpParams::xavier({2, 5, 3, 1}, 42);
  std::stringstream stream;
  params.save(stream);
  MlpParams loaded = MlpParams::load(stream);
  CHECK(params == loaded); // 17 significant digits reproduce doubles exactly
}
