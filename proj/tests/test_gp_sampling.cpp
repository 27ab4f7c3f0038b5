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

#include "pinnflow/gaussian_field.hpp"
#include "pinnflow/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace pinnflow;

TEST_CASE("vanishing sigma gives a vanishing field") {
  Grid2D grid(8, 8);
  Field f = sample_gp_lnk(grid, GpConfig{1e-12, 0.15, 3});
  CHECK(f.values.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fixed seed reproduces the field bit for bit") {
  Grid2D grid(12, 12);
  Field a = sample_gp_lnk(grid, GpConfig{1.0, 0.15, 42});
  Field b = sample_gp_lnk(grid, GpConfig{1.0, 0.15, 42});
  CHECK((a.values - b.values).norm() == 0.0);
  Field c = sample_gp_lnk(grid, GpConfig{1.0, 0.15, 43});
  CHECK((a.values - c.values).norm() > 0.0);
}

TEST_CASE("sample statistics track the covariance model") {
  // Light version of the acceptance check: averaged variance over cells
  // and the correlation at a two-cell offset (distance 0.125 on this
  // grid, model correlation exp(-0.125^2 / (2 * 0.15^2)) = 0.707).
  Grid2D grid(16, 16);
  GpSampler sampler(grid, 1.0, 0.15);
  const int n_draws = 100;
  Eigen::MatrixXd draws(grid.cell_count(), n_draws);
  for (int d = 0; d < n_draws; ++d) {
    draws.col(d) = sampler.sample(1000 + d).values;
  }
  Eigen::VectorXd mean = draws.rowwise().mean();
  Eigen::MatrixXd centered = draws.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  CHECK(var.mean() == doctest::Approx(1.0).epsilon(0.15));

  const int offset = 2;
  const double dist = offset * grid.hx();
  double corr_sum = 0.0;
  int pairs = 0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i + offset < grid.nx; ++i) {
      const int a = grid.cell_index(i, j);
      const int b = grid.cell_index(i + offset, j);
      const double cov = (centered.row(a).array() * centered.row(b).array()).mean();
      corr_sum += cov / std::sqrt(var[a] * var[b]);
      ++pairs;
    }
  }
  const double model = std::exp(-dist * dist / (2 * 0.15 * 0.15));
  CHECK(corr_sum / pairs == doctest::Approx(model).epsilon(0.15));
}

TEST_CASE("invalid covariance parameters are rejected") {
  Grid2D grid(4, 4);
  CHECK_THROWS_AS(GpSampler(grid, 0.0, 0.15), std::invalid_argument);
  CHECK_THROWS_AS(GpSampler(grid, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("centroid sampling draws distinct cells") {
  Grid2D grid(8, 8);
  SUBCASE("full draw returns every centroid exactly once") {
    auto pts = sample_measurement_locations(grid, 64, 5, SamplingScheme::RandomCentroids);
    std::set<std::pair<double, double>> unique;
    for (const auto& p : pts) unique.insert({p.x(), p.y()});
    CHECK(unique.size() == 64);
  }
  SUBCASE("deterministic for a fixed seed") {
    auto a = sample_measurement_locations(grid, 10, 9, SamplingScheme::RandomCentroids);
    auto b = sample_measurement_locations(grid, 10, 9, SamplingScheme::RandomCentroids);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
  SUBCASE("oversampling throws") {
    CHECK_THROWS_AS(sample_measurement_locations(grid, 65, 0, SamplingScheme::RandomCentroids),
                    std::invalid_argument);
  }
}

TEST_CASE("Latin hypercube places one point per stratum per axis") {
  Grid2D grid(8, 8, 2.0, 3.0);
  const int n = 17;
  auto pts = sample_measurement_locations(grid, n, 21, SamplingScheme::LatinHypercube);
  std::vector<int> x_strata(n, 0), y_strata(n, 0);
  for (const auto& p : pts) {
    x_strata[static_cast<int>(p.x() / grid.Lx * n)] += 1;
    y_strata[static_cast<int>(p.y() / grid.Ly * n)] += 1;
  }
  CHECK(std::all_of(x_strata.begin(), x_strata.end(), [](int c) { return c == 1; }));
  CHECK(std::all_of(y_strata.begin(), y_strata.end(), [](int c) { return c == 1; }));
}

TEST_CASE("multiplicative noise") {
  Eigen::VectorXd values = Eigen::VectorXd::Constant(10000, 1.0);
  SUBCASE("zero level is the identity") {
    CHECK((add_noise(values, 0.0, 3) - values).norm() == 0.0);
  }
  SUBCASE("fixed seed reproduces") {
    CHECK((add_noise(values, 0.01, 3) - add_noise(values, 0.01, 3)).norm() == 0.0);
  }
  SUBCASE("one-percent level perturbs with one-percent spread") {
    Eigen::VectorXd noisy = add_noise(values, 0.01, 11);
    Eigen::VectorXd delta = noisy - values;
    const double std_dev = std::sqrt(delta.squaredNorm() / delta.size());
    CHECK(std_dev >= 0.0095);
    CHECK(std_dev <= 0.0105);
  }
  SUBCASE("negative level throws") {
    CHECK_THROWS_AS(add_noise(values, -0.1, 0), std::invalid_argument);
  }
}
