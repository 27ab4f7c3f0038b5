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

#include "pinnflow/richards.hpp"

#include <doctest.h>

#include <cmath>

using namespace pinnflow;

TEST_CASE("van Genuchten closure") {
  VanGenuchtenParams p; // the reference parameter set
  SUBCASE("saturated limit") {
    CHECK(van_genuchten_saturation(p.ug, p) == 1.0);
    CHECK(van_genuchten_K(p.ug, p) == p.Ks);
    CHECK(van_genuchten_K(p.ug + 5.0, p) == p.Ks);
  }
  SUBCASE("dry limit") {
    CHECK(van_genuchten_saturation(-1e8, p) < 1e-6);
    CHECK(van_genuchten_K(-1e8, p) < 1e-12 * p.Ks);
  }
  SUBCASE("reference point evaluates the printed formulas") {
    // alpha (ug - u) = 1 at u = -10, so s = 2^(-m); K follows directly.
    const double s = std::pow(2.0, -p.m);
    CHECK(van_genuchten_saturation(-10.0, p) == doctest::Approx(s).epsilon(1e-14));
    CHECK(s == doctest::Approx(0.7224).epsilon(1e-3));
    const double inner = 1.0 - std::pow(1.0 - std::pow(s, 1.0 / p.m), p.m);
    const double k_expected = p.Ks * std::sqrt(s) * inner * inner;
    CHECK(van_genuchten_K(-10.0, p) == doctest::Approx(k_expected).epsilon(1e-14));
    CHECK(k_expected / p.Ks == doctest::Approx(0.0655).epsilon(0.01));
  }
  SUBCASE("monotone non-decreasing in u") {
    double prev = van_genuchten_K(-50.0, p);
    for (int i = 1; i <= 1000; ++i) {
      const double u = -50.0 + 50.0 * i / 1000.0;
      const double cur = van_genuchten_K(u, p);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
  SUBCASE("invalid parameters are rejected") {
    VanGenuchtenParams bad = p;
    bad.m = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.Ks = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("zero influx relaxes to the Dirichlet value") {
  Grid2D grid(16, 16, 10.0, 10.0);
  VanGenuchtenParams p;
  p.q = 0.0;
  Field u = fv_solve_vangenuchten(grid, p);
  CHECK((u.values.array() - p.u0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("reference scenario") {
  Grid2D grid(32, 32, 10.0, 10.0);
  VanGenuchtenParams p;
  PicardReport report;
  Field u = fv_solve_vangenuchten(grid, p, {}, &report);
  REQUIRE(report.converged);

  SUBCASE("solution is independent of x2") {
    for (int i = 0; i < grid.nx; ++i) {
      double lo = u(i, 0), hi = u(i, 0);
      for (int j = 1; j < grid.ny; ++j) {
        lo = std::min(lo, u(i, j));
        hi = std::max(hi, u(i, j));
      }
      CHECK(hi - lo <= 1e-8);
    }
  }

  SUBCASE("every vertical cross-section carries the boundary influx") {
    Eigen::VectorXd k(grid.cell_count());
    for (int c = 0; c < grid.cell_count(); ++c) k[c] = van_genuchten_K(u.values[c], p);
    const double target = p.q * grid.Ly;
    for (int i = 0; i + 1 < grid.nx; ++i) {
      const double flux =
          cross_section_flux_x(grid, k, u.values, i, FaceAverage::Arithmetic);
      CHECK(std::abs(flux - target) <= 1e-6 * target);
    }
  }

  SUBCASE("Picard updates decrease monotonically after the initial phase") {
    for (std::size_t i = 5; i + 1 < report.update_norms.size(); ++i) {
      CHECK(report.update_norms[i + 1] <= report.update_norms[i]);
    }
  }

  SUBCASE("pressure spans a usable range for constitutive learning") {
    // Cell centers sit half a cell away from the Dirichlet boundary, so
    // the minimum stays slightly above u0.
    CHECK(u.values.minCoeff() >= p.u0);
    CHECK(u.values.minCoeff() <= p.u0 + 0.5);
    CHECK(u.values.maxCoeff() > p.u0 + 1.0);
  }
}

TEST_CASE("Picard failure paths") {
  Grid2D grid(8, 8, 10.0, 10.0);
  VanGenuchtenParams p;
  PicardConfig config;
  config.max_iterations = 1;
  CHECK_THROWS_AS(fv_solve_vangenuchten(grid, p, config), std::runtime_error);
}
