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

#include "pinnflow/grid.hpp"
#include "pinnflow/mlp.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

using namespace pinnflow;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("pinnflow_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("grid geometry") {
  Grid2D grid(32, 32);
  CHECK(grid.cell_count() == 1024);
  CHECK(grid.centroid(0, 0).x() == doctest::Approx(0.5 / 32).epsilon(1e-15));
  CHECK(grid.centroid(31, 31).y() == doctest::Approx(31.5 / 32).epsilon(1e-15));
  CHECK(grid.cell_area() == doctest::Approx(1.0 / 1024).epsilon(1e-15));
  CHECK(grid.x_face_count() + grid.y_face_count() == 2 * 32 * 32 - 32 - 32);
  CHECK_THROWS_AS(Grid2D(0, 4), std::invalid_argument);
  CHECK_THROWS_AS(Grid2D(4, 4, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("field files round-trip exactly") {
  TempDir dir;
  Grid2D grid(6, 5, 2.0, 3.0);
  Field field(grid);
  std::mt19937_64 rng(33);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < grid.cell_count(); ++c) field.values[c] = normal(rng);

  const std::string path = dir.file("field.txt");
  field.save_file(path);
  Field loaded = Field::load_file(path);
  CHECK(loaded.grid == grid);
  CHECK((loaded.values - field.values).norm() == 0.0); // 17 digits round-trip doubles

  CHECK_THROWS_AS(Field::load_file(dir.file("missing.txt")), std::runtime_error);
}

TEST_CASE("measurement files round-trip exactly") {
  TempDir dir;
  PointValues pv;
  std::mt19937_64 rng(35);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < 9; ++i) pv.points.emplace_back(normal(rng), normal(rng));
  pv.values.resize(9);
  for (int i = 0; i < 9; ++i) pv.values[i] = normal(rng);

  const std::string path = dir.file("meas.txt");
  pv.save_file(path);
  PointValues loaded = PointValues::load_file(path);
  REQUIRE(loaded.size() == pv.size());
  for (int i = 0; i < 9; ++i) {
    CHECK(loaded.points[i] == pv.points[i]);
    CHECK(loaded.values[i] == pv.values[i]);
  }
}

TEST_CASE("network parameter files round-trip exactly") {
  TempDir dir;
  MlpParams params = MlpParams::xavier({2, 50, 50, 1}, 77);
  const std::string path = dir.file("net.txt");
  params.save_file(path);
  CHECK(MlpParams::load_file(path) == params);
}
