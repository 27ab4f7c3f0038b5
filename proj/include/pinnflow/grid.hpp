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

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace pinnflow {

enum class Edge { XMin, XMax, YMin, YMax };

/// Regular cell-centered mesh on (0,Lx) x (0,Ly). Cells are indexed
/// row-major with j (the x2 row) outer: cell(i,j) = j*nx + i.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double Lx = 1.0;
  double Ly = 1.0;

  Grid2D() = default;
  Grid2D(int nx_, int ny_, double Lx_ = 1.0, double Ly_ = 1.0);

  int cell_count() const { return nx * ny; }
  double hx() const { return Lx / nx; }
  double hy() const { return Ly / ny; }
  double cell_area() const { return hx() * hy(); }

  int cell_index(int i, int j) const { return j * nx + i; }
  Eigen::Vector2d centroid(int i, int j) const {
    return {(i + 0.5) * hx(), (j + 0.5) * hy()};
  }
  Eigen::Vector2d centroid(int cell) const { return centroid(cell % nx, cell / nx); }

  /// Interior faces: 2*nx*ny - nx - ny in total.
  int x_face_count() const { return (nx - 1) * ny; }
  int y_face_count() const { return nx * (ny - 1); }

  bool operator==(const Grid2D& other) const = default;
};

/// Scalar value per cell of a Grid2D.
struct Field {
  Grid2D grid;
  Eigen::VectorXd values;

  Field() = default;
  Field(const Grid2D& g, double fill = 0.0)
      : grid(g), values(Eigen::VectorXd::Constant(g.cell_count(), fill)) {}
  Field(const Grid2D& g, Eigen::VectorXd v);

  double& operator()(int i, int j) { return values[grid.cell_index(i, j)]; }
  double operator()(int i, int j) const { return values[grid.cell_index(i, j)]; }

  Field exp() const;
  Field log() const;

  /// Format: line 1 "nx ny Lx Ly", then nx*ny values row-major (j outer,
  /// i inner), one per line, 17 significant digits.
  void save_file(const std::string& path) const;
  static Field load_file(const std::string& path);
};

/// Point observations, one "x y value" triple per line.
struct PointValues {
  std::vector<Eigen::Vector2d> points;
  Eigen::VectorXd values;

  int size() const { return static_cast<int>(points.size()); }
  void save_file(const std::string& path) const;
  static PointValues load_file(const std::string& path);
};

} // namespace pinnflow
