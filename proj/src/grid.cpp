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

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pinnflow {

Grid2D::Grid2D(int nx_, int ny_, double Lx_, double Ly_) : nx(nx_), ny(ny_), Lx(Lx_), Ly(Ly_) {
  if (nx <= 0 || ny <= 0 || Lx <= 0.0 || Ly <= 0.0) {
    throw std::invalid_argument("Grid2D: cell counts and extents must be positive");
  }
}

Field::Field(const Grid2D& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.cell_count()) {
    throw std::invalid_argument("Field: value count does not match grid");
  }
}

Field Field::exp() const {
  Field out = *this;
  out.values = values.array().exp();
  return out;
}

Field Field::log() const {
  Field out = *this;
  out.values = values.array().log();
  return out;
}

void Field::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("Field: cannot open " + path + " for writing");
  out << std::setprecision(17);
  out << grid.nx << ' ' << grid.ny << ' ' << grid.Lx << ' ' << grid.Ly << '\n';
  for (int c = 0; c < values.size(); ++c) {
    out << values[c] << '\n';
  }
}

Field Field::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Field: cannot open " + path);
  int nx = 0, ny = 0;
  double Lx = 0.0, Ly = 0.0;
  if (!(in >> nx >> ny >> Lx >> Ly)) {
    throw std::runtime_error("Field: malformed header in " + path);
  }
  Field field(Grid2D(nx, ny, Lx, Ly));
  for (int c = 0; c < field.values.size(); ++c) {
    if (!(in >> field.values[c])) {
      throw std::runtime_error("Field: truncated data in " + path);
    }
  }
  return field;
}

void PointValues::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("PointValues: cannot open " + path + " for writing");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << points[i].x() << ' ' << points[i].y() << ' ' << values[static_cast<int>(i)] << '\n';
  }
}

PointValues PointValues::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("PointValues: cannot open " + path);
  PointValues pv;
  std::vector<double> vals;
  double x = 0.0, y = 0.0, v = 0.0;
  while (in >> x >> y >> v) {
    pv.points.emplace_back(x, y);
    vals.push_back(v);
  }
  pv.values = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<int>(vals.size()));
  return pv;
}

} // namespace pinnflow
