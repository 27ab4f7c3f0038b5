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

#include "pinnflow/van_genuchten.hpp"

#include <cmath>
#include <stdexcept>

namespace pinnflow {

void VanGenuchtenParams::validate() const {
  if (Ks <= 0.0) throw std::invalid_argument("VanGenuchtenParams: Ks must be positive");
  if (m <= 0.0 || m >= 1.0) throw std::invalid_argument("VanGenuchtenParams: m must lie in (0,1)");
  if (alpha <= 0.0) throw std::invalid_argument("VanGenuchtenParams: alpha must be positive");
}

double van_genuchten_saturation(double u, const VanGenuchtenParams& p) {
  if (u >= p.ug) return 1.0;
  const double head = p.alpha * (p.ug - u);
  return std::pow(1.0 + std::pow(head, 1.0 / (1.0 - p.m)), -p.m);
}

double van_genuchten_K(double u, const VanGenuchtenParams& p) {
  if (u >= p.ug) return p.Ks;
  const double s = van_genuchten_saturation(u, p);
  const double inner = 1.0 - std::pow(1.0 - std::pow(s, 1.0 / p.m), p.m);
  return p.Ks * std::sqrt(s) * inner * inner;
}

} // namespace pinnflow
