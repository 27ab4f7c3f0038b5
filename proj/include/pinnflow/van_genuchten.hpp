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

namespace pinnflow {

/// van Genuchten closure for unsaturated conductivity: saturation s(u) and
/// conductivity K(s). Units: Ks and q in m/s, alpha in 1/m, heads in m.
struct VanGenuchtenParams {
  double Ks = 8.25e-4;
  double alpha = 0.1;
  double m = 0.469;
  double ug = 0.0;    // gas-pressure head; u above it counts as saturated
  double u0 = -10.0;  // Dirichlet pressure head of the reference scenario
  double q = 8.25e-5; // boundary influx of the reference scenario

  void validate() const;
};

/// Effective saturation: s = [1 + (alpha (ug-u))^(1/(1-m))]^(-m) for u <= ug,
/// 1 on the saturated branch.
double van_genuchten_saturation(double u, const VanGenuchtenParams& p);

/// Conductivity K(s(u)) = Ks s^(1/2) [1 - (1 - s^(1/m))^m]^2; equals Ks for
/// u > ug.
double van_genuchten_K(double u, const VanGenuchtenParams& p);

} // namespace pinnflow
