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

// Times the loss-plus-gradient kernels: the serial per-point reference
// against the blocked OpenMP path, for growing collocation counts.

#include "pinnflow/loss_grad.hpp"
#include "pinnflow/sampling.hpp"
#include "pinnflow/trainer.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cstdio>
#include <functional>

using namespace pinnflow;

namespace {

double time_ms(const std::function<double()>& fn, int min_reps) {
  double sink = 0.0;
  // warm-up
  sink += fn();
  const auto t0 = std::chrono::steady_clock::now();
  int reps = 0;
  double elapsed = 0.0;
  while (reps < min_reps || elapsed < 0.5) {
    sink += fn();
    ++reps;
    elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  if (sink == -1.0) std::printf("impossible\n");
  return elapsed / reps * 1000.0;
}

} // namespace

int main() {
  Grid2D grid(32, 32);
  PinnProblem problem;
  problem.kind = ProblemKind::LinearK;
  problem.u_net = MlpParams::xavier({2, 50, 50, 1}, 1);
  problem.k_net = MlpParams::xavier({2, 50, 50, 1}, 2);
  problem.normalize_spatial_inputs();

  LinearSetup setup = LinearSetup::generate(grid, GpConfig{1.0, 0.15, 7});
  MeasurementSet ms = sample_linear_measurements(setup, 250, 100, 5);

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("%8s %14s %14s %9s\n", "N_c", "reference(ms)", "blocked(ms)", "speedup");

  LossSpec spec;
  for (int n_c : {128, 256, 512, 1024, 2048}) {
    CollocationSet cs = collocation_lhs(grid, n_c, 11);
    const double t_ref = time_ms(
        [&] { return loss_gradient_reference(problem, ms, cs, spec).breakdown.total; }, 3);
    const double t_blk = time_ms(
        [&] { return loss_gradient_blocked(problem, ms, cs, spec).breakdown.total; }, 3);
    std::printf("%8d %14.2f %14.2f %8.2fx\n", n_c, t_ref, t_blk, t_ref / t_blk);
  }

  // Gradient agreement between the two paths on the largest case.
  CollocationSet cs = collocation_lhs(grid, 2048, 11);
  LossAndGrad a = loss_gradient_reference(problem, ms, cs, spec);
  LossAndGrad b = loss_gradient_blocked(problem, ms, cs, spec);
  std::printf("gradient agreement (rel): %.3e\n",
              (a.u_grad - b.u_grad).norm() / a.u_grad.norm());
  return 0;
}
