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

#include "pinnflow/lbfgs.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <stdexcept>

namespace pinnflow {

std::string to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::GradientTolerance: return "gradient";
    case TerminationReason::LossChange: return "loss-change";
    case TerminationReason::MaxIterations: return "max-iter";
    case TerminationReason::LineSearchFailure: return "line-search-failure";
  }
  return "unknown";
}

void TrainReport::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("TrainReport: cannot open " + path);
  out << std::setprecision(17);
  out << "iteration,loss,grad_norm\n";
  for (std::size_t i = 0; i < loss_history.size(); ++i) {
    out << i << ',' << loss_history[i] << ',' << grad_norm_history[i] << '\n';
  }
}

namespace {

// Minimizer of the cubic through (a, fa, ga) and (b, fb, gb); NaN when the
// formula degenerates.
double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = gb - ga + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (gb + d2 - d1) / denom;
}

struct PhiPoint {
  double alpha = 0.0;
  double f = 0.0;
  double dphi = 0.0;
};

} // namespace

LineSearchResult wolfe_line_search(const ObjectiveWithGradient& objective,
                                   const Eigen::VectorXd& x, double f0,
                                   const Eigen::VectorXd& g0, const Eigen::VectorXd& direction,
                                   const LbfgsConfig& config, double initial_step) {
  const double dphi0 = g0.dot(direction);
  if (!(dphi0 < 0.0)) {
    throw std::invalid_argument("wolfe_line_search: not a descent direction");
  }
  const double c1 = config.wolfe_c1;
  const double c2 = config.wolfe_c2;

  LineSearchResult result;
  Eigen::VectorXd grad(x.size());

  auto eval = [&](double alpha) -> PhiPoint {
    Eigen::VectorXd xt = x + alpha * direction;
    const double f = objective(xt, grad);
    ++result.evaluations;
    return PhiPoint{alpha, f, grad.dot(direction)};
  };
  auto armijo_ok = [&](const PhiPoint& p) { return p.f <= f0 + c1 * p.alpha * dphi0; };
  auto curvature_ok = [&](const PhiPoint& p) { return std::abs(p.dphi) <= c2 * std::abs(dphi0); };
  auto accept = [&](const PhiPoint& p) {
    result.success = true;
    result.step = p.alpha;
    result.f = p.f;
    result.x = x + p.alpha * direction;
    result.grad = grad; // grad still holds the last evaluation, which is p's
    return result;
  };
  // Re-evaluating at the accepted point keeps result.grad consistent when
  // `grad` was overwritten after p was computed.
  auto accept_reeval = [&](double alpha) {
    PhiPoint p = eval(alpha);
    return accept(p);
  };

  // Bracketing phase.
  PhiPoint prev{0.0, f0, dphi0};
  double alpha = initial_step;
  PhiPoint lo, hi;
  bool bracketed = false;
  for (int iter = 0; iter < config.max_line_search_steps; ++iter) {
    PhiPoint cur = eval(alpha);
    if (!std::isfinite(cur.f)) {
      // Shrink back toward the last good point.
      alpha = 0.5 * (prev.alpha + alpha);
      if (alpha <= 1e-20) break;
      continue;
    }
    if (!armijo_ok(cur) || (iter > 0 && cur.f >= prev.f)) {
      lo = prev;
      hi = cur;
      bracketed = true;
      break;
    }
    if (curvature_ok(cur)) return accept(cur);
    if (cur.dphi >= 0.0) {
      lo = cur;
      hi = prev;
      bracketed = true;
      break;
    }
    prev = cur;
    alpha *= 2.0;
  }
  if (!bracketed) return result;

  // Zoom phase.
  for (int iter = result.evaluations; iter < config.max_line_search_steps; ++iter) {
    const double width = std::abs(hi.alpha - lo.alpha);
    if (width < 1e-18 * std::max(1.0, std::abs(lo.alpha))) break;
    double trial = cubic_minimizer(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi);
    const double a_min = std::min(lo.alpha, hi.alpha);
    const double a_max = std::max(lo.alpha, hi.alpha);
    const double margin = 0.1 * width;
    if (!std::isfinite(trial) || trial <= a_min + 0.0 || trial >= a_max - 0.0) {
      trial = 0.5 * (lo.alpha + hi.alpha);
    } else if (trial < a_min + margin * 1e-3 || trial > a_max - margin * 1e-3) {
      // Keep the trial strictly interior so the interval shrinks.
      trial = std::clamp(trial, a_min + margin * 1e-3, a_max - margin * 1e-3);
    }
    PhiPoint cur = eval(trial);
    if (!std::isfinite(cur.f) || !armijo_ok(cur) || cur.f >= lo.f) {
      hi = cur;
    } else {
      if (curvature_ok(cur)) return accept(cur);
      if (cur.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
    }
  }
  // No admissible Wolfe point found within the evaluation budget. Fall back
  // to the best Armijo point seen (lo) if it strictly decreases f.
  if (bracketed && lo.alpha > 0.0 && lo.f < f0 && armijo_ok(lo)) {
    return accept_reeval(lo.alpha);
  }
  return result;
}

LbfgsResult lbfgs_minimize(const ObjectiveWithGradient& objective, const Eigen::VectorXd& x0,
                           const LbfgsConfig& config) {
  if (config.memory < 1 || config.max_iterations < 1 || config.grad_tolerance <= 0.0 ||
      config.loss_change_tolerance < 0.0 || !(0.0 < config.wolfe_c1) ||
      !(config.wolfe_c1 < config.wolfe_c2) || !(config.wolfe_c2 < 1.0)) {
    throw std::invalid_argument("lbfgs_minimize: invalid configuration");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const int n = static_cast<int>(x0.size());

  Eigen::VectorXd x = x0;
  Eigen::VectorXd g(n);
  double f = objective(x, g);
  long evals = 1;
  if (!std::isfinite(f)) {
    throw std::invalid_argument("lbfgs_minimize: objective not finite at x0");
  }

  const double grad_stop = config.grad_tolerance * std::max(1.0, g.norm());

  LbfgsResult best;
  best.x = x;
  best.loss = f;

  TrainReport report;
  report.loss_history.push_back(f);
  report.grad_norm_history.push_back(g.norm());

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd q(n), direction(n);
  std::vector<double> alpha_buf;

  TerminationReason reason = TerminationReason::MaxIterations;
  int iter = 0;
  for (; iter < config.max_iterations; ++iter) {
    if (g.norm() <= grad_stop) {
      reason = TerminationReason::GradientTolerance;
      break;
    }

    // Two-loop recursion.
    q = g;
    const int m = static_cast<int>(s_hist.size());
    alpha_buf.assign(m, 0.0);
    for (int i = m - 1; i >= 0; --i) {
      alpha_buf[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha_buf[i] * y_hist[i];
    }
    if (m > 0) {
      const double gamma = s_hist[m - 1].dot(y_hist[m - 1]) / y_hist[m - 1].squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha_buf[i] - beta) * s_hist[i];
    }
    direction = -q;

    double dphi0 = g.dot(direction);
    if (!(dphi0 < 0.0)) {
      // Degenerate curvature information; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      direction = -g;
      dphi0 = -g.squaredNorm();
    }

    const double init_step = (iter == 0) ? std::min(1.0, 1.0 / std::max(1e-12, g.norm())) : 1.0;
    LineSearchResult ls = wolfe_line_search(objective, x, f, g, direction, config, init_step);
    evals += ls.evaluations;
    if (!ls.success) {
      reason = TerminationReason::LineSearchFailure;
      break;
    }

    Eigen::VectorXd s = ls.x - x;
    Eigen::VectorXd y = ls.grad - g;
    x = std::move(ls.x);
    f = ls.f;
    g = std::move(ls.grad);

    const double sy = s.dot(y);
    if (sy > 1e-300) {
      if (static_cast<int>(s_hist.size()) == config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    report.loss_history.push_back(f);
    report.grad_norm_history.push_back(g.norm());
    if (f < best.loss) {
      best.loss = f;
      best.x = x;
    }

    // Stall detection over a five-iteration window.
    const std::size_t k = report.loss_history.size();
    if (k >= 6) {
      const double f_old = report.loss_history[k - 6];
      const double drop = f_old - f;
      const double denom = std::max({std::abs(f_old), std::abs(f), 1e-16});
      if (drop <= config.loss_change_tolerance * denom) {
        ++iter;
        reason = TerminationReason::LossChange;
        break;
      }
    }
  }

  report.iterations = iter;
  report.final_grad_norm = g.norm();
  report.reason = reason;
  report.objective_evaluations = evals;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

  LbfgsResult result;
  // Best iterate seen; ties favor the most recent only through strict '<'.
  result.x = std::move(best.x);
  result.loss = best.loss;
  result.report = std::move(report);
  return result;
}

} // namespace pinnflow
