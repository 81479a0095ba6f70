// Copyright 2026 The tksvr Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tksvr/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

#include "tksvr/error.hpp"
#include "tksvr/format.hpp"

namespace tksvr {
namespace {

constexpr double kMinStep = 1e-20;
constexpr std::size_t kStagnationWindow = 50;
constexpr double kObjectiveNoise = 1e-14;

double ipow(double base, std::size_t exp) {
  double r = 1.0;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

void require_length(const DualProblem& problem, std::span<const double> u) {
  if (u.size() != problem.size()) {
    throw Error(Errc::DimensionMismatch, "dual vector has length " + std::to_string(u.size()) +
                                             ", expected " + std::to_string(problem.size()));
  }
}

void require_box(const DualProblem& problem, std::span<const double> u) {
  if (problem.loss().kind != LossKind::EpsInsensitive) return;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(std::abs(u[i]) <= problem.gamma())) {
      throw Error(Errc::InfeasiblePoint,
                  "|u_" + std::to_string(i) + "| = " + std::to_string(std::abs(u[i])) +
                      " exceeds gamma = " + std::to_string(problem.gamma()),
                  i);
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

/// Everything the solver needs at one iterate, derived from a single
/// gradient contraction.
struct IterateState {
  std::vector<double> u;
  double objective = 0.0;
  std::vector<double> grad;       // gradient of the smooth part
  std::vector<double> fit_values; // f0(x_j), the no-offset prediction
};

IterateState make_state(const DualProblem& problem, std::vector<double> u, double objective) {
  const std::size_t n = problem.size();
  const std::size_t m = problem.order();
  const double nd = static_cast<double>(n);
  const auto gk = contract_gradient(problem.gram(), u);
  const double to_grad = 1.0 / (static_cast<double>(m) * ipow(nd, m));
  const double to_fit = problem.prediction_scale() / static_cast<double>(m);
  IterateState s;
  s.grad.resize(n);
  s.fit_values.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    s.fit_values[j] = gk[j] * to_fit;
    double g = gk[j] * to_grad - problem.labels()[j] / nd;
    if (problem.loss().kind == LossKind::Square) g += u[j] / (problem.gamma() * nd);
    s.grad[j] = g;
  }
  s.u = std::move(u);
  s.objective = objective;
  return s;
}

double offset_from_fit(const DualProblem& problem, std::span<const double> u,
                       std::span<const double> fit_values) {
  if (problem.offset() == OffsetMode::NoOffset) return 0.0;
  if (!problem.loss().smooth_conjugate()) {
    throw Error(Errc::InfeasibleConfig, "offset recovery needs a differentiable L*");
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s.add(problem.labels()[i] - fit_values[i] -
          loss_conjugate_derivative(problem.loss(), u[i] / problem.gamma()));
  }
  return s.value() / static_cast<double>(u.size());
}

struct Residuals {
  double hyperplane = 0.0;
  double subdifferential = 0.0;
  std::vector<double> errors;
  std::vector<double> distances;
};

Residuals residuals_from_fit(const DualProblem& problem, std::span<const double> u,
                             std::span<const double> fit_values, double b) {
  Residuals r;
  const std::size_t n = problem.size();
  r.errors.resize(n);
  r.distances.resize(n);
  if (problem.offset() == OffsetMode::WithOffset) {
    CompensatedSum s;
    for (double v : u) s.add(v);
    r.hyperplane = std::abs(s.value());
  }
  for (std::size_t i = 0; i < n; ++i) {
    r.errors[i] = problem.labels()[i] - fit_values[i] - b;
    r.distances[i] = loss_graph_distance(problem.loss(), r.errors[i], u[i], problem.gamma());
    r.subdifferential = std::max(r.subdifferential, r.distances[i]);
  }
  return r;
}

double state_residual(const DualProblem& problem, const IterateState& s) {
  const double b = offset_from_fit(problem, s.u, s.fit_values);
  const auto r = residuals_from_fit(problem, s.u, s.fit_values, b);
  return std::max(r.hyperplane, r.subdifferential);
}

}  // namespace

std::string_view to_string(OffsetMode mode) noexcept {
  return mode == OffsetMode::WithOffset ? "with-offset" : "no-offset";
}

std::string_view to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterExceeded: return "max-iter-exceeded";
    case SolveStatus::LineSearchFailed: return "line-search-failed";
    case SolveStatus::Stagnated: return "stagnated";
  }
  return "unknown";
}

// --- DualProblem -------------------------------------------------------------

DualProblem::DualProblem(std::shared_ptr<const GramTensor> gram, std::vector<double> labels,
                         LossSpec loss, double gamma, OffsetMode offset)
    : gram_(std::move(gram)),
      labels_(std::move(labels)),
      loss_(loss),
      gamma_(gamma),
      offset_(offset) {
  if (!gram_) throw Error(Errc::InvalidArgument, "DualProblem needs a GramTensor");
  if (labels_.size() != gram_->size()) {
    throw Error(Errc::DimensionMismatch, std::to_string(labels_.size()) + " labels for " +
                                             std::to_string(gram_->size()) + " points");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!std::isfinite(labels_[i])) {
      throw Error(Errc::InvalidArgument, "label " + std::to_string(i) + " is not finite", i);
    }
  }
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw Error(Errc::InvalidArgument, "gamma must be positive and finite");
  }
  loss_.validate();
  reg_ = RegularizerSpec::for_order(gram_->order());
}

double DualProblem::prediction_scale() const noexcept {
  return 1.0 / ipow(static_cast<double>(size()), order() - 1);
}

void SolverConfig::validate() const {
  if (!(tol_obj > 0.0) || !(tol_kkt > 0.0)) {
    throw Error(Errc::InvalidArgument, "solver tolerances must be positive");
  }
  if (!(initial_step > 0.0)) throw Error(Errc::InvalidArgument, "initial step must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) {
    throw Error(Errc::InvalidArgument, "backtracking factor must lie in (0, 1)");
  }
  if (!(armijo > 0.0 && armijo < 1.0)) {
    throw Error(Errc::InvalidArgument, "Armijo constant must lie in (0, 1)");
  }
}

// --- Objective and gradient --------------------------------------------------

double dual_objective_smooth(const DualProblem& problem, std::span<const double> u) {
  require_length(problem, u);
  const std::size_t m = problem.order();
  const double nd = static_cast<double>(problem.size());
  const double poly = contract_full(problem.gram(), u) / (static_cast<double>(m) * ipow(nd, m));
  double value = poly - dot(problem.labels(), u) / nd;
  if (problem.loss().kind == LossKind::Square) {
    CompensatedSum s;
    for (double v : u) s.add(v * v);
    value += s.value() / (2.0 * problem.gamma() * nd);
  }
  return value;
}

double dual_objective(const DualProblem& problem, std::span<const double> u) {
  require_length(problem, u);
  require_box(problem, u);
  double value = dual_objective_smooth(problem, u);
  if (problem.loss().kind == LossKind::EpsInsensitive) {
    CompensatedSum s;
    for (double v : u) s.add(std::abs(v));
    value += problem.loss().epsilon * s.value() / static_cast<double>(problem.size());
  }
  return value;
}

std::vector<double> dual_gradient_smooth(const DualProblem& problem, std::span<const double> u) {
  require_length(problem, u);
  return make_state(problem, {u.begin(), u.end()}, 0.0).grad;
}

std::vector<double> forward_backward_step(const DualProblem& problem, std::span<const double> u,
                                          std::span<const double> grad, double step) {
  const std::size_t n = problem.size();
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = u[i] - step * grad[i];
  if (problem.loss().kind == LossKind::EpsInsensitive) {
    return prox_dual_term(problem.loss(), v, step, problem.gamma(), n);
  }
  if (problem.offset() == OffsetMode::WithOffset) {
    CompensatedSum s;
    for (double x : v) s.add(x);
    const double mean = s.value() / static_cast<double>(n);
    for (double& x : v) x -= mean;
  }
  return v;
}

// --- Solver ------------------------------------------------------------------

DualSolution solve(const DualProblem& problem, const SolverConfig& config) {
  config.validate();
  if (problem.offset() == OffsetMode::WithOffset && !problem.loss().smooth_conjugate()) {
    throw Error(Errc::InfeasibleConfig,
                "eps-insensitive loss with an offset is not supported; center the labels and "
                "use no-offset");
  }
  const std::size_t n = problem.size();
  DualSolution sol;
  std::vector<double> u0(n, 0.0);
  const double f0 = dual_objective(problem, u0);
  IterateState state = make_state(problem, std::move(u0), f0);
  double residual = state_residual(problem, state);
  double trial_step = config.initial_step;
  double best_residual = residual;
  std::size_t stagnant = 0;
  sol.status = SolveStatus::MaxIterExceeded;

  std::size_t iter = 0;
  for (;; ++iter) {
    if (residual <= config.tol_kkt) {
      sol.status = SolveStatus::Converged;
      break;
    }
    if (iter >= config.max_iter) break;

    double step = trial_step;
    std::vector<double> candidate;
    double candidate_obj = 0.0;
    std::optional<IterateState> next;
    bool accepted = false;
    bool fixed_point = false;
    while (step >= kMinStep) {
      candidate = forward_backward_step(problem, state.u, state.grad, step);
      double dist2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = candidate[i] - state.u[i];
        dist2 += d * d;
      }
      if (dist2 == 0.0) {
        fixed_point = true;
        break;
      }
      candidate_obj = dual_objective(problem, candidate);
      if (candidate_obj <= state.objective - config.armijo / step * dist2) {
        accepted = true;
        break;
      }
      // Close to the optimum the decrease drops below the rounding of F and
      // the test above cannot see it. There, accept the step when the local
      // curvature along it is at most 1/step.
      if (std::abs(candidate_obj - state.objective) <=
          kObjectiveNoise * std::max(1.0, std::abs(state.objective))) {
        next = make_state(problem, candidate, candidate_obj);
        double curvature = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          curvature += (next->grad[i] - state.grad[i]) * (candidate[i] - state.u[i]);
        }
        if (curvature <= dist2 / step) {
          accepted = true;
          break;
        }
        next.reset();
      }
      step *= config.backtrack;
    }
    if (fixed_point) {
      sol.status = SolveStatus::Stagnated;
      break;
    }
    if (!accepted) {
      sol.status = SolveStatus::LineSearchFailed;
      break;
    }

    const double decrease = state.objective - candidate_obj;
    state = next ? std::move(*next) : make_state(problem, std::move(candidate), candidate_obj);
    residual = state_residual(problem, state);
    // The objective shrinks like 1/n while the residual does not, so a flat
    // objective alone is not stagnation: the residual has to stall as well.
    const bool flat = decrease <= config.tol_obj * std::abs(state.objective);
    stagnant = flat && residual >= best_residual ? stagnant + 1 : 0;
    best_residual = std::min(best_residual, residual);
    sol.trace.push_back({iter + 1, state.objective, step, residual});
    trial_step = std::min(2.0 * step, config.initial_step);
    if (stagnant >= kStagnationWindow) {
      sol.status = residual <= config.tol_kkt ? SolveStatus::Converged : SolveStatus::Stagnated;
      ++iter;
      break;
    }
  }

  sol.u = std::move(state.u);
  sol.objective = state.objective;
  sol.kkt_residual = residual;
  sol.iterations = iter;
  sol.converged = residual <= config.tol_kkt;
  if (sol.converged) sol.status = SolveStatus::Converged;
  return sol;
}

double recover_offset(const DualProblem& problem, std::span<const double> u) {
  require_length(problem, u);
  if (problem.offset() == OffsetMode::NoOffset) return 0.0;
  const double scale = problem.prediction_scale();
  const auto& points = problem.gram().points();
  std::vector<double> fit(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    fit[i] = scale * contract_predict(problem.gram(), u, points[i]);
  }
  return offset_from_fit(problem, u, fit);
}

KktReport kkt_report(const DualProblem& problem, std::span<const double> u, double b,
                     double step) {
  require_length(problem, u);
  const double scale = problem.prediction_scale();
  const auto& points = problem.gram().points();
  std::vector<double> fit(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    fit[i] = scale * contract_predict(problem.gram(), u, points[i]);
  }
  auto r = residuals_from_fit(problem, u, fit, b);
  KktReport report;
  report.hyperplane = r.hyperplane;
  report.subdifferential = r.subdifferential;
  report.max = std::max(r.hyperplane, r.subdifferential);
  report.errors = std::move(r.errors);
  report.distances = std::move(r.distances);

  const auto grad = dual_gradient_smooth(problem, u);
  const auto moved = forward_backward_step(problem, u, grad, step);
  for (std::size_t i = 0; i < u.size(); ++i) {
    report.fixed_point = std::max(report.fixed_point, std::abs(u[i] - moved[i]));
  }
  return report;
}

void write_trace_csv(std::ostream& out, const DualSolution& solution) {
  out << "iteration,objective,step,residual\n";
  for (const auto& t : solution.trace) {
    out << t.iteration << ',' << format_double(t.objective) << ',' << format_double(t.step) << ','
        << format_double(t.residual) << '\n';
  }
}

}  // namespace tksvr
