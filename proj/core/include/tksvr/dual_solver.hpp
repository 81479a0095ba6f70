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

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tksvr/contraction.hpp"
#include "tksvr/losses.hpp"

namespace tksvr {

enum class OffsetMode { WithOffset, NoOffset };

std::string_view to_string(OffsetMode mode) noexcept;

/// Finite-dimensional dual of tensor-kernel SVR with phi = |.|^r / r:
///
///   min_u  K[u] / (m n^m) + (gamma/n) sum_i L*(u_i/gamma) - (1/n) <y, u>
///   s.t.   sum_i u_i = 0            (WithOffset only)
///
/// For the eps-insensitive loss the L* term is (eps/n) sum |u_i| together with
/// the box |u_i| <= gamma.
class DualProblem {
 public:
  DualProblem(std::shared_ptr<const GramTensor> gram, std::vector<double> labels, LossSpec loss,
              double gamma, OffsetMode offset);

  const GramTensor& gram() const noexcept { return *gram_; }
  std::shared_ptr<const GramTensor> gram_ptr() const noexcept { return gram_; }
  const std::vector<double>& labels() const noexcept { return labels_; }
  const LossSpec& loss() const noexcept { return loss_; }
  const RegularizerSpec& regularizer() const noexcept { return reg_; }
  double gamma() const noexcept { return gamma_; }
  OffsetMode offset() const noexcept { return offset_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t order() const noexcept { return gram_->order(); }

  /// 1 / n^{m-1}, the representer scale for the power regularizer.
  double prediction_scale() const noexcept;

 private:
  std::shared_ptr<const GramTensor> gram_;
  std::vector<double> labels_;
  LossSpec loss_;
  RegularizerSpec reg_;
  double gamma_;
  OffsetMode offset_;
};

struct SolverConfig {
  double tol_obj = 1e-10;
  double tol_kkt = 1e-6;
  std::size_t max_iter = 10000;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIterExceeded, LineSearchFailed, Stagnated };

std::string_view to_string(SolveStatus status) noexcept;

struct TraceEntry {
  std::size_t iteration = 0;
  double objective = 0.0;
  double step = 0.0;
  double residual = 0.0;
};

struct DualSolution {
  std::vector<double> u;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::MaxIterExceeded;
  std::vector<TraceEntry> trace;
};

double dual_objective(const DualProblem& problem, std::span<const double> u);

/// Gradient of the smooth part: the polynomial term, the linear term and, for
/// Square, the quadratic L* term. The eps-insensitive l1 and box terms are
/// left to the prox.
std::vector<double> dual_gradient_smooth(const DualProblem& problem, std::span<const double> u);

/// Smooth part of the objective matching dual_gradient_smooth.
double dual_objective_smooth(const DualProblem& problem, std::span<const double> u);

/// Forward-backward map u -> prox(u - step * grad) for the problem's
/// constraint set (identity, hyperplane projection, or soft-threshold + box).
std::vector<double> forward_backward_step(const DualProblem& problem, std::span<const double> u,
                                          std::span<const double> grad, double step);

/// Minimizes the dual from u = 0 with Armijo-backtracked (proximal/projected)
/// gradient steps. Throws InfeasibleConfig for EpsInsensitive with an offset.
DualSolution solve(const DualProblem& problem, const SolverConfig& config = {});

/// b = mean_i [y_i - f0(x_i) - (L*)'(u_i / gamma)] for WithOffset, 0 otherwise.
double recover_offset(const DualProblem& problem, std::span<const double> u);

struct KktReport {
  double hyperplane = 0.0;      // |sum u_i| (WithOffset), else 0
  double subdifferential = 0.0; // max_i dist((e_i, u_i/gamma), graph dL)
  double fixed_point = 0.0;     // ||u - prox(u - step grad)||_inf
  double max = 0.0;             // max(hyperplane, subdifferential)
  std::vector<double> errors;   // e_i = y_i - f(x_i) - b
  std::vector<double> distances;
};

/// Residuals of the optimality system at (u, b), with e_i evaluated through
/// the same prediction path the model uses.
KktReport kkt_report(const DualProblem& problem, std::span<const double> u, double b,
                     double step = 1.0);

/// iteration,objective,step,residual
void write_trace_csv(std::ostream& out, const DualSolution& solution);

}  // namespace tksvr
