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
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "tksvr/contraction.hpp"
#include "tksvr/dual_solver.hpp"
#include "tksvr/kernels.hpp"
#include "tksvr/losses.hpp"

namespace tksvr {

/// Empirical sample (x_i, y_i), i = 1..n.
struct Dataset {
  std::vector<Point> inputs;
  std::vector<double> labels;

  /// n >= 1, matching sizes, finite labels, every input inside the kernel's
  /// domain. DomainViolation carries the offending row.
  void validate(const KernelSpec& kernel) const;
  std::size_t size() const noexcept { return inputs.size(); }
};

struct FitOptions {
  LossSpec loss = LossSpec::square();
  double gamma = 1.0;
  OffsetMode offset = OffsetMode::WithOffset;
  SolverConfig solver{};
};

struct ModelDiagnostics {
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::Converged;
  /// K[u] = 0: the kernel part of the predictor vanishes and f = b.
  bool trivial = false;
};

/// Fitted regression function f(x) = n^{1-m} sum K(x_i1..x_i(m-1), x) u_i1..u_i(m-1) + b.
/// Immutable once built; predict is safe to call concurrently.
class Model {
 public:
  Model(KernelSpec kernel, std::vector<Point> inputs, std::vector<double> u, double b,
        FitOptions training, ModelDiagnostics diagnostics);

  const KernelSpec& kernel() const noexcept { return gram_->kernel(); }
  const std::vector<Point>& inputs() const noexcept { return gram_->points(); }
  const std::vector<double>& u() const noexcept { return u_; }
  double offset() const noexcept { return b_; }
  /// 1 / n^{m-1}.
  double scale() const noexcept { return scale_; }
  const FitOptions& training() const noexcept { return training_; }
  const ModelDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  const GramTensor& gram() const noexcept { return *gram_; }
  std::shared_ptr<const GramTensor> gram_ptr() const noexcept { return gram_; }

 private:
  std::shared_ptr<const GramTensor> gram_;
  std::vector<double> u_;
  double b_ = 0.0;
  double scale_ = 1.0;
  FitOptions training_;
  ModelDiagnostics diagnostics_;
};

/// Solves the dual for `data` and assembles the model. Throws InfeasibleConfig
/// for EpsInsensitive with an offset; a solve that hits max_iter still yields
/// a model with diagnostics.converged == false. When `solution` is given the
/// full solver output (including the trace) is copied there.
Model fit(const Dataset& data, const KernelSpec& kernel, const FitOptions& options,
          DualSolution* solution = nullptr);

/// Fits on an existing Gram tensor (shares its cache).
Model fit(std::shared_ptr<const GramTensor> gram, std::span<const double> labels,
          const FitOptions& options, DualSolution* solution = nullptr);

double predict(const Model& model, PointRef x);
std::vector<double> predict(const Model& model, std::span<const Point> xs);

/// e_i = y_i - f(x_i).
std::vector<double> residuals(const Model& model, const Dataset& data);

/// Problem the model was trained on, rebuilt against `labels`.
DualProblem training_problem(const Model& model, std::span<const double> labels);

inline constexpr int kModelSchemaVersion = 1;

void save(const Model& model, std::ostream& out);
/// Throws SchemaVersionMismatch for an unknown version or an invalid kernel
/// (e.g. odd order) and CorruptPayload for malformed or inconsistent content.
Model load(std::istream& in);

}  // namespace tksvr
