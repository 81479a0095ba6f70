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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tksvr/dual_solver.hpp"
#include "tksvr/kernels.hpp"
#include "tksvr/losses.hpp"

namespace tksvr::cli {

enum class Command { Fit, Predict, Audit };

/// Everything a run needs. Filled from a flat `key = value` file first, then
/// overridden by command-line flags.
struct RunConfig {
  Command command = Command::Fit;
  std::string data;
  std::string model;
  std::string out;
  std::string trace;

  std::string kernel = "exponential";
  std::string mode = "composed";
  std::size_t order = 2;
  unsigned degree = 2;            // polynomial s
  double alpha = 1.0;             // binomial alpha
  std::vector<double> coeffs;     // custom series

  std::string loss = "square";
  double eps = 0.1;
  double gamma = 1.0;
  bool offset = true;
  SolverConfig solver{};
};

/// Applies `key = value` lines ('#' starts a comment). Unknown keys and bad
/// values throw InvalidArgument naming the line.
void apply_config_file(RunConfig& config, const std::string& path);
void apply_config_text(RunConfig& config, std::istream& in, const std::string& source);

/// Kernel for `dim` input columns.
KernelSpec kernel_spec(const RunConfig& config, std::size_t dim);
LossSpec loss_spec(const RunConfig& config);

/// Exit codes: 0 ok, 1 input error, 2 solver did not converge (fit), 3 audit
/// threshold exceeded.
int cmd_fit(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_audit(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tksvr::cli
