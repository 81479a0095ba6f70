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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tksvr {

enum class LossKind { Square, EpsInsensitive };

std::string_view to_string(LossKind kind) noexcept;
std::optional<LossKind> parse_loss_kind(std::string_view name) noexcept;

/// Square is t^2/2; EpsInsensitive is max(0, |t| - eps), the distance from t
/// to [-eps, eps].
struct LossSpec {
  LossKind kind = LossKind::Square;
  double epsilon = 0.0;

  static LossSpec square() { return {LossKind::Square, 0.0}; }
  static LossSpec eps_insensitive(double eps);

  void validate() const;
  /// Whether L* is differentiable everywhere (required for offset recovery).
  bool smooth_conjugate() const noexcept { return kind == LossKind::Square; }
};

double loss_value(const LossSpec& spec, double t);

/// L*(v); +inf outside the effective domain.
double loss_conjugate(const LossSpec& spec, double v);

/// (L*)'(v). EpsInsensitive throws NotDifferentiable at v in {-1, 0, 1} and
/// InfeasiblePoint for |v| > 1.
double loss_conjugate_derivative(const LossSpec& spec, double v);

/// Componentwise prox of step * (gamma/n) sum_i L*(v_i / gamma).
std::vector<double> prox_dual_term(const LossSpec& spec, std::span<const double> v, double step,
                                   double gamma, std::size_t n);

/// Distance from v/gamma to the subdifferential of L at e.
double loss_subdifferential_distance(const LossSpec& spec, double e, double v, double gamma);

/// Distance (in the max norm on (e, v/gamma)) from the pair to the graph of
/// the subdifferential of L. For Square this is the same as
/// loss_subdifferential_distance; for EpsInsensitive it also lets e move, so
/// samples sitting on the tube boundary up to rounding are not penalized.
double loss_graph_distance(const LossSpec& spec, double e, double v, double gamma);

/// phi(t) = |t|^r / r with r in (1, 2]; the conjugate is |s|^{r*} / r*.
/// Stored through the conjugate exponent r* (= m), which is an integer for
/// every tensor-kernel order, so phi* is evaluated with an exact power.
struct RegularizerSpec {
  double r_star = 2.0;

  static RegularizerSpec for_order(std::size_t m);

  double r() const noexcept { return r_star / (r_star - 1.0); }
  void validate() const;
};

double regularizer_value(const RegularizerSpec& reg, double t);
double regularizer_conjugate(const RegularizerSpec& reg, double s);
/// (phi*)'(s) = sign(s) |s|^{r* - 1}.
double regularizer_conjugate_derivative(const RegularizerSpec& reg, double s);

}  // namespace tksvr
