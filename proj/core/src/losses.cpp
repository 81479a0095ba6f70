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

#include "tksvr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tksvr/error.hpp"

namespace tksvr {
namespace {

double distance_to_interval(double x, double lo, double hi) {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0.0;
}

void require_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(Errc::InvalidArgument, "gamma must be positive and finite");
  }
}

}  // namespace

std::string_view to_string(LossKind kind) noexcept {
  return kind == LossKind::Square ? "square" : "eps";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) noexcept {
  if (name == "square") return LossKind::Square;
  if (name == "eps" || name == "eps-insensitive" || name == "epsilon") {
    return LossKind::EpsInsensitive;
  }
  return std::nullopt;
}

LossSpec LossSpec::eps_insensitive(double eps) {
  LossSpec spec{LossKind::EpsInsensitive, eps};
  spec.validate();
  return spec;
}

void LossSpec::validate() const {
  if (kind == LossKind::EpsInsensitive && !(epsilon > 0.0 && std::isfinite(epsilon))) {
    throw Error(Errc::InvalidArgument, "eps-insensitive loss needs eps > 0");
  }
}

double loss_value(const LossSpec& spec, double t) {
  if (spec.kind == LossKind::Square) return 0.5 * t * t;
  return std::max(0.0, std::abs(t) - spec.epsilon);
}

double loss_conjugate(const LossSpec& spec, double v) {
  if (spec.kind == LossKind::Square) return 0.5 * v * v;
  if (std::abs(v) > 1.0) return std::numeric_limits<double>::infinity();
  return spec.epsilon * std::abs(v);
}

double loss_conjugate_derivative(const LossSpec& spec, double v) {
  if (spec.kind == LossKind::Square) return v;
  const double a = std::abs(v);
  if (a > 1.0) throw Error(Errc::InfeasiblePoint, "|v| > 1 is outside dom L*");
  if (v == 0.0 || a == 1.0) {
    throw Error(Errc::NotDifferentiable, "eps-insensitive conjugate has a kink at v = " +
                                             std::to_string(v));
  }
  return v > 0.0 ? spec.epsilon : -spec.epsilon;
}

std::vector<double> prox_dual_term(const LossSpec& spec, std::span<const double> v, double step,
                                   double gamma, std::size_t n) {
  if (!(step > 0.0)) throw Error(Errc::InvalidArgument, "prox step must be positive");
  require_gamma(gamma);
  if (n == 0) throw Error(Errc::InvalidArgument, "sample count must be positive");
  const double nd = static_cast<double>(n);
  std::vector<double> out(v.size());
  if (spec.kind == LossKind::Square) {
    const double shrink = 1.0 + step / (gamma * nd);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / shrink;
    return out;
  }
  const double threshold = step * spec.epsilon / nd;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    const double shrunk = a > threshold ? std::copysign(a - threshold, v[i]) : 0.0;
    out[i] = std::clamp(shrunk, -gamma, gamma);
  }
  return out;
}

double loss_subdifferential_distance(const LossSpec& spec, double e, double v, double gamma) {
  require_gamma(gamma);
  const double s = v / gamma;
  if (spec.kind == LossKind::Square) return std::abs(s - e);
  const double eps = spec.epsilon;
  const double a = std::abs(e);
  if (a < eps) return std::abs(s);
  if (e == eps) return distance_to_interval(s, 0.0, 1.0);
  if (e == -eps) return distance_to_interval(s, -1.0, 0.0);
  return std::abs(s - (e > 0.0 ? 1.0 : -1.0));
}

double loss_graph_distance(const LossSpec& spec, double e, double v, double gamma) {
  require_gamma(gamma);
  if (spec.kind == LossKind::Square) return loss_subdifferential_distance(spec, e, v, gamma);
  const double s = v / gamma;
  const double eps = spec.epsilon;
  // Five pieces of the graph: the open tube, its two endpoints, and the two
  // outer rays.
  const double inside = std::max(std::max(0.0, std::abs(e) - eps), std::abs(s));
  const double upper_kink = std::max(std::abs(e - eps), distance_to_interval(s, 0.0, 1.0));
  const double lower_kink = std::max(std::abs(e + eps), distance_to_interval(s, -1.0, 0.0));
  const double upper_ray = std::max(std::max(0.0, eps - e), std::abs(s - 1.0));
  const double lower_ray = std::max(std::max(0.0, e + eps), std::abs(s + 1.0));
  return std::min({inside, upper_kink, lower_kink, upper_ray, lower_ray});
}

RegularizerSpec RegularizerSpec::for_order(std::size_t m) {
  if (m < 2) throw Error(Errc::InvalidArgument, "order must be >= 2");
  return {static_cast<double>(m)};
}

void RegularizerSpec::validate() const {
  if (!(r_star >= 2.0) || !std::isfinite(r_star)) {
    throw Error(Errc::InvalidArgument, "regularizer needs r in (1, 2], i.e. r* >= 2");
  }
}

double regularizer_value(const RegularizerSpec& reg, double t) {
  const double r = reg.r();
  return std::pow(std::abs(t), r) / r;
}

double regularizer_conjugate(const RegularizerSpec& reg, double s) {
  return std::pow(std::abs(s), reg.r_star) / reg.r_star;
}

double regularizer_conjugate_derivative(const RegularizerSpec& reg, double s) {
  return std::copysign(std::pow(std::abs(s), reg.r_star - 1.0), s);
}

}  // namespace tksvr
