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

#include "tksvr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tksvr/combinatorics.hpp"
#include "tksvr/error.hpp"

namespace tksvr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSeriesRelTol = 1e-14;
constexpr std::size_t kSeriesTermCap = 1'000'000;

double ipow(double base, std::size_t exp) {
  double result = 1.0;
  while (exp > 0) {
    if (exp & 1U) result *= base;
    base *= base;
    exp >>= 1U;
  }
  return result;
}

bool lex_less(PointRef a, PointRef b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace

std::string_view to_string(SeriesFamily family) noexcept {
  switch (family) {
    case SeriesFamily::Exponential: return "exponential";
    case SeriesFamily::Polynomial: return "polynomial";
    case SeriesFamily::Binomial: return "binomial";
    case SeriesFamily::Geometric: return "geometric";
    case SeriesFamily::BergmanLike: return "bergman";
    case SeriesFamily::Custom: return "custom";
  }
  return "unknown";
}

std::optional<SeriesFamily> parse_series_family(std::string_view name) noexcept {
  for (auto f : {SeriesFamily::Exponential, SeriesFamily::Polynomial, SeriesFamily::Binomial,
                 SeriesFamily::Geometric, SeriesFamily::BergmanLike, SeriesFamily::Custom}) {
    if (name == to_string(f)) return f;
  }
  if (name == "szego") return SeriesFamily::Geometric;
  return std::nullopt;
}

std::string_view to_string(CompositionMode mode) noexcept {
  return mode == CompositionMode::Composed ? "composed" : "product";
}

std::optional<CompositionMode> parse_composition_mode(std::string_view name) noexcept {
  if (name == "composed") return CompositionMode::Composed;
  if (name == "product") return CompositionMode::Product;
  return std::nullopt;
}

// --- SeriesSpec --------------------------------------------------------------

SeriesSpec SeriesSpec::exponential() { return SeriesSpec(SeriesFamily::Exponential); }

SeriesSpec SeriesSpec::polynomial(unsigned degree) {
  SeriesSpec s(SeriesFamily::Polynomial);
  s.degree_ = degree;
  return s;
}

SeriesSpec SeriesSpec::binomial(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(Errc::InvalidArgument, "binomial series needs alpha > 0");
  }
  SeriesSpec s(SeriesFamily::Binomial);
  s.alpha_ = alpha;
  return s;
}

SeriesSpec SeriesSpec::geometric() { return SeriesSpec(SeriesFamily::Geometric); }

SeriesSpec SeriesSpec::bergman_like() { return SeriesSpec(SeriesFamily::BergmanLike); }

SeriesSpec SeriesSpec::custom(std::vector<double> coefficients) {
  if (coefficients.empty()) {
    throw Error(Errc::InvalidArgument, "custom series needs at least one coefficient");
  }
  for (double c : coefficients) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw Error(Errc::InvalidArgument, "series coefficients must be finite and nonnegative");
    }
  }
  SeriesSpec s(SeriesFamily::Custom);
  s.coeffs_ = std::move(coefficients);
  return s;
}

double SeriesSpec::coefficient(std::size_t k) const {
  const double kd = static_cast<double>(k);
  switch (family_) {
    case SeriesFamily::Exponential:
      if (k <= 20) {
        double f = 1.0;
        for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
        return 1.0 / f;
      }
      return std::exp(-std::lgamma(kd + 1.0));
    case SeriesFamily::Polynomial: {
      if (k > degree_) return 0.0;
      double c = 1.0;
      for (std::size_t i = 1; i <= k; ++i) {
        c = c * static_cast<double>(degree_ - i + 1) / static_cast<double>(i);
      }
      return c;
    }
    case SeriesFamily::Binomial: {
      if (k <= 64) {
        double c = 1.0;
        for (std::size_t i = 1; i <= k; ++i) {
          c *= (alpha_ + static_cast<double>(i) - 1.0) / static_cast<double>(i);
        }
        return c;
      }
      return std::exp(std::lgamma(alpha_ + kd) - std::lgamma(alpha_) - std::lgamma(kd + 1.0));
    }
    case SeriesFamily::Geometric:
      return 1.0;
    case SeriesFamily::BergmanLike:
      return (kd + 1.0) / std::numbers::pi;
    case SeriesFamily::Custom:
      return k < coeffs_.size() ? coeffs_[k] : 0.0;
  }
  return 0.0;
}

double SeriesSpec::radius() const noexcept {
  switch (family_) {
    case SeriesFamily::Exponential:
    case SeriesFamily::Polynomial:
    case SeriesFamily::Custom:
      return kInf;
    case SeriesFamily::Binomial:
    case SeriesFamily::Geometric:
    case SeriesFamily::BergmanLike:
      return 1.0;
  }
  return 0.0;
}

std::optional<std::size_t> SeriesSpec::degree() const noexcept {
  if (family_ == SeriesFamily::Polynomial) return degree_;
  if (family_ == SeriesFamily::Custom) {
    std::size_t last = 0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (coeffs_[k] != 0.0) last = k;
    }
    return last;
  }
  return std::nullopt;
}

double SeriesSpec::ratio_bound(std::size_t j) const noexcept {
  const double jd = static_cast<double>(j);
  switch (family_) {
    case SeriesFamily::Exponential:
      return 1.0 / (jd + 1.0);
    case SeriesFamily::Binomial:
      return alpha_ >= 1.0 ? (alpha_ + jd) / (jd + 1.0) : 1.0;
    case SeriesFamily::Geometric:
      return 1.0;
    case SeriesFamily::BergmanLike:
      return (jd + 2.0) / (jd + 1.0);
    case SeriesFamily::Polynomial:
    case SeriesFamily::Custom:
      return 0.0;
  }
  return kInf;
}

double SeriesSpec::closed_form(double z) const {
  if (!(std::abs(z) < radius())) {
    throw Error(Errc::DomainViolation,
                "psi argument " + std::to_string(z) + " outside the disk of convergence");
  }
  switch (family_) {
    case SeriesFamily::Exponential:
      return std::exp(z);
    case SeriesFamily::Polynomial:
      return ipow(1.0 + z, degree_);
    case SeriesFamily::Binomial:
      return std::pow(1.0 - z, -alpha_);
    case SeriesFamily::Geometric:
      return 1.0 / (1.0 - z);
    case SeriesFamily::BergmanLike:
      return 1.0 / (std::numbers::pi * (1.0 - z) * (1.0 - z));
    case SeriesFamily::Custom: {
      double acc = 0.0;
      for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * z + *it;
      return acc;
    }
  }
  return 0.0;
}

double SeriesSpec::series_sum(double z) const {
  const double az = std::abs(z);
  if (!(az < radius())) {
    throw Error(Errc::DomainViolation,
                "psi argument " + std::to_string(z) + " outside the disk of convergence");
  }
  if (auto deg = degree()) {
    CompensatedSum sum;
    double power = 1.0;
    for (std::size_t k = 0; k <= *deg; ++k) {
      sum.add(coefficient(k) * power);
      power *= z;
    }
    return sum.value();
  }

  // gamma_k is advanced by its ratio so the cost stays linear in the number
  // of terms.
  CompensatedSum sum;
  double gamma = coefficient(0);
  double power = 1.0;
  for (std::size_t k = 0; k < kSeriesTermCap; ++k) {
    const double term = gamma * power;
    sum.add(term);

    double next_gamma = 0.0;
    const double kd = static_cast<double>(k);
    switch (family_) {
      case SeriesFamily::Exponential: next_gamma = gamma / (kd + 1.0); break;
      case SeriesFamily::Binomial: next_gamma = gamma * (alpha_ + kd) / (kd + 1.0); break;
      case SeriesFamily::Geometric: next_gamma = 1.0; break;
      case SeriesFamily::BergmanLike: next_gamma = (kd + 2.0) / std::numbers::pi; break;
      default: break;
    }
    const double next_power = power * z;
    // Remaining terms k+1, k+2, ... are bounded by |t_{k+1}| * sum_j q^j
    // with q the supremum of the coefficient ratio times |z|.
    const double q = az * ratio_bound(k + 1);
    if (q < 1.0) {
      const double tail = std::abs(next_gamma * next_power) / (1.0 - q);
      if (tail <= kSeriesRelTol * std::abs(sum.value())) return sum.value();
    }
    gamma = next_gamma;
    power = next_power;
  }
  throw Error(Errc::NonConvergent, "series tail bound not met within " +
                                       std::to_string(kSeriesTermCap) + " terms at z = " +
                                       std::to_string(z));
}

// --- KernelSpec --------------------------------------------------------------

void KernelSpec::validate() const {
  if (order < 2 || order % 2 != 0) {
    throw Error(Errc::InvalidArgument,
                "kernel order m must be even and >= 2, got " + std::to_string(order));
  }
  if (dim < 1) throw Error(Errc::InvalidArgument, "input dimension must be >= 1");
}

bool KernelSpec::finite_dictionary() const noexcept { return series.degree().has_value(); }

std::optional<std::size_t> KernelSpec::complete_cutoff() const noexcept {
  auto deg = series.degree();
  if (!deg) return std::nullopt;
  return mode == CompositionMode::Composed ? *deg : *deg * dim;
}

double KernelSpec::psi(double z) const {
  switch (evaluation) {
    case Evaluation::ClosedForm:
      return series.closed_form(z);
    case Evaluation::Series:
      return series.series_sum(z);
    case Evaluation::Auto:
      break;
  }
  return series.has_closed_form() || series.degree() ? series.closed_form(z)
                                                     : series.series_sum(z);
}

// --- Domain ------------------------------------------------------------------

DomainCheck check_domain(const KernelSpec& spec, PointRef point) noexcept {
  DomainCheck check;
  if (point.size() != spec.dim) return check;
  for (double v : point) {
    if (!std::isfinite(v)) return check;
  }
  const double radius = spec.series.radius();
  if (std::isinf(radius)) {
    check.passed = true;
    check.margin = kInf;
    return check;
  }
  if (spec.mode == CompositionMode::Composed) {
    double mass = 0.0;
    for (double v : point) mass += ipow(std::abs(v), spec.order);
    check.margin = radius - mass;
  } else {
    double largest = 0.0;
    for (double v : point) largest = std::max(largest, std::abs(v));
    check.margin = std::pow(radius, 1.0 / static_cast<double>(spec.order)) - largest;
  }
  check.passed = check.margin > kDomainMargin;
  return check;
}

// --- Evaluation --------------------------------------------------------------

namespace detail {

double eval_kernel_unchecked(const KernelSpec& spec, std::span<PointRef> points) {
  std::sort(points.begin(), points.end(), lex_less);
  const std::size_t d = spec.dim;
  if (spec.mode == CompositionMode::Composed) {
    double z = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      double prod = 1.0;
      for (const auto& p : points) prod *= p[t];
      z += prod;
    }
    return spec.psi(z);
  }
  double value = 1.0;
  for (std::size_t t = 0; t < d; ++t) {
    double prod = 1.0;
    for (const auto& p : points) prod *= p[t];
    value *= spec.psi(prod);
  }
  return value;
}

}  // namespace detail

namespace {

void check_arguments(const KernelSpec& spec, std::span<const PointRef> points) {
  spec.validate();
  if (points.size() != spec.order) {
    throw Error(Errc::DimensionMismatch, "kernel of order " + std::to_string(spec.order) +
                                             " called with " + std::to_string(points.size()) +
                                             " points");
  }
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (points[j].size() != spec.dim) {
      throw Error(Errc::DimensionMismatch,
                  "point has dimension " + std::to_string(points[j].size()) + ", expected " +
                      std::to_string(spec.dim),
                  j);
    }
    if (!check_domain(spec, points[j]).passed) {
      throw Error(Errc::DomainViolation, "point outside the kernel's convergence region", j);
    }
  }
}

std::vector<PointRef> as_refs(const std::vector<Point>& points) {
  return {points.begin(), points.end()};
}

}  // namespace

double eval_kernel(const KernelSpec& spec, std::span<const PointRef> points) {
  check_arguments(spec, points);
  std::vector<PointRef> sorted(points.begin(), points.end());
  return detail::eval_kernel_unchecked(spec, sorted);
}

double eval_kernel(const KernelSpec& spec, const std::vector<Point>& points) {
  const auto refs = as_refs(points);
  return eval_kernel(spec, std::span<const PointRef>(refs));
}

double eval_diagonal(const KernelSpec& spec, PointRef x) {
  std::vector<PointRef> refs(spec.order, x);
  return eval_kernel(spec, std::span<const PointRef>(refs));
}

double eval_normalized(const KernelSpec& spec, std::span<const PointRef> points) {
  check_arguments(spec, points);
  std::vector<PointRef> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), lex_less);
  const double inv_m = 1.0 / static_cast<double>(spec.order);
  double denom = 1.0;
  std::vector<PointRef> diag(spec.order);
  for (const auto& p : sorted) {
    std::fill(diag.begin(), diag.end(), p);
    const double k = detail::eval_kernel_unchecked(spec, diag);
    if (!(k > 0.0)) {
      throw Error(Errc::ZeroDiagonal, "K(x, ..., x) is not positive");
    }
    denom *= std::pow(k, inv_m);
  }
  return detail::eval_kernel_unchecked(spec, sorted) / denom;
}

double eval_normalized(const KernelSpec& spec, const std::vector<Point>& points) {
  const auto refs = as_refs(points);
  return eval_normalized(spec, std::span<const PointRef>(refs));
}

// --- Dictionary --------------------------------------------------------------

std::vector<DictionaryEntry> multi_index_dictionary(const KernelSpec& spec, std::size_t cutoff,
                                                    std::size_t cap) {
  spec.validate();
  const std::size_t d = spec.dim;
  const std::uint64_t count = binomial(cutoff + d, d);
  if (count > cap) {
    throw Error(Errc::CombinatorialOverflow, "dictionary with cutoff " + std::to_string(cutoff) +
                                                 " has " + std::to_string(count) +
                                                 " entries, cap is " + std::to_string(cap));
  }
  std::vector<double> gammas(cutoff + 1);
  for (std::size_t k = 0; k <= cutoff; ++k) gammas[k] = spec.series.coefficient(k);

  std::vector<DictionaryEntry> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> nu(d, 0);

  // Compositions of `remaining` into coordinates [t, d), leading coordinate
  // taking its largest value first.
  auto emit = [&](auto&& self, std::size_t t, std::size_t remaining, std::size_t degree) -> void {
    if (t + 1 == d) {
      nu[t] = remaining;
      double weight = 0.0;
      if (spec.mode == CompositionMode::Composed) {
        weight = gammas[degree] * multinomial(nu);
      } else {
        weight = 1.0;
        for (auto c : nu) weight *= gammas[c];
      }
      out.push_back({nu, weight});
      return;
    }
    for (std::size_t v = remaining + 1; v-- > 0;) {
      nu[t] = v;
      self(self, t + 1, remaining - v, degree);
    }
  };
  for (std::size_t degree = 0; degree <= cutoff; ++degree) emit(emit, 0, degree, degree);
  return out;
}

}  // namespace tksvr
