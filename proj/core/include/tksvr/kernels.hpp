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
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace tksvr {

using Point = std::vector<double>;
using PointRef = std::span<const double>;

/// Built-in scalar series psi(z) = sum_k gamma_k z^k. Custom holds an explicit
/// finite coefficient list and has no closed form beyond the polynomial itself.
enum class SeriesFamily { Exponential, Polynomial, Binomial, Geometric, BergmanLike, Custom };

std::string_view to_string(SeriesFamily family) noexcept;
std::optional<SeriesFamily> parse_series_family(std::string_view name) noexcept;

/// Nonnegative power-series coefficients together with their radius of
/// convergence and, for the built-in families, the closed-form sum.
class SeriesSpec {
 public:
  static SeriesSpec exponential();
  static SeriesSpec polynomial(unsigned degree);
  static SeriesSpec binomial(double alpha);
  static SeriesSpec geometric();
  static SeriesSpec bergman_like();
  static SeriesSpec custom(std::vector<double> coefficients);

  SeriesFamily family() const noexcept { return family_; }
  unsigned polynomial_degree() const noexcept { return degree_; }
  double alpha() const noexcept { return alpha_; }
  const std::vector<double>& custom_coefficients() const noexcept { return coeffs_; }

  double coefficient(std::size_t k) const;
  /// 1 / limsup gamma_k^{1/k}; +inf for finite and exponential series.
  double radius() const noexcept;
  bool has_closed_form() const noexcept { return family_ != SeriesFamily::Custom; }
  /// Index of the last nonzero coefficient for finite series.
  std::optional<std::size_t> degree() const noexcept;

  /// Closed-form psi(z). Requires |z| < radius().
  double closed_form(double z) const;

  /// Truncated series evaluation. Terms are added until the certified tail
  /// bound drops below 1e-14 * |partial sum|; gives up with NonConvergent
  /// after 10^6 terms.
  double series_sum(double z) const;

  /// Upper bound on gamma_{k+1} / gamma_k over all k >= j (used for the tail).
  double ratio_bound(std::size_t j) const noexcept;

 private:
  SeriesSpec(SeriesFamily family) : family_(family) {}

  SeriesFamily family_;
  unsigned degree_ = 0;
  double alpha_ = 0.0;
  std::vector<double> coeffs_;
};

/// Composed: K = psi(sum_t prod_j x_{j,t}). Product: K = prod_t psi(prod_j x_{j,t}).
enum class CompositionMode { Composed, Product };

std::string_view to_string(CompositionMode mode) noexcept;
std::optional<CompositionMode> parse_composition_mode(std::string_view name) noexcept;

enum class Evaluation { Auto, ClosedForm, Series };

/// Order-m power-series tensor kernel over R^d.
struct KernelSpec {
  SeriesSpec series = SeriesSpec::exponential();
  CompositionMode mode = CompositionMode::Composed;
  std::size_t order = 2;
  std::size_t dim = 1;
  Evaluation evaluation = Evaluation::Auto;

  /// Throws InvalidArgument unless m is even and >= 2 and d >= 1.
  void validate() const;

  /// Regularizer exponent r = m / (m - 1).
  double r() const noexcept { return static_cast<double>(order) / static_cast<double>(order - 1); }
  /// Conjugate exponent r* = m.
  double r_star() const noexcept { return static_cast<double>(order); }

  /// True when the dictionary has finitely many nonzero weights.
  bool finite_dictionary() const noexcept;
  /// Smallest cutoff that enumerates every nonzero weight (finite dictionaries).
  std::optional<std::size_t> complete_cutoff() const noexcept;

  double psi(double z) const;
};

inline constexpr double kDomainMargin = 1e-9;

struct DomainCheck {
  bool passed = false;
  /// Distance to the convergence boundary in the mode's own units
  /// (R - sum |x_t|^m for Composed, R^{1/m} - max |x_t| for Product).
  double margin = -std::numeric_limits<double>::infinity();
};

/// Never throws. Points within kDomainMargin of the boundary fail.
DomainCheck check_domain(const KernelSpec& spec, PointRef point) noexcept;

/// K(x_1, ..., x_m). Arguments are sorted lexicographically before evaluation
/// so the result is bit-identical under any permutation.
double eval_kernel(const KernelSpec& spec, std::span<const PointRef> points);
double eval_kernel(const KernelSpec& spec, const std::vector<Point>& points);

/// K(x_1..x_m) / prod_j K(x_j, ..., x_j)^{1/m}.
double eval_normalized(const KernelSpec& spec, std::span<const PointRef> points);
double eval_normalized(const KernelSpec& spec, const std::vector<Point>& points);

/// K(x, ..., x).
double eval_diagonal(const KernelSpec& spec, PointRef x);

struct DictionaryEntry {
  std::vector<std::size_t> nu;
  double weight = 0.0;
};

inline constexpr std::size_t kDefaultDictionaryCap = 1'000'000;

/// All nu in N^d with |nu| <= cutoff, in graded order (by |nu|, then with the
/// leading coordinates largest first), paired with the mode's weight rho_nu.
std::vector<DictionaryEntry> multi_index_dictionary(const KernelSpec& spec, std::size_t cutoff,
                                                    std::size_t cap = kDefaultDictionaryCap);

namespace detail {

/// Kernel evaluation without domain checks; the points must already be
/// validated. Sorts `points` in place.
double eval_kernel_unchecked(const KernelSpec& spec, std::span<PointRef> points);

}  // namespace detail

}  // namespace tksvr
