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

// Ground-truth routines that work through the explicit feature map or by
// exhaustive enumeration. They share no code path with the multiset
// contraction engine and are meant for audits and tests at small n.

#include <cstddef>
#include <span>
#include <vector>

#include "tksvr/dual_solver.hpp"
#include "tksvr/kernels.hpp"

namespace tksvr::diagnostics {

inline constexpr double kTruncationRelTol = 1e-12;
inline constexpr std::size_t kMaxTruncationDegree = 30;

/// Feature map x -> (rho_nu^{1/m} x^nu)_nu over a (possibly truncated)
/// multi-index dictionary.
class ExplicitFeatureMap {
 public:
  /// Complete dictionary of a finite kernel (Polynomial, Custom).
  static ExplicitFeatureMap exact(const KernelSpec& spec);

  /// Dictionary with a fixed cutoff; `complete()` reports whether it is exact.
  static ExplicitFeatureMap truncated(const KernelSpec& spec, std::size_t cutoff);

  /// Smallest cutoff (<= max_degree) whose dropped l^m mass is below
  /// rel_tol times the retained mass at every point; TruncationTooCoarse
  /// otherwise.
  static ExplicitFeatureMap for_points(const KernelSpec& spec, std::span<const Point> points,
                                       double rel_tol = kTruncationRelTol,
                                       std::size_t max_degree = kMaxTruncationDegree);

  const KernelSpec& kernel() const noexcept { return spec_; }
  const std::vector<DictionaryEntry>& dictionary() const noexcept { return dict_; }
  std::size_t cutoff() const noexcept { return cutoff_; }
  bool complete() const noexcept { return complete_; }
  std::size_t size() const noexcept { return dict_.size(); }

  std::vector<double> features(PointRef x) const;

  /// sum_nu |phi_nu(x)|^m kept by the dictionary, and the dropped remainder
  /// (total from the closed form minus retained; 0 for complete maps).
  double retained_mass(PointRef x) const;
  double tail_mass(PointRef x) const;

 private:
  ExplicitFeatureMap(KernelSpec spec, std::size_t cutoff);

  KernelSpec spec_;
  std::size_t cutoff_ = 0;
  bool complete_ = false;
  std::vector<DictionaryEntry> dict_;
  std::vector<double> roots_;  // rho_nu^{1/m}
};

/// ||sum_i u_i Phi(x_i)||_m^m. TruncationTooCoarse when the map is not
/// complete and some input's dropped mass exceeds kTruncationRelTol.
double feature_norm(const ExplicitFeatureMap& fmap, std::span<const double> u,
                    std::span<const Point> inputs);

/// w_nu = n^{1-m} (sum_i u_i phi_nu(x_i))^{m-1}.
std::vector<double> primal_weights(const ExplicitFeatureMap& fmap, std::span<const double> u,
                                   std::span<const Point> inputs);

/// <w, Phi(x)>.
double pairing(const ExplicitFeatureMap& fmap, std::span<const double> w, PointRef x);

/// J_p(w) = (|w_k|^{p-1} sign(w_k))_k, the duality map of l^p.
std::vector<double> duality_map(std::span<const double> w, double p);

/// Representer scale from the general formula
/// (phi*)'(K[u]^{1/r*} / n) / K[u]^{1/r} for phi = |.|^r / r, r* = m.
double general_representer_scale(double k_of_u, std::size_t n, std::size_t m);

/// sum over all n^m ordered index tuples.
double naive_contract_full(const KernelSpec& spec, std::span<const Point> inputs,
                           std::span<const double> u);

/// sum over all n^{m-1} ordered tuples with x in the last slot.
double naive_contract_predict(const KernelSpec& spec, std::span<const Point> inputs,
                              std::span<const double> u, PointRef x);

/// Grid minimizer of dual_objective for n <= 2, refined coarse-to-fine down
/// to `resolution`. Search region: the box [-gamma, gamma]^n for
/// EpsInsensitive, the ball bound ||u||_2 <= 2 gamma ||y||_2 otherwise.
/// GridTooCoarse when a final refinement at resolution/10 moves the
/// minimizer by more than `resolution`.
std::vector<double> brute_force_dual(const DualProblem& problem, double resolution);

struct HolderCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

/// |K(x_1..x_m)| <= prod_j K(x_j, ..., x_j)^{1/m}, with 1e-12 relative slack.
HolderCheck holder_check(const KernelSpec& spec, std::span<const PointRef> points);
HolderCheck holder_check(const KernelSpec& spec, const std::vector<Point>& points);

}  // namespace tksvr::diagnostics
