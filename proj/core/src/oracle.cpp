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

#include "tksvr/diagnostics/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tksvr/combinatorics.hpp"
#include "tksvr/error.hpp"

namespace tksvr::diagnostics {
namespace {

double ipow(double base, std::size_t exp) {
  double r = 1.0;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

double series_value(const SeriesSpec& s, double z) {
  return s.has_closed_form() || s.degree() ? s.closed_form(z) : s.series_sum(z);
}

/// sum_nu rho_nu |x^nu|^m over the full (infinite) dictionary.
double total_mass(const KernelSpec& spec, PointRef x) {
  if (spec.mode == CompositionMode::Composed) {
    double z = 0.0;
    for (double v : x) z += ipow(std::abs(v), spec.order);
    return series_value(spec.series, z);
  }
  double total = 1.0;
  for (double v : x) total *= series_value(spec.series, ipow(std::abs(v), spec.order));
  return total;
}

void require_inputs(const ExplicitFeatureMap& fmap, std::span<const double> u,
                    std::span<const Point> inputs) {
  if (u.size() != inputs.size()) {
    throw Error(Errc::DimensionMismatch, "u and inputs differ in length");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!check_domain(fmap.kernel(), inputs[i]).passed) {
      throw Error(Errc::DomainViolation, "input outside the kernel domain", i);
    }
    if (!fmap.complete()) {
      const double retained = fmap.retained_mass(inputs[i]);
      if (fmap.tail_mass(inputs[i]) > kTruncationRelTol * retained) {
        throw Error(Errc::TruncationTooCoarse,
                    "dictionary cutoff " + std::to_string(fmap.cutoff()) +
                        " drops too much mass at input " + std::to_string(i),
                    i);
      }
    }
  }
}

}  // namespace

// --- ExplicitFeatureMap ------------------------------------------------------

ExplicitFeatureMap::ExplicitFeatureMap(KernelSpec spec, std::size_t cutoff)
    : spec_(std::move(spec)), cutoff_(cutoff) {
  dict_ = multi_index_dictionary(spec_, cutoff_);
  const auto full = spec_.complete_cutoff();
  complete_ = full.has_value() && cutoff_ >= *full;
  roots_.reserve(dict_.size());
  const double inv_m = 1.0 / static_cast<double>(spec_.order);
  for (const auto& e : dict_) roots_.push_back(std::pow(e.weight, inv_m));
}

ExplicitFeatureMap ExplicitFeatureMap::exact(const KernelSpec& spec) {
  const auto full = spec.complete_cutoff();
  if (!full) {
    throw Error(Errc::TruncationTooCoarse,
                std::string(to_string(spec.series.family())) + " kernels have no finite dictionary");
  }
  return ExplicitFeatureMap(spec, *full);
}

ExplicitFeatureMap ExplicitFeatureMap::truncated(const KernelSpec& spec, std::size_t cutoff) {
  return ExplicitFeatureMap(spec, cutoff);
}

ExplicitFeatureMap ExplicitFeatureMap::for_points(const KernelSpec& spec,
                                                  std::span<const Point> points, double rel_tol,
                                                  std::size_t max_degree) {
  if (auto full = spec.complete_cutoff(); full && *full <= max_degree) return exact(spec);
  for (std::size_t cutoff = 0; cutoff <= max_degree; ++cutoff) {
    ExplicitFeatureMap fmap(spec, cutoff);
    bool ok = true;
    for (const auto& x : points) {
      if (fmap.tail_mass(x) > rel_tol * fmap.retained_mass(x)) {
        ok = false;
        break;
      }
    }
    if (ok) return fmap;
  }
  throw Error(Errc::TruncationTooCoarse, "no cutoff up to " + std::to_string(max_degree) +
                                             " certifies a relative tail below " +
                                             std::to_string(rel_tol));
}

std::vector<double> ExplicitFeatureMap::features(PointRef x) const {
  if (x.size() != spec_.dim) throw Error(Errc::DimensionMismatch, "feature map dimension mismatch");
  std::vector<double> out(dict_.size());
  for (std::size_t k = 0; k < dict_.size(); ++k) {
    double mono = 1.0;
    for (std::size_t t = 0; t < spec_.dim; ++t) mono *= ipow(x[t], dict_[k].nu[t]);
    out[k] = roots_[k] * mono;
  }
  return out;
}

double ExplicitFeatureMap::retained_mass(PointRef x) const {
  CompensatedSum s;
  for (double f : features(x)) s.add(ipow(std::abs(f), spec_.order));
  return s.value();
}

double ExplicitFeatureMap::tail_mass(PointRef x) const {
  if (complete_) return 0.0;
  return std::max(0.0, total_mass(spec_, x) - retained_mass(x));
}

// --- Primal objects ----------------------------------------------------------

double feature_norm(const ExplicitFeatureMap& fmap, std::span<const double> u,
                    std::span<const Point> inputs) {
  require_inputs(fmap, u, inputs);
  std::vector<double> combo(fmap.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto phi = fmap.features(inputs[i]);
    for (std::size_t k = 0; k < phi.size(); ++k) combo[k] += u[i] * phi[k];
  }
  CompensatedSum s;
  for (double c : combo) s.add(ipow(c, fmap.kernel().order));
  return s.value();
}

std::vector<double> primal_weights(const ExplicitFeatureMap& fmap, std::span<const double> u,
                                   std::span<const Point> inputs) {
  require_inputs(fmap, u, inputs);
  const std::size_t m = fmap.kernel().order;
  std::vector<double> combo(fmap.size(), 0.0);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto phi = fmap.features(inputs[i]);
    for (std::size_t k = 0; k < phi.size(); ++k) combo[k] += u[i] * phi[k];
  }
  // J_m(v) = v^{m-1} componentwise; m - 1 is odd so the sign carries over.
  auto w = duality_map(combo, static_cast<double>(m));
  const double scale = 1.0 / ipow(static_cast<double>(inputs.size()), m - 1);
  for (double& v : w) v *= scale;
  return w;
}

double pairing(const ExplicitFeatureMap& fmap, std::span<const double> w, PointRef x) {
  if (w.size() != fmap.size()) throw Error(Errc::DimensionMismatch, "weight length mismatch");
  const auto phi = fmap.features(x);
  CompensatedSum s;
  for (std::size_t k = 0; k < phi.size(); ++k) s.add(w[k] * phi[k]);
  return s.value();
}

std::vector<double> duality_map(std::span<const double> w, double p) {
  std::vector<double> out(w.size());
  const double rounded = std::round(p);
  const bool integral = rounded == p && p >= 1.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (integral) {
      const double mag = ipow(std::abs(w[k]), static_cast<std::size_t>(rounded) - 1);
      out[k] = w[k] < 0.0 ? -mag : (w[k] > 0.0 ? mag : 0.0);
    } else {
      out[k] = w[k] == 0.0 ? 0.0 : std::copysign(std::pow(std::abs(w[k]), p - 1.0), w[k]);
    }
  }
  return out;
}

double general_representer_scale(double k_of_u, std::size_t n, std::size_t m) {
  if (!(k_of_u > 0.0)) {
    throw Error(Errc::InvalidArgument, "representer scale needs K[u] > 0");
  }
  const double md = static_cast<double>(m);
  const double r = md / (md - 1.0);
  const double s = std::pow(k_of_u, 1.0 / md) / static_cast<double>(n);
  const double dphi_star = std::pow(s, md - 1.0);  // (phi*)'(s) for phi* = s^m / m, s > 0
  return dphi_star / std::pow(k_of_u, 1.0 / r);
}

// --- Naive contractions ------------------------------------------------------

namespace {

template <class Fn>
void for_each_tuple(std::size_t n, std::size_t len, Fn&& fn) {
  std::vector<std::size_t> idx(len, 0);
  while (true) {
    fn(idx);
    std::size_t pos = len;
    while (pos > 0) {
      if (++idx[pos - 1] < n) break;
      idx[pos - 1] = 0;
      --pos;
    }
    if (pos == 0) return;
  }
}

}  // namespace

double naive_contract_full(const KernelSpec& spec, std::span<const Point> inputs,
                           std::span<const double> u) {
  if (u.size() != inputs.size()) throw Error(Errc::DimensionMismatch, "u and inputs differ");
  CompensatedSum s;
  std::vector<PointRef> args(spec.order);
  for_each_tuple(inputs.size(), spec.order, [&](const std::vector<std::size_t>& idx) {
    double coeff = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      args[k] = inputs[idx[k]];
      coeff *= u[idx[k]];
    }
    s.add(eval_kernel(spec, std::span<const PointRef>(args)) * coeff);
  });
  return s.value();
}

double naive_contract_predict(const KernelSpec& spec, std::span<const Point> inputs,
                              std::span<const double> u, PointRef x) {
  if (u.size() != inputs.size()) throw Error(Errc::DimensionMismatch, "u and inputs differ");
  CompensatedSum s;
  std::vector<PointRef> args(spec.order);
  args.back() = x;
  for_each_tuple(inputs.size(), spec.order - 1, [&](const std::vector<std::size_t>& idx) {
    double coeff = 1.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      args[k] = inputs[idx[k]];
      coeff *= u[idx[k]];
    }
    s.add(eval_kernel(spec, std::span<const PointRef>(args)) * coeff);
  });
  return s.value();
}

// --- Brute-force dual --------------------------------------------------------

std::vector<double> brute_force_dual(const DualProblem& problem, double resolution) {
  const std::size_t n = problem.size();
  if (n > 2) throw Error(Errc::InvalidArgument, "brute_force_dual handles n <= 2 only");
  if (!(resolution > 0.0)) throw Error(Errc::InvalidArgument, "resolution must be positive");

  const bool eps = problem.loss().kind == LossKind::EpsInsensitive;
  const bool hyperplane = problem.offset() == OffsetMode::WithOffset;
  double radius = problem.gamma();
  if (!eps) {
    double y2 = 0.0;
    for (double y : problem.labels()) y2 += y * y;
    // F(u) <= F(0) = 0 forces ||u||^2 / (2 gamma) <= <y, u>, so ||u||_2 <= 2 gamma ||y||_2.
    radius = 2.0 * problem.gamma() * std::sqrt(y2);
  }
  if (radius == 0.0 || (hyperplane && n == 1)) return std::vector<double>(n, 0.0);

  // Free parameters: u itself, or t with u = t (1, -1) on the hyperplane.
  const std::size_t dims = hyperplane ? 1 : n;
  auto to_u = [&](const std::vector<double>& p) {
    if (!hyperplane) return p;
    return std::vector<double>{p[0], -p[0]};
  };
  auto objective = [&](const std::vector<double>& p) {
    return dual_objective(problem, to_u(p));
  };

  constexpr std::size_t kCells = 200;
  constexpr double kWindowCells = 5.0;
  std::vector<double> lo(dims, -radius), hi(dims, radius), best(dims, 0.0);

  auto search = [&](const std::vector<double>& l, const std::vector<double>& h) {
    std::vector<double> p(dims), arg(dims);
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(dims, 0);
    while (true) {
      for (std::size_t k = 0; k < dims; ++k) {
        p[k] = l[k] + (h[k] - l[k]) * static_cast<double>(idx[k]) / kCells;
      }
      const double v = objective(p);
      if (v < best_val) {
        best_val = v;
        arg = p;
      }
      std::size_t pos = dims;
      while (pos > 0) {
        if (++idx[pos - 1] <= kCells) break;
        idx[pos - 1] = 0;
        --pos;
      }
      if (pos == 0) break;
    }
    return arg;
  };
  auto window = [&](const std::vector<double>& center, double spacing) {
    for (std::size_t k = 0; k < dims; ++k) {
      lo[k] = std::max(-radius, center[k] - kWindowCells * spacing);
      hi[k] = std::min(radius, center[k] + kWindowCells * spacing);
    }
  };

  double spacing = 2.0 * radius / kCells;
  best = search(lo, hi);
  while (spacing > resolution) {
    window(best, spacing);
    spacing = (hi[0] - lo[0]) / kCells;
    for (std::size_t k = 1; k < dims; ++k) spacing = std::max(spacing, (hi[k] - lo[k]) / kCells);
    best = search(lo, hi);
  }

  // Sanity refinement one decade below the target resolution.
  window(best, std::max(spacing, resolution / 10.0) * 2.0);
  const auto refined = search(lo, hi);
  for (std::size_t k = 0; k < dims; ++k) {
    if (std::abs(refined[k] - best[k]) > resolution) {
      throw Error(Errc::GridTooCoarse, "refinement moved the grid minimizer by more than " +
                                           std::to_string(resolution));
    }
  }
  return to_u(refined);
}

// --- Generalized Cauchy-Schwarz ----------------------------------------------

HolderCheck holder_check(const KernelSpec& spec, std::span<const PointRef> points) {
  HolderCheck h;
  h.lhs = std::abs(eval_kernel(spec, points));
  h.rhs = 1.0;
  const double inv_m = 1.0 / static_cast<double>(spec.order);
  for (const auto& p : points) h.rhs *= std::pow(eval_diagonal(spec, p), inv_m);
  h.pass = h.lhs <= h.rhs * (1.0 + 1e-12);
  return h;
}

HolderCheck holder_check(const KernelSpec& spec, const std::vector<Point>& points) {
  std::vector<PointRef> refs(points.begin(), points.end());
  return holder_check(spec, std::span<const PointRef>(refs));
}

}  // namespace tksvr::diagnostics
