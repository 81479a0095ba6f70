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

#include "tksvr/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <regex>
#include <sstream>

#include "test_support.hpp"
#include "tksvr/diagnostics/oracle.hpp"
#include "tksvr/error.hpp"

namespace tksvr {
namespace {

using testing::make_kernel;

Dataset random_dataset(std::mt19937_64& rng, const KernelSpec& k, std::size_t n) {
  return {testing::random_domain_points(rng, k, n), testing::random_vector(rng, n, 1.0)};
}

FitOptions no_offset(LossSpec loss = LossSpec::square(), double gamma = 1.0) {
  FitOptions o;
  o.loss = loss;
  o.gamma = gamma;
  o.offset = OffsetMode::NoOffset;
  return o;
}

TEST(Fit, SinglePointClosedForm) {
  const auto k = make_kernel(SeriesSpec::polynomial(2), CompositionMode::Composed, 2, 1);
  const Dataset data{{{0.5}}, {1.5}};
  const double g = 1.25 * 1.25, gamma = 2.0;
  const auto model = fit(data, k, no_offset(LossSpec::square(), gamma));
  ASSERT_TRUE(model.diagnostics().converged);
  const double u1 = 1.5 / (g + 1.0 / gamma);
  EXPECT_NEAR(model.u()[0], u1, 1e-6);
  EXPECT_EQ(model.scale(), 1.0);
  EXPECT_EQ(model.offset(), 0.0);
  EXPECT_NEAR(predict(model, Point{0.5}), model.u()[0] * g, 1e-14);
}

TEST(Fit, ZeroLabels) {
  std::mt19937_64 rng(1);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Product, 4, 2);
  Dataset data = random_dataset(rng, k, 5);
  data.labels.assign(5, 0.0);
  const auto model = fit(data, k, FitOptions{});
  for (double v : model.u()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(model.offset(), 0.0);
  EXPECT_TRUE(model.diagnostics().trivial);
  for (const auto& x : testing::random_domain_points(rng, k, 10)) EXPECT_EQ(predict(model, x), 0.0);
}

TEST(Fit, OrderTwoMatchesKernelRidge) {
  std::mt19937_64 rng(2);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 2, 3);
  const auto data = random_dataset(rng, k, 20);
  const double gamma = 3.0, n = 20.0;
  const auto model = fit(data, k, no_offset(LossSpec::square(), gamma));
  ASSERT_TRUE(model.diagnostics().converged);
  // kernel ridge: f(x) = k(x)^T (G + n/gamma I)^{-1} y
  const Eigen::MatrixXd g = testing::gram_matrix(k, data.inputs);
  const Eigen::VectorXd alpha =
      (g + Eigen::MatrixXd::Identity(20, 20) * (n / gamma)).ldlt().solve(testing::to_eigen(data.labels));
  for (const auto& x : testing::random_domain_points(rng, k, 30)) {
    Eigen::VectorXd kx(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      kx(i) = eval_kernel(k, std::vector<Point>{data.inputs[static_cast<std::size_t>(i)], x});
    }
    EXPECT_NEAR(predict(model, x), kx.dot(alpha), 1e-6);
  }
}

TEST(Predict, ZeroDualGivesOffset) {
  const auto k = make_kernel(SeriesSpec::geometric(), CompositionMode::Composed, 4, 2);
  Model model(k, {{0.1, 0.2}, {0.3, -0.1}}, {0.0, 0.0}, 0.75, FitOptions{}, {});
  EXPECT_EQ(predict(model, Point{0.2, 0.2}), 0.75);
  try {
    predict(model, Point{1.0, 0.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DomainViolation);
  }
}

TEST(Predict, BatchErrorsCarryRow) {
  const auto k = make_kernel(SeriesSpec::geometric(), CompositionMode::Product, 2, 1);
  Model model(k, {{0.1}}, {1.0}, 0.0, FitOptions{}, {});
  const std::vector<Point> xs{{0.2}, {0.4}, {1.2}};
  try {
    predict(model, xs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DomainViolation);
    EXPECT_EQ(e.index(), 2U);
  }
}

TEST(Predict, RepresenterFidelityPolynomial) {
  std::mt19937_64 rng(3);
  const auto k = make_kernel(SeriesSpec::polynomial(2), CompositionMode::Composed, 4, 2);
  const auto data = random_dataset(rng, k, 5);
  const auto model = fit(data, k, FitOptions{});
  ASSERT_TRUE(model.diagnostics().converged);
  const auto fmap = diagnostics::ExplicitFeatureMap::exact(k);
  const auto w = diagnostics::primal_weights(fmap, model.u(), model.inputs());
  for (const auto& x : testing::random_domain_points(rng, k, 100)) {
    const double direct = diagnostics::pairing(fmap, w, x) + model.offset();
    const double f = predict(model, x);
    EXPECT_LE(std::abs(f - direct), 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST(Fit, LabelNegationNegatesPredictor) {
  std::mt19937_64 rng(4);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 2);
  auto data = random_dataset(rng, k, 6);
  const auto pos = fit(data, k, FitOptions{});
  for (auto& y : data.labels) y = -y;
  const auto neg = fit(data, k, FitOptions{});
  for (const auto& x : testing::random_domain_points(rng, k, 20)) {
    EXPECT_NEAR(predict(pos, x), -predict(neg, x), 1e-5);
  }
}

TEST(Fit, Errors) {
  const auto k = make_kernel(SeriesSpec::geometric(), CompositionMode::Composed, 2, 1);
  try {
    fit(Dataset{}, k, FitOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidArgument);
  }
  try {
    fit(Dataset{{{0.1}, {0.2}, {1.5}}, {1, 2, 3}}, k, FitOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DomainViolation);
    EXPECT_EQ(e.index(), 2U);
  }
  try {
    FitOptions o;
    o.loss = LossSpec::eps_insensitive(0.1);
    fit(Dataset{{{0.1}}, {1.0}}, k, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InfeasibleConfig);
  }
}

TEST(Residuals, ZeroModelReturnsLabels) {
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 2, 1);
  const Dataset data{{{0.1}, {0.7}}, {1.0, -2.0}};
  Model model(k, data.inputs, {0.0, 0.0}, 0.0, FitOptions{}, {});
  EXPECT_EQ(residuals(model, data), data.labels);
}

TEST(Residuals, InterpolationWithLargeGamma) {
  std::mt19937_64 rng(5);
  const auto k = make_kernel(SeriesSpec::polynomial(3), CompositionMode::Composed, 4, 2);
  const auto pts = testing::random_domain_points(rng, k, 6);
  // labels from a known order-4 model
  Model truth(k, pts, testing::random_vector(rng, 6, 1.0), 0.0, FitOptions{}, {});
  const Dataset data{pts, predict(truth, pts)};
  // A nearly flat quartic dual: judge the fit by its residuals, not by the
  // KKT tolerance.
  auto options = no_offset(LossSpec::square(), 1e3);
  options.solver.max_iter = 50000;
  const auto model = fit(data, k, options);
  double worst = 0.0;
  for (double e : residuals(model, data)) worst = std::max(worst, std::abs(e));
  EXPECT_LE(worst, 1e-2);
}

TEST(Residuals, EpsComplementarySlackness) {
  std::mt19937_64 rng(6);
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = random_dataset(rng, k, 8);
    const auto model = fit(data, k, no_offset(LossSpec::eps_insensitive(0.2), 0.5));
    ASSERT_TRUE(model.diagnostics().converged);
    const auto e = residuals(model, data);
    for (std::size_t i = 0; i < e.size(); ++i) {
      EXPECT_LE(std::abs(model.u()[i]), 0.5);
      if (std::abs(e[i]) < 0.2 - 1e-6) EXPECT_LE(std::abs(model.u()[i]), 1e-6);
    }
  }
}

TEST(Model, ScaleMatchesGeneralRepresenterFormula) {
  std::mt19937_64 rng(7);
  for (std::size_t m : {2U, 4U, 6U}) {
    const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, m, 1);
    const auto data = random_dataset(rng, k, 4);
    const auto model = fit(data, k, no_offset());
    const double ku = contract_full(model.gram(), model.u());
    ASSERT_GT(ku, 0.0);
    const double general = diagnostics::general_representer_scale(ku, 4, m);
    EXPECT_NEAR(general, model.scale(), 1e-12 * model.scale());
    EXPECT_EQ(model.scale(), 1.0 / std::pow(4.0, static_cast<double>(m - 1)));
  }
}

TEST(Serialization, RoundTripIsBitExact) {
  std::mt19937_64 rng(8);
  for (const auto& k : testing::builtin_kernels(4, 2)) {
    const auto data = random_dataset(rng, k, 5);
    const auto model = fit(data, k, FitOptions{});
    std::stringstream buf;
    save(model, buf);
    const auto loaded = load(buf);
    EXPECT_EQ(loaded.u(), model.u());
    EXPECT_EQ(loaded.offset(), model.offset());
    EXPECT_EQ(loaded.diagnostics().iterations, model.diagnostics().iterations);
    for (const auto& x : testing::random_domain_points(rng, k, 100)) {
      EXPECT_EQ(predict(loaded, x), predict(model, x));
    }
    std::stringstream again;
    save(loaded, again);
    std::stringstream first;
    save(model, first);
    EXPECT_EQ(again.str(), first.str());
  }
}

TEST(Serialization, CustomAndEpsRoundTrip) {
  KernelSpec k = make_kernel(SeriesSpec::custom({1.0, 0.5, 0.25}), CompositionMode::Product, 2, 2);
  std::mt19937_64 rng(9);
  const auto data = random_dataset(rng, k, 4);
  const auto model = fit(data, k, no_offset(LossSpec::eps_insensitive(0.05), 0.7));
  std::stringstream buf;
  save(model, buf);
  const auto loaded = load(buf);
  EXPECT_EQ(loaded.training().loss.kind, LossKind::EpsInsensitive);
  EXPECT_EQ(loaded.training().loss.epsilon, 0.05);
  EXPECT_EQ(loaded.training().offset, OffsetMode::NoOffset);
  EXPECT_EQ(loaded.kernel().series.family(), SeriesFamily::Custom);
  EXPECT_EQ(predict(loaded, Point{0.1, 0.3}), predict(model, Point{0.1, 0.3}));
}

std::string saved_json(const Model& model) {
  std::stringstream buf;
  save(model, buf);
  return buf.str();
}

Errc load_error(const std::string& text) {
  std::istringstream in(text);
  try {
    load(in);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "load accepted: " << text;
  return Errc::InvalidArgument;
}

// The saved JSON is pretty-printed, so match through whitespace.
void replace_once(std::string& s, const std::string& pattern, const std::string& to) {
  const std::regex re(pattern);
  ASSERT_TRUE(std::regex_search(s, re)) << pattern;
  s = std::regex_replace(s, re, to, std::regex_constants::format_first_only);
}

TEST(Serialization, LoadValidation) {
  const auto k = make_kernel(SeriesSpec::exponential(), CompositionMode::Composed, 4, 1);
  Model model(k, {{0.1}, {0.2}}, {0.5, -0.5}, 0.0, FitOptions{}, {});
  const auto text = saved_json(model);

  auto odd = text;
  replace_once(odd, R"("m":\s*4)", R"("m": 3)");
  EXPECT_EQ(load_error(odd), Errc::SchemaVersionMismatch);

  auto version = text;
  replace_once(version, R"("version":\s*1)", R"("version": 99)");
  EXPECT_EQ(load_error(version), Errc::SchemaVersionMismatch);

  auto short_u = text;
  replace_once(short_u, R"("u":\s*\[[^\]]*\])", R"("u": [0.5])");
  EXPECT_EQ(load_error(short_u), Errc::CorruptPayload);

  EXPECT_EQ(load_error("{not json"), Errc::CorruptPayload);
  EXPECT_EQ(load_error("{}"), Errc::SchemaVersionMismatch);
  EXPECT_EQ(load_error(R"({"version": 1})"), Errc::CorruptPayload);
}

}  // namespace
}  // namespace tksvr
