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

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "tksvr/error.hpp"

namespace tksvr {
namespace {

using nlohmann::json;

double ipow(double base, std::size_t exp) {
  double r = 1.0;
  for (std::size_t i = 0; i < exp; ++i) r *= base;
  return r;
}

std::string_view to_string(Evaluation e) {
  switch (e) {
    case Evaluation::Auto: return "auto";
    case Evaluation::ClosedForm: return "closed-form";
    case Evaluation::Series: return "series";
  }
  return "auto";
}

json kernel_to_json(const KernelSpec& k) {
  json params = json::object();
  switch (k.series.family()) {
    case SeriesFamily::Polynomial: params["s"] = k.series.polynomial_degree(); break;
    case SeriesFamily::Binomial: params["alpha"] = k.series.alpha(); break;
    case SeriesFamily::Custom: params["coeffs"] = k.series.custom_coefficients(); break;
    default: break;
  }
  return {{"family", std::string(to_string(k.series.family()))},
          {"mode", std::string(to_string(k.mode))},
          {"m", k.order},
          {"d", k.dim},
          {"evaluation", std::string(to_string(k.evaluation))},
          {"params", params}};
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  const auto family = parse_series_family(j.at("family").get<std::string>());
  if (!family) throw Error(Errc::SchemaVersionMismatch, "unknown kernel family");
  const auto mode = parse_composition_mode(j.at("mode").get<std::string>());
  if (!mode) throw Error(Errc::SchemaVersionMismatch, "unknown composition mode");
  const auto& params = j.at("params");
  switch (*family) {
    case SeriesFamily::Exponential: k.series = SeriesSpec::exponential(); break;
    case SeriesFamily::Polynomial:
      k.series = SeriesSpec::polynomial(params.at("s").get<unsigned>());
      break;
    case SeriesFamily::Binomial:
      k.series = SeriesSpec::binomial(params.at("alpha").get<double>());
      break;
    case SeriesFamily::Geometric: k.series = SeriesSpec::geometric(); break;
    case SeriesFamily::BergmanLike: k.series = SeriesSpec::bergman_like(); break;
    case SeriesFamily::Custom:
      k.series = SeriesSpec::custom(params.at("coeffs").get<std::vector<double>>());
      break;
  }
  k.mode = *mode;
  const auto m = j.at("m").get<long long>();
  const auto d = j.at("d").get<long long>();
  if (m < 2 || m % 2 != 0 || d < 1) {
    throw Error(Errc::SchemaVersionMismatch,
                "kernel order must be even and >= 2 and dimension >= 1 (m = " +
                    std::to_string(m) + ", d = " + std::to_string(d) + ")");
  }
  k.order = static_cast<std::size_t>(m);
  k.dim = static_cast<std::size_t>(d);
  const std::string eval = j.value("evaluation", "auto");
  if (eval == "closed-form") {
    k.evaluation = Evaluation::ClosedForm;
  } else if (eval == "series") {
    k.evaluation = Evaluation::Series;
  } else if (eval != "auto") {
    throw Error(Errc::SchemaVersionMismatch, "unknown evaluation mode '" + eval + "'");
  }
  return k;
}

}  // namespace

void Dataset::validate(const KernelSpec& kernel) const {
  kernel.validate();
  if (inputs.empty()) throw Error(Errc::InvalidArgument, "dataset has no rows");
  if (inputs.size() != labels.size()) {
    throw Error(Errc::DimensionMismatch, std::to_string(inputs.size()) + " inputs but " +
                                             std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != kernel.dim) {
      throw Error(Errc::DimensionMismatch,
                  "row " + std::to_string(i) + " has " + std::to_string(inputs[i].size()) +
                      " features, expected " + std::to_string(kernel.dim),
                  i);
    }
    if (!std::isfinite(labels[i])) {
      throw Error(Errc::InvalidArgument, "row " + std::to_string(i) + " has a non-finite label",
                  i);
    }
    if (!check_domain(kernel, inputs[i]).passed) {
      throw Error(Errc::DomainViolation,
                  "row " + std::to_string(i) + " lies outside the kernel's convergence region", i);
    }
  }
}

Model::Model(KernelSpec kernel, std::vector<Point> inputs, std::vector<double> u, double b,
             FitOptions training, ModelDiagnostics diagnostics)
    : gram_(std::make_shared<GramTensor>(std::move(kernel), std::move(inputs))),
      u_(std::move(u)),
      b_(b),
      training_(training),
      diagnostics_(diagnostics) {
  if (u_.size() != gram_->size()) {
    throw Error(Errc::DimensionMismatch, "u has length " + std::to_string(u_.size()) + " for " +
                                             std::to_string(gram_->size()) + " inputs");
  }
  scale_ = 1.0 / ipow(static_cast<double>(gram_->size()), gram_->order() - 1);
}

Model fit(std::shared_ptr<const GramTensor> gram, std::span<const double> labels,
          const FitOptions& options, DualSolution* solution) {
  DualProblem problem(gram, {labels.begin(), labels.end()}, options.loss, options.gamma,
                      options.offset);
  const DualSolution sol = solve(problem, options.solver);
  const double b = recover_offset(problem, sol.u);
  ModelDiagnostics diag;
  diag.objective = sol.objective;
  diag.kkt_residual = sol.kkt_residual;
  diag.iterations = sol.iterations;
  diag.converged = sol.converged;
  diag.status = sol.status;
  diag.trivial = !(contract_full(*gram, sol.u) > 0.0);
  if (solution) *solution = sol;
  return Model(gram->kernel(), gram->points(), sol.u, b, options, diag);
}

Model fit(const Dataset& data, const KernelSpec& kernel, const FitOptions& options,
          DualSolution* solution) {
  data.validate(kernel);
  auto gram = std::make_shared<const GramTensor>(kernel, data.inputs);
  return fit(std::move(gram), data.labels, options, solution);
}

double predict(const Model& model, PointRef x) {
  if (model.diagnostics().trivial) {
    // Domain contract still applies to the query.
    if (!check_domain(model.kernel(), x).passed || x.size() != model.kernel().dim) {
      throw Error(Errc::DomainViolation, "query point outside the kernel's convergence region");
    }
    return model.offset();
  }
  return model.scale() * contract_predict(model.gram(), model.u(), x) + model.offset();
}

std::vector<double> predict(const Model& model, std::span<const Point> xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    try {
      out[i] = predict(model, xs[i]);
    } catch (const Error& e) {
      throw Error(e.code(), "row " + std::to_string(i) + ": " + e.what(), i);
    }
  }
  return out;
}

std::vector<double> residuals(const Model& model, const Dataset& data) {
  if (data.inputs.size() != data.labels.size()) {
    throw Error(Errc::DimensionMismatch, "inputs and labels differ in length");
  }
  const auto fitted = predict(model, data.inputs);
  std::vector<double> e(fitted.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = data.labels[i] - fitted[i];
  return e;
}

DualProblem training_problem(const Model& model, std::span<const double> labels) {
  const auto& t = model.training();
  return DualProblem(model.gram_ptr(), {labels.begin(), labels.end()}, t.loss, t.gamma, t.offset);
}

// --- Serialization -----------------------------------------------------------

void save(const Model& model, std::ostream& out) {
  const auto& t = model.training();
  const auto& d = model.diagnostics();
  json j;
  j["version"] = kModelSchemaVersion;
  j["kernel"] = kernel_to_json(model.kernel());
  j["inputs"] = model.inputs();
  j["u"] = model.u();
  j["b"] = model.offset();
  j["training"] = {{"loss", std::string(to_string(t.loss.kind))},
                   {"epsilon", t.loss.epsilon},
                   {"gamma", t.gamma},
                   {"offset", t.offset == OffsetMode::WithOffset},
                   {"solver",
                    {{"tol_obj", t.solver.tol_obj},
                     {"tol_kkt", t.solver.tol_kkt},
                     {"max_iter", t.solver.max_iter},
                     {"initial_step", t.solver.initial_step},
                     {"backtrack", t.solver.backtrack},
                     {"armijo", t.solver.armijo},
                     {"seed", t.solver.seed}}}};
  j["diagnostics"] = {{"objective", d.objective},
                      {"kkt_residual", d.kkt_residual},
                      {"iterations", d.iterations},
                      {"converged", d.converged},
                      {"status", std::string(to_string(d.status))},
                      {"trivial", d.trivial}};
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::IoError, "failed to write model");
}

Model load(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptPayload, std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (!j.contains("version") || !j.at("version").is_number_integer()) {
      throw Error(Errc::SchemaVersionMismatch, "model has no integer version field");
    }
    const int version = j.at("version").get<int>();
    if (version != kModelSchemaVersion) {
      throw Error(Errc::SchemaVersionMismatch,
                  "model version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelSchemaVersion) + ")");
    }
    KernelSpec kernel = kernel_from_json(j.at("kernel"));
    auto inputs = j.at("inputs").get<std::vector<Point>>();
    auto u = j.at("u").get<std::vector<double>>();
    const double b = j.at("b").get<double>();
    if (inputs.empty()) throw Error(Errc::CorruptPayload, "model has no training inputs");
    if (u.size() != inputs.size()) {
      throw Error(Errc::CorruptPayload, "u has length " + std::to_string(u.size()) + " but there are " +
                                            std::to_string(inputs.size()) + " inputs");
    }
    for (const auto& x : inputs) {
      if (x.size() != kernel.dim) {
        throw Error(Errc::CorruptPayload, "training input dimension does not match kernel d");
      }
    }
    FitOptions training;
    if (j.contains("training")) {
      const auto& t = j.at("training");
      const auto kind = parse_loss_kind(t.at("loss").get<std::string>());
      if (!kind) throw Error(Errc::CorruptPayload, "unknown loss");
      training.loss = {*kind, t.at("epsilon").get<double>()};
      training.loss.validate();
      training.gamma = t.at("gamma").get<double>();
      training.offset = t.at("offset").get<bool>() ? OffsetMode::WithOffset : OffsetMode::NoOffset;
      if (t.contains("solver")) {
        const auto& s = t.at("solver");
        training.solver.tol_obj = s.at("tol_obj").get<double>();
        training.solver.tol_kkt = s.at("tol_kkt").get<double>();
        training.solver.max_iter = s.at("max_iter").get<std::size_t>();
        training.solver.initial_step = s.at("initial_step").get<double>();
        training.solver.backtrack = s.at("backtrack").get<double>();
        training.solver.armijo = s.at("armijo").get<double>();
        training.solver.seed = s.at("seed").get<std::uint64_t>();
      }
    }
    ModelDiagnostics diag;
    if (j.contains("diagnostics")) {
      const auto& d = j.at("diagnostics");
      diag.objective = d.at("objective").get<double>();
      diag.kkt_residual = d.at("kkt_residual").get<double>();
      diag.iterations = d.at("iterations").get<std::size_t>();
      diag.converged = d.at("converged").get<bool>();
      diag.trivial = d.value("trivial", false);
      const std::string status = d.value("status", "converged");
      for (auto s : {SolveStatus::Converged, SolveStatus::MaxIterExceeded,
                     SolveStatus::LineSearchFailed, SolveStatus::Stagnated}) {
        if (status == to_string(s)) diag.status = s;
      }
    }
    return Model(std::move(kernel), std::move(inputs), std::move(u), b, training, diag);
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptPayload, std::string("malformed model: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::SchemaVersionMismatch || e.code() == Errc::CorruptPayload) throw;
    throw Error(Errc::CorruptPayload, e.what());
  }
}

}  // namespace tksvr
