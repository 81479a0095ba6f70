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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "tksvr/diagnostics/oracle.hpp"
#include "tksvr/error.hpp"
#include "tksvr/format.hpp"
#include "tksvr/model.hpp"

namespace tksvr::cli {
namespace {

constexpr double kSlacknessTol = 1e-6;
constexpr double kRepresenterTol = 1e-10;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw Error(Errc::InvalidArgument, where + ": '" + text + "' is not a number");
  }
  return v;
}

unsigned long long parse_unsigned(const std::string& text, const std::string& where) {
  unsigned long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(Errc::InvalidArgument, where + ": '" + text + "' is not a nonnegative integer");
  }
  return v;
}

bool parse_bool(const std::string& text, const std::string& where) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw Error(Errc::InvalidArgument, where + ": '" + text + "' is not a boolean");
}

// --- CSV -----------------------------------------------------------------------

struct Table {
  std::vector<Point> inputs;
  std::vector<double> labels;
  bool has_labels = false;
};

/// Header x1..xd, optionally followed by y.
Table read_csv(const std::string& path, bool need_labels) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  Table t;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    const std::string where = path + ":" + std::to_string(line_no);
    if (!have_header) {
      have_header = true;
      width = fields.size();
      t.has_labels = fields.back() == "y";
      const std::size_t d = t.has_labels ? width - 1 : width;
      for (std::size_t j = 0; j < d; ++j) {
        if (fields[j] != "x" + std::to_string(j + 1)) {
          throw Error(Errc::InvalidArgument,
                      where + ": header must be x1,...,xd followed by y (got '" + fields[j] + "')");
        }
      }
      if (d == 0) throw Error(Errc::InvalidArgument, where + ": header has no feature columns");
      continue;
    }
    if (fields.size() != width) {
      throw Error(Errc::InvalidArgument, where + ": expected " + std::to_string(width) +
                                             " fields, got " + std::to_string(fields.size()));
    }
    const std::size_t d = t.has_labels ? width - 1 : width;
    Point x(d);
    for (std::size_t j = 0; j < d; ++j) x[j] = parse_double(fields[j], where);
    t.inputs.push_back(std::move(x));
    if (t.has_labels) t.labels.push_back(parse_double(fields[d], where));
  }
  if (t.inputs.empty()) throw Error(Errc::InvalidArgument, path + ": no rows");
  if (need_labels && !t.has_labels) {
    throw Error(Errc::InvalidArgument, path + ": a label column 'y' is required");
  }
  return t;
}

Model read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  return load(in);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  return out;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(Errc::InvalidArgument, std::string(flag) + " is required");
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

void require_matching_dim(const Model& model, const Table& t) {
  if (t.inputs.front().size() != model.kernel().dim) {
    throw Error(Errc::DimensionMismatch,
                "data has " + std::to_string(t.inputs.front().size()) +
                    " feature columns, model expects " + std::to_string(model.kernel().dim));
  }
}

}  // namespace

// --- Config --------------------------------------------------------------------

void apply_config_text(RunConfig& c, std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::InvalidArgument, where + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "data") c.data = value;
    else if (key == "model") c.model = value;
    else if (key == "out") c.out = value;
    else if (key == "trace") c.trace = value;
    else if (key == "kernel") c.kernel = value;
    else if (key == "mode") c.mode = value;
    else if (key == "order") c.order = parse_unsigned(value, where);
    else if (key == "degree") c.degree = static_cast<unsigned>(parse_unsigned(value, where));
    else if (key == "alpha") c.alpha = parse_double(value, where);
    else if (key == "coeffs") {
      c.coeffs.clear();
      for (const auto& f : split(value, ',')) c.coeffs.push_back(parse_double(f, where));
    }
    else if (key == "loss") c.loss = value;
    else if (key == "eps") c.eps = parse_double(value, where);
    else if (key == "gamma") c.gamma = parse_double(value, where);
    else if (key == "offset") c.offset = parse_bool(value, where);
    else if (key == "tol_obj") c.solver.tol_obj = parse_double(value, where);
    else if (key == "tol_kkt") c.solver.tol_kkt = parse_double(value, where);
    else if (key == "max_iter") c.solver.max_iter = parse_unsigned(value, where);
    else if (key == "initial_step") c.solver.initial_step = parse_double(value, where);
    else if (key == "backtrack") c.solver.backtrack = parse_double(value, where);
    else if (key == "armijo") c.solver.armijo = parse_double(value, where);
    else if (key == "seed") c.solver.seed = parse_unsigned(value, where);
    else throw Error(Errc::InvalidArgument, where + ": unknown key '" + key + "'");
  }
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path);
  apply_config_text(config, in, path);
}

KernelSpec kernel_spec(const RunConfig& c, std::size_t dim) {
  const auto family = parse_series_family(c.kernel);
  if (!family) throw Error(Errc::InvalidArgument, "unknown kernel '" + c.kernel + "'");
  const auto mode = parse_composition_mode(c.mode);
  if (!mode) throw Error(Errc::InvalidArgument, "unknown mode '" + c.mode + "'");
  KernelSpec k;
  switch (*family) {
    case SeriesFamily::Exponential: k.series = SeriesSpec::exponential(); break;
    case SeriesFamily::Polynomial: k.series = SeriesSpec::polynomial(c.degree); break;
    case SeriesFamily::Binomial: k.series = SeriesSpec::binomial(c.alpha); break;
    case SeriesFamily::Geometric: k.series = SeriesSpec::geometric(); break;
    case SeriesFamily::BergmanLike: k.series = SeriesSpec::bergman_like(); break;
    case SeriesFamily::Custom: k.series = SeriesSpec::custom(c.coeffs); break;
  }
  k.mode = *mode;
  k.order = c.order;
  k.dim = dim;
  k.validate();
  return k;
}

LossSpec loss_spec(const RunConfig& c) {
  const auto kind = parse_loss_kind(c.loss);
  if (!kind) throw Error(Errc::InvalidArgument, "unknown loss '" + c.loss + "'");
  if (*kind == LossKind::Square) return LossSpec::square();
  return LossSpec::eps_insensitive(c.eps);
}

// --- Commands ------------------------------------------------------------------

int cmd_fit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(c.data, "--data");
    require(c.model, "--model");
    const Table t = read_csv(c.data, true);
    const KernelSpec k = kernel_spec(c, t.inputs.front().size());
    FitOptions options;
    options.loss = loss_spec(c);
    options.gamma = c.gamma;
    options.offset = c.offset ? OffsetMode::WithOffset : OffsetMode::NoOffset;
    options.solver = c.solver;
    DualSolution sol;
    const Model model = fit(Dataset{t.inputs, t.labels}, k, options, &sol);
    {
      auto file = open_output(c.model);
      save(model, file);
    }
    if (!c.trace.empty()) {
      auto file = open_output(c.trace);
      write_trace_csv(file, sol);
    }
    out << "objective     " << format_double(sol.objective) << '\n'
        << "kkt_residual  " << format_double(sol.kkt_residual) << '\n'
        << "iterations    " << sol.iterations << '\n'
        << "status        " << to_string(sol.status) << '\n'
        << "offset        " << format_double(model.offset()) << '\n';
    if (!sol.converged) {
      err << "warning: solver stopped before reaching tol_kkt = "
          << format_double(c.solver.tol_kkt) << "; model written anyway\n";
      return 2;
    }
    return 0;
  });
}

int cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(c.data, "--data");
    require(c.model, "--model");
    const Model model = read_model(c.model);
    const Table t = read_csv(c.data, false);
    require_matching_dim(model, t);
    const auto yhat = predict(model, t.inputs);
    std::ostringstream csv;
    csv << "row,yhat\n";
    for (std::size_t i = 0; i < yhat.size(); ++i) csv << i << ',' << format_double(yhat[i]) << '\n';
    if (c.out.empty()) {
      out << csv.str();
    } else {
      auto file = open_output(c.out);
      file << csv.str();
    }
    return 0;
  });
}

int cmd_audit(const RunConfig& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require(c.data, "--data");
    require(c.model, "--model");
    const Model model = read_model(c.model);
    const Table t = read_csv(c.data, true);
    require_matching_dim(model, t);
    if (t.inputs.size() != model.inputs().size()) {
      throw Error(Errc::DimensionMismatch, "data has " + std::to_string(t.inputs.size()) +
                                               " rows, model was trained on " +
                                               std::to_string(model.inputs().size()));
    }
    const DualProblem problem = training_problem(model, t.labels);
    const KktReport rep = kkt_report(problem, model.u(), model.offset());
    const double tol = model.training().solver.tol_kkt;
    bool ok = rep.max <= tol;

    out << "condition        residual\n"
        << "hyperplane       " << format_double(rep.hyperplane) << '\n'
        << "subdifferential  " << format_double(rep.subdifferential) << '\n'
        << "fixed_point      " << format_double(rep.fixed_point) << '\n'
        << "max              " << format_double(rep.max) << "  (threshold "
        << format_double(tol) << ")\n";

    const auto yhat = predict(model, t.inputs);
    std::vector<double> e(yhat.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = t.labels[i] - yhat[i];
    if (problem.loss().kind == LossKind::EpsInsensitive) {
      const double eps = problem.loss().epsilon;
      out << "\nrow  e  u  region  slack_ok\n";
      for (std::size_t i = 0; i < e.size(); ++i) {
        const double a = std::abs(e[i]);
        const char* region = a < eps - kSlacknessTol ? "inside"
                             : a <= eps + kSlacknessTol ? "edge"
                                                        : "outside";
        const bool slack_ok = !(a < eps - kSlacknessTol) || std::abs(model.u()[i]) <= kSlacknessTol;
        ok = ok && slack_ok;
        out << i << "  " << format_double(e[i]) << "  " << format_double(model.u()[i]) << "  "
            << region << "  " << (slack_ok ? "yes" : "no") << '\n';
      }
    }

    if (model.kernel().finite_dictionary()) {
      const auto fmap = diagnostics::ExplicitFeatureMap::exact(model.kernel());
      const auto w = diagnostics::primal_weights(fmap, model.u(), model.inputs());
      double worst = 0.0;
      for (const auto& x : t.inputs) {
        const double direct = diagnostics::pairing(fmap, w, x) + model.offset();
        worst = std::max(worst, std::abs(predict(model, x) - direct) / std::max(1.0, std::abs(direct)));
      }
      ok = ok && worst <= kRepresenterTol;
      out << "\nrepresenter_fidelity  " << format_double(worst) << "  (threshold "
          << format_double(kRepresenterTol) << ")\n";
    }

    if (!c.out.empty()) {
      auto file = open_output(c.out);
      file << "row,y,yhat,residual\n";
      for (std::size_t i = 0; i < e.size(); ++i) {
        file << i << ',' << format_double(t.labels[i]) << ',' << format_double(yhat[i])
             << ',' << format_double(e[i]) << '\n';
      }
    }
    out << "\naudit " << (ok ? "passed" : "failed") << '\n';
    return ok ? 0 : 3;
  });
}

// --- Entry point ---------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tensor-kernel support vector regression"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> data, model, output, trace, kernel, mode, loss;
  std::optional<double> gamma, eps;
  std::optional<std::size_t> order;
  std::optional<std::uint64_t> seed;
  bool no_offset = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key = value config file");
    sub->add_option("--data", data, "CSV with header x1..xd[,y]");
    sub->add_option("--model", model, "model JSON path");
    sub->add_option("--out", output, "output path");
    sub->add_option("--gamma", gamma, "regularization trade-off");
    sub->add_option("--order", order, "tensor order m (even)");
    sub->add_option("--kernel", kernel,
                    "exponential|polynomial|binomial|geometric|bergman|custom");
    sub->add_option("--mode", mode, "composed|product");
    sub->add_option("--loss", loss, "square|eps");
    sub->add_option("--eps", eps, "tube width for the eps loss");
    sub->add_flag("--no-offset", no_offset, "fit without an offset b");
    sub->add_option("--seed", seed, "seed");
  };
  auto* fit_cmd = app.add_subcommand("fit", "fit a model");
  auto* predict_cmd = app.add_subcommand("predict", "predict with a model");
  auto* audit_cmd = app.add_subcommand("audit", "check a model's optimality conditions");
  add_common(fit_cmd);
  add_common(predict_cmd);
  add_common(audit_cmd);
  fit_cmd->add_option("--trace", trace, "write the solver trace CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  RunConfig c;
  try {
    if (!config_path.empty()) apply_config_file(c, config_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  if (data) c.data = *data;
  if (model) c.model = *model;
  if (output) c.out = *output;
  if (trace) c.trace = *trace;
  if (kernel) c.kernel = *kernel;
  if (mode) c.mode = *mode;
  if (loss) c.loss = *loss;
  if (gamma) c.gamma = *gamma;
  if (eps) c.eps = *eps;
  if (order) c.order = *order;
  if (seed) c.solver.seed = *seed;
  if (no_offset) c.offset = false;

  if (fit_cmd->parsed()) return cmd_fit(c, out, err);
  if (predict_cmd->parsed()) return cmd_predict(c, out, err);
  return cmd_audit(c, out, err);
}

}  // namespace tksvr::cli
