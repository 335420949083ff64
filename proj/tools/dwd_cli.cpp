#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dwd/datagen.hpp"
#include "dwd/error.hpp"
#include "dwd/io.hpp"
#include "dwd/kernel.hpp"
#include "dwd/linear_solver.hpp"
#include "dwd/model.hpp"
#include "dwd/oracle.hpp"
#include "dwd/rng.hpp"
#include "dwd/tuning.hpp"
#include "dwd/verify.hpp"

namespace {

using json = nlohmann::json;

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kData = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes to a file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path, std::ostream& fallback = std::cout) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw dwd::DataError("cannot open '" + path + "' for writing");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("cannot parse '" + item + "' as a number in '" + text + "'");
    }
  }
  if (values.empty()) throw UsageError("empty list '" + text + "'");
  return values;
}

/// "lo:hi:count" for a log-spaced grid, otherwise a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list(text);
  std::string spec = text;
  std::replace(spec.begin(), spec.end(), ':', ',');
  const auto parts = parse_list(spec);
  if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2])) {
    throw UsageError("grid '" + text + "' must be lo:hi:count");
  }
  try {
    return dwd::log_grid(parts[0], parts[1], static_cast<int>(parts[2]));
  } catch (const dwd::InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::pair<double, double> parse_class_weights(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--weights must look like w+:w-, got '" + text + "'");
  const auto plus = parse_list(text.substr(0, colon));
  const auto minus = parse_list(text.substr(colon + 1));
  if (plus.size() != 1 || minus.size() != 1 || !(plus[0] > 0.0) || !(minus[0] > 0.0)) {
    throw UsageError("--weights needs two positive numbers, got '" + text + "'");
  }
  return {plus[0], minus[0]};
}

void require_positive(const std::vector<double>& values, const std::string& flag) {
  for (const double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(flag + " values must be positive and finite");
  }
}

// ---------------------------------------------------------------------------
// shared data options

struct DataArgs {
  std::string path;
  std::string format = "auto";
  std::string header = "auto";
  int label_column = 0;
  std::string weights;
  bool standardize = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "Training data (CSV or sparse label idx:value rows)")->required();
    cmd->add_option("--format", format, "csv, libsvm or auto (by extension)")
        ->check(CLI::IsMember({"auto", "csv", "libsvm"}));
    cmd->add_option("--header", header, "CSV header row: yes, no or auto")->check(CLI::IsMember({"auto", "yes", "no"}));
    cmd->add_option("--label-column", label_column, "Zero-based CSV label column; negative counts from the end");
    cmd->add_option("--weights", weights, "Per-class weights w+:w-");
    cmd->add_flag("--standardize", standardize, "Scale features to mean 0 and variance 1; stored in the model");
  }
};

dwd::HeaderMode header_mode(const std::string& h) {
  return h == "yes" ? dwd::HeaderMode::present : h == "no" ? dwd::HeaderMode::absent : dwd::HeaderMode::detect;
}

bool is_sparse(const std::string& path, const std::string& format) {
  if (format != "auto") return format == "libsvm";
  for (const char* ext : {".svm", ".libsvm", ".sparse"}) {
    const std::string e(ext);
    if (path.size() >= e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0) return true;
  }
  return false;
}

struct LoadedData {
  dwd::Dataset data;
  std::optional<dwd::Standardizer> standardizer;
};

LoadedData load_training(const DataArgs& args) {
  dwd::Dataset data = [&] {
    if (is_sparse(args.path, args.format)) return dwd::load_libsvm(args.path);
    dwd::CsvOptions options;
    options.header = header_mode(args.header);
    options.label_column = args.label_column;
    return dwd::load_csv(args.path, options);
  }();
  if (!args.weights.empty()) {
    const auto [plus, minus] = parse_class_weights(args.weights);
    data = data.with_class_weights(plus, minus);
  }
  std::optional<dwd::Standardizer> standardizer;
  if (args.standardize) {
    standardizer = dwd::Standardizer::fit(data.x());
    data = standardizer->apply(data);
  }
  return {std::move(data), std::move(standardizer)};
}

// ---------------------------------------------------------------------------
// kernel options

struct KernelArgs {
  std::string kind = "linear";
  double sigma = 0.0;
  int degree = 2;
  double offset = 1.0;

  void attach(CLI::App* cmd, bool with_sigma = true) {
    cmd->add_option("--kernel", kind, "linear, poly, gauss, or linear-kernel (linear through the kernel solver)");
    if (with_sigma) cmd->add_option("--sigma", sigma, "Gaussian bandwidth in exp(-sigma ||x-y||^2); default median heuristic");
    cmd->add_option("--degree", degree, "Polynomial degree");
    cmd->add_option("--offset", offset, "Polynomial offset a in (a + x'y)^d");
  }

  dwd::KernelKind parsed() const {
    if (kind == "linear-kernel") return dwd::KernelKind::linear;
    try {
      return dwd::parse_kernel_kind(kind);
    } catch (const dwd::InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }
};

json report_line(const dwd::FitReport& report) {
  return {{"iterations", report.iterations},
          {"converged", report.converged},
          {"objective", report.final_objective},
          {"kkt_residual", report.kkt_residual},
          {"jitter", report.jitter},
          {"objective_trace", report.objective_trace}};
}

std::string indexed_path(const std::string& path, std::size_t index, std::size_t count) {
  if (count == 1) return path;
  const auto dot = path.find_last_of('.');
  const auto slash = path.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  const std::string stem = has_ext ? path.substr(0, dot) : path;
  const std::string ext = has_ext ? path.substr(dot) : "";
  return stem + "_" + std::to_string(index + 1) + ext;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
  DataArgs data;
  KernelArgs kernel;
  double q = 1.0;
  std::optional<double> lambda;
  std::string lambda_path;
  double tol = 1e-5;
  int max_iter = 10000;
  std::uint64_t seed = 0;
  std::string out = "model.json";
  std::string report;
  bool strict = false;
};

int run_fit(const FitArgs& a) {
  if (!(a.q > 0.0) || !std::isfinite(a.q)) throw UsageError("--q must be positive");
  std::vector<double> lambdas = a.lambda_path.empty() ? std::vector<double>{a.lambda.value_or(0.1)} : parse_grid(a.lambda_path);
  require_positive(lambdas, a.lambda_path.empty() ? "--lambda" : "--lambda-path");
  dwd::SolverConfig config;
  config.tol = a.tol;
  config.max_iter = a.max_iter;
  try {
    config.validate();
  } catch (const dwd::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const dwd::KernelKind kind = a.kernel.parsed();

  const auto loaded = load_training(a.data);
  const dwd::Dataset& data = loaded.data;
  data.require_fittable();
  Output report(a.report);

  json common = {{"event", "fit"}, {"q", a.q}, {"n", data.n()}, {"p", data.p()}, {"seed", a.seed}};
  const auto start = std::chrono::steady_clock::now();
  std::vector<dwd::AnyModel> models;
  std::vector<dwd::FitReport> reports;
  if (kind == dwd::KernelKind::linear && a.kernel.kind != "linear-kernel") {
    common["kernel"] = "none";
    for (auto& fit : dwd::fit_linear_path(data, a.q, lambdas, config)) {
      models.emplace_back(std::move(fit.model));
      reports.push_back(std::move(fit.report));
    }
  } else {
    dwd::KernelSpec spec;
    if (kind == dwd::KernelKind::gaussian) {
      const bool heuristic = !(a.kernel.sigma > 0.0);
      spec = dwd::KernelSpec::gaussian(heuristic ? dwd::median_heuristic_sigma(data.x(), a.seed) : a.kernel.sigma);
      common["sigma"] = spec.sigma;
      common["sigma_source"] = heuristic ? "median_heuristic" : "flag";
    } else if (kind == dwd::KernelKind::polynomial) {
      spec = dwd::KernelSpec::polynomial(a.kernel.offset, a.kernel.degree);
      common["degree"] = spec.degree;
      common["offset"] = spec.offset;
    } else {
      spec = dwd::KernelSpec::linear();
    }
    try {
      spec.validate();
    } catch (const dwd::InvalidArgument& e) {
      throw UsageError(e.what());
    }
    common["kernel"] = spec.name();
    for (auto& fit : dwd::fit_kernel_path(data, spec, a.q, lambdas, config)) {
      models.emplace_back(std::move(fit.model));
      reports.push_back(std::move(fit.report));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool all_converged = true;
  for (std::size_t k = 0; k < models.size(); ++k) {
    const std::string path = indexed_path(a.out, k, models.size());
    dwd::save_model(dwd::ModelFile{models[k], loaded.standardizer}, path);
    json line = common;
    line.update(report_line(reports[k]));
    line["lambda"] = lambdas[k];
    line["model"] = path;
    line["training_error"] = dwd::misclassification_rate(models[k], data);
    line["wall_seconds"] = seconds;
    *report << line.dump() << '\n';
    all_converged = all_converged && reports[k].converged;
  }
  if (!all_converged) {
    std::cerr << "warning: not every fit converged within --max-iter\n";
    if (a.strict) return kNumerical;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string model;
  std::string data;
  std::string header = "auto";
  bool labelled = false;
  int label_column = 0;
  bool scores = false;
  std::string out;
};

int run_predict(const PredictArgs& a) {
  const dwd::ModelFile file = dwd::load_model(a.model);
  std::optional<dwd::Dataset> labelled;
  Eigen::MatrixXd x;
  if (a.labelled) {
    dwd::CsvOptions options;
    options.header = header_mode(a.header);
    options.label_column = a.label_column;
    labelled = dwd::load_csv(a.data, options);
    x = labelled->x();
  } else {
    x = dwd::load_feature_csv(a.data, header_mode(a.header));
  }
  const Eigen::Index expected = std::visit(
      [](const auto& m) -> Eigen::Index {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, dwd::LinearModel>) return m.beta.size();
        else return m.train_inputs.cols();
      },
      file.model);
  if (x.rows() > 0 && x.cols() != expected) {
    throw dwd::DataError("model expects " + std::to_string(expected) + " features, data has " + std::to_string(x.cols()));
  }
  if (x.rows() == 0) x.resize(0, expected);
  if (file.standardizer) x = file.standardizer->apply(x);

  const Eigen::VectorXd scores = dwd::decision_values(file.model, x);
  const Eigen::VectorXi labels = dwd::sign_labels(scores);
  Output out(a.out);
  *out << (a.scores ? "label,score\n" : "label\n");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    *out << labels[i];
    if (a.scores) *out << ',' << dwd::format_double(scores[i]);
    *out << '\n';
  }
  if (labelled && labelled->n() > 0) {
    const Eigen::Index wrong = (labels.cast<double>() - labelled->y()).cwiseAbs().cast<bool>().count();
    std::cerr << json{{"event", "predict"}, {"n", labelled->n()}, {"misclassification_rate", double(wrong) / double(labelled->n())}}.dump()
              << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// cv

struct CvArgs {
  DataArgs data;
  KernelArgs kernel;
  double q = 1.0;
  int folds = 5;
  std::string lambda_grid;
  std::string sigma_grid;
  bool plain_folds = false;
  double tol = 1e-5;
  int max_iter = 10000;
  std::uint64_t seed = 0;
  std::string out;
  std::string table;
  std::string report;
};

int run_cv(const CvArgs& a) {
  if (!(a.q > 0.0)) throw UsageError("--q must be positive");
  dwd::CvPlan plan;
  plan.folds = a.folds;
  plan.seed = a.seed;
  plan.stratified = !a.plain_folds;
  if (!a.lambda_grid.empty()) plan.lambda_grid = parse_grid(a.lambda_grid);
  if (!a.sigma_grid.empty()) plan.sigma_grid = parse_grid(a.sigma_grid);
  require_positive(plan.lambda_grid, "--lambda-grid");
  require_positive(plan.sigma_grid, "--sigma-grid");
  dwd::SolverConfig config;
  config.tol = a.tol;
  config.max_iter = a.max_iter;

  const dwd::KernelKind kind = a.kernel.parsed();
  std::optional<dwd::KernelSpec> spec;
  if (kind == dwd::KernelKind::gaussian) spec = dwd::KernelSpec::gaussian(1.0);
  if (kind == dwd::KernelKind::polynomial) spec = dwd::KernelSpec::polynomial(a.kernel.offset, a.kernel.degree);
  if (kind == dwd::KernelKind::linear && a.kernel.kind == "linear-kernel") spec = dwd::KernelSpec::linear();
  if (spec) {
    try {
      spec->validate();
    } catch (const dwd::InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }

  const auto loaded = load_training(a.data);
  try {
    plan.validate(loaded.data.n());
  } catch (const dwd::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const dwd::CvResult result = dwd::cross_validate(loaded.data, a.q, spec, plan, config);

  {
    Output table(a.table);
    *table << "sigma,lambda,mean_error,std_error,nonconverged,chosen";
    for (int f = 1; f <= plan.folds; ++f) *table << ",fold" << f;
    *table << '\n';
    for (std::size_t c = 0; c < result.cells.size(); ++c) {
      const auto& cell = result.cells[c];
      *table << dwd::format_double(cell.sigma) << ',' << dwd::format_double(cell.lambda) << ','
             << dwd::format_double(cell.mean_error) << ',' << dwd::format_double(cell.std_error) << ','
             << cell.nonconverged << ',' << (c == result.chosen ? 1 : 0);
      for (const double e : cell.fold_errors) *table << ',' << dwd::format_double(e);
      *table << '\n';
    }
  }
  if (!a.out.empty()) dwd::save_model(dwd::ModelFile{result.model, loaded.standardizer}, a.out);
  Output report(a.report, std::cerr);
  json line = {{"event", "cv"},
               {"q", a.q},
               {"folds", plan.folds},
               {"lambda", result.lambda},
               {"mean_error", result.cells[result.chosen].mean_error},
               {"nonconverged", result.nonconverged},
               {"seed", a.seed}};
  if (spec) line["kernel"] = spec->name();
  if (kind == dwd::KernelKind::gaussian) line["sigma"] = result.sigma;
  line.update(report_line(result.refit_report));
  line.erase("objective_trace");
  if (!a.out.empty()) line["model"] = a.out;
  *report << line.dump() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string scenario;
  Eigen::Index n = 0;
  Eigen::Index p = 50;
  std::uint64_t seed = 0;
  bool shared_outlier = false;
  Eigen::Index bayes_mc = 100000;
  std::string out;
  std::string report;
};

int run_simulate(const SimulateArgs& a) {
  dwd::Scenario scenario;
  try {
    scenario = dwd::parse_scenario(a.scenario);
  } catch (const dwd::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> comments = {"scenario=" + dwd::scenario_name(scenario), "seed=" + std::to_string(a.seed),
                                       "generator_version=" + std::to_string(dwd::kGeneratorVersion),
                                       std::string("rng=") + dwd::Rng::kName + " v" + std::to_string(dwd::Rng::kVersion)};
  json line = {{"event", "simulate"}, {"scenario", dwd::scenario_name(scenario)}, {"seed", a.seed}};
  std::optional<dwd::Dataset> data;
  try {
    switch (scenario) {
      case dwd::Scenario::mixture_fig1: {
        auto sample = dwd::gen_mixture(a.n > 0 ? a.n : 200, a.seed);
        const auto bayes = dwd::oracle::bayes_error_mc(sample.oracle, a.bayes_mc, a.seed + 1);
        comments.push_back("bayes_error_mc=" + dwd::format_double(bayes.rate) + " +- " + dwd::format_double(bayes.std_error));
        line["bayes_error"] = bayes.rate;
        line["bayes_std_error"] = bayes.std_error;
        line["bayes_mc_points"] = a.bayes_mc;
        data = std::move(sample.data);
        break;
      }
      case dwd::Scenario::datapiling_fig2:
        data = dwd::gen_datapiling(a.seed);
        break;
      default: {
        const int k = static_cast<int>(scenario) - static_cast<int>(dwd::Scenario::example1) + 1;
        dwd::ExampleOptions options;
        options.shared_outlier_coordinate = a.shared_outlier;
        data = dwd::gen_example(k, a.n > 0 ? a.n : 500, a.p, a.seed, options);
      }
    }
  } catch (const dwd::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  {
    Output out(a.out);
    *out << dwd::format_csv(*data, comments);
  }
  line["n"] = data->n();
  line["p"] = data->p();
  if (!a.out.empty()) line["file"] = a.out;
  Output report(a.report, std::cerr);
  *report << line.dump() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string scenarios = "ex1,ex2,ex3,ex4";
  std::string n_values = "500";
  Eigen::Index p = 50;
  std::string q_values = "1";
  std::string lambdas = "0.01,0.1,1,10,100";
  int reps = 100;
  std::uint64_t seed = 0;
  std::string out;
};

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size()); }

int run_bench(const BenchArgs& a) {
  if (a.reps < 1) throw UsageError("--reps must be at least 1");
  std::vector<dwd::Scenario> scenarios;
  {
    std::stringstream ss(a.scenarios);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        scenarios.push_back(dwd::parse_scenario(item));
      } catch (const dwd::InvalidArgument& e) {
        throw UsageError(e.what());
      }
      if (scenarios.back() == dwd::Scenario::mixture_fig1 || scenarios.back() == dwd::Scenario::datapiling_fig2) {
        throw UsageError("bench runs the example scenarios ex1..ex4");
      }
    }
  }
  const auto ns = parse_list(a.n_values);
  const auto qs = parse_list(a.q_values);
  const auto lambdas = parse_list(a.lambdas);
  require_positive(ns, "--n");
  require_positive(qs, "--q");
  require_positive(lambdas, "--lambdas");

  Output out(a.out);
  *out << "scenario,n,p,q,lambdas,reps,mean_seconds,sd_seconds,min_seconds,converged\n";
  for (const auto scenario : scenarios) {
    const int k = static_cast<int>(scenario) - static_cast<int>(dwd::Scenario::example1) + 1;
    for (const double n : ns) {
      dwd::Dataset data = [&] {
        try {
          return dwd::gen_example(k, static_cast<Eigen::Index>(n), a.p, a.seed);
        } catch (const dwd::InvalidArgument& e) {
          throw UsageError(e.what());
        }
      }();
      for (const double q : qs) {
        std::vector<double> times;
        bool converged = true;
        for (int r = 0; r < a.reps; ++r) {
          const auto start = std::chrono::steady_clock::now();
          const auto fits = dwd::fit_linear_path(data, q, lambdas);
          times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
          for (const auto& f : fits) converged = converged && f.report.converged;
        }
        const double mean = mean_of(times);
        double var = 0.0;
        for (const double t : times) var += (t - mean) * (t - mean);
        const double sd = times.size() > 1 ? std::sqrt(var / double(times.size() - 1)) : 0.0;
        *out << dwd::scenario_name(scenario) << ',' << data.n() << ',' << data.p() << ',' << dwd::format_double(q) << ','
             << lambdas.size() << ',' << a.reps << ',' << dwd::format_double(mean) << ',' << dwd::format_double(sd) << ','
             << dwd::format_double(*std::min_element(times.begin(), times.end())) << ',' << (converged ? 1 : 0) << '\n';
      }
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::vector<std::string> only;
  bool quick = false;
  std::uint64_t seed = dwd::verify::VerifyOptions{}.seed;
  std::optional<double> lipschitz_override;
  std::string out;
};

int run_verify(const VerifyArgs& a) {
  dwd::verify::VerifyOptions options;
  options.seed = a.seed;
  options.quick = a.quick;
  options.lipschitz_override = a.lipschitz_override;
  std::vector<std::string> selected;
  for (const auto& entry : a.only) {
    std::stringstream ss(entry);
    std::string item;
    while (std::getline(ss, item, ',')) selected.push_back(item);
  }
  if (selected.empty()) selected = dwd::verify::families();
  for (const auto& family : selected) {
    const auto& known = dwd::verify::families();
    if (std::find(known.begin(), known.end(), family) == known.end()) throw UsageError("unknown family '" + family + "'");
  }
  Output out(a.out);
  bool all = true;
  for (const auto& family : selected) {
    for (const auto& result : dwd::verify::run_family(family, options)) {
      *out << dwd::verify::to_json_line(result) << std::endl;
      all = all && result.passed;
    }
  }
  return all ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distance weighted discrimination: fit, predict, tune, simulate, benchmark and verify"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dwd 1.0");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a linear or kernel classifier");
  fit.data.attach(fit_cmd);
  fit.kernel.attach(fit_cmd);
  fit_cmd->add_option("--q", fit.q, "Loss exponent q > 0");
  auto* lambda_opt = fit_cmd->add_option("--lambda", fit.lambda, "Penalty lambda > 0 (default 0.1)");
  fit_cmd->add_option("--lambda-path", fit.lambda_path, "Comma list or lo:hi:count; fits with warm starts")->excludes(lambda_opt);
  fit_cmd->add_option("--tol", fit.tol, "Stop when the largest coefficient change is below this");
  fit_cmd->add_option("--max-iter", fit.max_iter, "Iteration cap per lambda");
  fit_cmd->add_option("--seed", fit.seed, "Seed for the median-heuristic pair sample");
  fit_cmd->add_option("--out", fit.out, "Model file; paths get _1, _2, ... suffixes");
  fit_cmd->add_option("--report", fit.report, "JSON-lines report (default stdout)");
  fit_cmd->add_flag("--strict", fit.strict, "Exit 4 when a fit does not converge");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Predict labels for a feature file");
  pred_cmd->add_option("--model", pred.model, "Model file")->required();
  pred_cmd->add_option("--data", pred.data, "Feature CSV")->required();
  pred_cmd->add_option("--header", pred.header, "yes, no or auto")->check(CLI::IsMember({"auto", "yes", "no"}));
  pred_cmd->add_flag("--labelled", pred.labelled, "Data carries a label column; prints the error rate to stderr");
  pred_cmd->add_option("--label-column", pred.label_column, "Label column with --labelled");
  pred_cmd->add_flag("--scores", pred.scores, "Add decision values");
  pred_cmd->add_option("--out", pred.out, "Predictions CSV (default stdout)");

  CvArgs cv;
  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate lambda (and sigma) and refit");
  cv.data.attach(cv_cmd);
  cv.kernel.attach(cv_cmd, false);
  cv_cmd->add_option("--q", cv.q, "Loss exponent q > 0");
  cv_cmd->add_option("--folds", cv.folds, "Number of folds");
  cv_cmd->add_option("--lambda-grid", cv.lambda_grid, "Comma list or lo:hi:count (default 1e-4:1e2:50)");
  cv_cmd->add_option("--sigma-grid", cv.sigma_grid, "Gaussian kernel only; default median heuristic times 2^-3..2^3");
  cv_cmd->add_flag("--unstratified", cv.plain_folds, "Plain random folds");
  cv_cmd->add_option("--tol", cv.tol, "Solver tolerance");
  cv_cmd->add_option("--max-iter", cv.max_iter, "Iteration cap per fit");
  cv_cmd->add_option("--seed", cv.seed, "Fold assignment seed");
  cv_cmd->add_option("--out", cv.out, "Refitted model file");
  cv_cmd->add_option("--table", cv.table, "CV grid CSV (default stdout)");
  cv_cmd->add_option("--report", cv.report, "JSON line with the chosen pair (default stderr)");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  sim_cmd->add_option("--scenario", sim.scenario, "fig1, fig2, ex1, ex2, ex3 or ex4")->required();
  sim_cmd->add_option("--n", sim.n, "Sample size (fig1 default 200, examples default 500)");
  sim_cmd->add_option("--p", sim.p, "Dimension for ex1..ex4");
  sim_cmd->add_option("--seed", sim.seed, "Generator seed");
  sim_cmd->add_flag("--shared-outlier", sim.shared_outlier, "ex3: one outlier coordinate for all contaminated points");
  sim_cmd->add_option("--bayes-mc", sim.bayes_mc, "fig1: Monte-Carlo points for the Bayes error");
  sim_cmd->add_option("--out", sim.out, "Dataset CSV (default stdout)");
  sim_cmd->add_option("--report", sim.report, "JSON line summary (default stderr)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time linear fit paths on the example scenarios");
  bench_cmd->add_option("--scenarios", bench.scenarios, "Comma list of ex1..ex4");
  bench_cmd->add_option("--n", bench.n_values, "Comma list of sample sizes");
  bench_cmd->add_option("--p", bench.p, "Dimension");
  bench_cmd->add_option("--q", bench.q_values, "Comma list of q values");
  bench_cmd->add_option("--lambdas", bench.lambdas, "Lambda path");
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per row");
  bench_cmd->add_option("--seed", bench.seed, "Generator seed");
  bench_cmd->add_option("--out", bench.out, "Timing CSV (default stdout)");

  VerifyArgs ver;
  auto* ver_cmd = app.add_subcommand("verify", "Check the solvers against independent reference computations");
  ver_cmd->add_option("--only", ver.only, "Families to run (comma list or repeated)");
  ver_cmd->add_flag("--quick", ver.quick, "Smaller instance counts");
  ver_cmd->add_option("--seed", ver.seed, "Seed for random instances");
  ver_cmd->add_option("--lipschitz-override", ver.lipschitz_override, "Replace the loss curvature bound (negative control)");
  ver_cmd->add_option("--out", ver.out, "JSON-lines report (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit);
    if (pred_cmd->parsed()) return run_predict(pred);
    if (cv_cmd->parsed()) return run_cv(cv);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (bench_cmd->parsed()) return run_bench(bench);
    if (ver_cmd->parsed()) return run_verify(ver);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const dwd::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const dwd::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const dwd::Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
