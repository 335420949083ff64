#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "dwd/io.hpp"
#include "dwd/model.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "dwd_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

/// Runs the CLI in the scratch directory, capturing stdout (stderr goes to err.txt).
Run run(const std::string& args) {
  const std::string cmd = "cd '" + workdir().string() + "' && '" DWD_CLI_PATH "' " + args + " 2> err.txt";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buffer[4096];
  while (const std::size_t got = fread(buffer, 1, sizeof buffer, pipe)) out.append(buffer, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string read(const std::string& name) {
  std::ifstream in(workdir() / name);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void write(const std::string& name, const std::string& text) { std::ofstream(workdir() / name) << text; }

}  // namespace

TEST_CASE("simulate writes reproducible files with a provenance header") {
  REQUIRE(run("simulate --scenario ex1 --seed 3 --out ex1.csv").code == 0);
  const std::string first = read("ex1.csv");
  CHECK(first.find("# scenario=ex1") == 0);
  CHECK(first.find("# seed=3") != std::string::npos);
  CHECK(first.find("# generator_version=1") != std::string::npos);
  CHECK(first.find("# rng=mt19937_64+box-muller v1") != std::string::npos);
  REQUIRE(run("simulate --scenario ex1 --seed 3 --out ex1b.csv").code == 0);
  CHECK(read("ex1b.csv") == first);
  const auto d = dwd::load_csv(workdir() / "ex1.csv");
  CHECK(d.n() == 500);
  CHECK(d.p() == 50);
}

TEST_CASE("simulate fig1 reports the Bayes error") {
  REQUIRE(run("simulate --scenario fig1 --n 200 --seed 1 --bayes-mc 20000 --out fig1.csv --report fig1.json").code == 0);
  const auto d = dwd::load_csv(workdir() / "fig1.csv");
  CHECK(d.p() == 2);
  CHECK(d.n() == 200);
  CHECK(d.count(1) == 100);
  const json report = json::parse(read("fig1.json"));
  CHECK(report["bayes_error"].get<double>() > 0.0);
  CHECK(report["bayes_error"].get<double>() < 0.5);
  CHECK(read("fig1.csv").find("# bayes_error_mc=") != std::string::npos);
}

TEST_CASE("simulate ex4 keeps the square block") {
  REQUIRE(run("simulate --scenario ex4 --seed 2 --out ex4.csv").code == 0);
  const auto d = dwd::load_csv(workdir() / "ex4.csv");
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < 25; ++j) REQUIRE(d.x()(i, j + 25) == d.x()(i, j) * d.x()(i, j));
  }
  CHECK(run("simulate --scenario ex9").code == 2);
}

TEST_CASE("fit with defaults converges and reports") {
  REQUIRE(run("simulate --scenario ex1 --seed 3 --out ex1.csv").code == 0);
  const Run r = run("fit --data ex1.csv --out m.json");
  REQUIRE(r.code == 0);
  const json report = json::parse(lines(r.out).at(0));
  CHECK(report["converged"].get<bool>());
  CHECK(std::isfinite(report["objective"].get<double>()));
  CHECK(report["wall_seconds"].get<double>() >= 0.0);
  CHECK(report["objective_trace"].size() == std::size_t(report["iterations"].get<int>() + 1));
  CHECK(fs::exists(workdir() / "m.json"));
}

TEST_CASE("fit flag errors exit with the usage code") {
  CHECK(run("fit --data ex1.csv --lambda 0").code == 2);
  CHECK(run("fit --data ex1.csv --lambda -1").code == 2);
  CHECK(run("fit --data ex1.csv --q 0").code == 2);
  CHECK(run("fit --data ex1.csv --kernel sigmoid").code == 2);
  CHECK(run("fit --data ex1.csv --weights 2").code == 2);
  CHECK(run("fit --data ex1.csv --lambda 1 --lambda-path 1,2").code == 2);
  CHECK(run("fit").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("fit data errors and strict non-convergence") {
  write("three.csv", "a,1\nb,2\nc,3\n");
  CHECK(run("fit --data three.csv").code == 3);
  CHECK(run("fit --data missing.csv").code == 3);
  CHECK(run("fit --data ex1.csv --lambda 1e-4 --max-iter 1 --out s.json").code == 0);
  CHECK(run("fit --data ex1.csv --lambda 1e-4 --max-iter 1 --strict --out s.json").code == 4);
}

TEST_CASE("gaussian fit without sigma echoes the median heuristic") {
  REQUIRE(run("simulate --scenario fig1 --n 100 --seed 2 --bayes-mc 1000 --out small.csv").code == 0);
  const Run r = run("fit --data small.csv --kernel gauss --out g.json");
  REQUIRE(r.code == 0);
  const json report = json::parse(lines(r.out).at(0));
  CHECK(report["sigma_source"] == "median_heuristic");
  const auto d = dwd::load_csv(workdir() / "small.csv");
  CHECK(report["sigma"].get<double>() == doctest::Approx(dwd::median_heuristic_sigma(d.x(), 0)).epsilon(1e-15));
  const Run given = run("fit --data small.csv --kernel gauss --sigma 0.25 --out g2.json");
  CHECK(json::parse(lines(given.out).at(0))["sigma"].get<double>() == 0.25);
}

TEST_CASE("lambda paths write one model per value") {
  const Run r = run("fit --data ex1.csv --lambda-path 0.01,0.1,1 --out path.json");
  REQUIRE(r.code == 0);
  CHECK(lines(r.out).size() == 3);
  for (int k = 1; k <= 3; ++k) CHECK(fs::exists(workdir() / ("path_" + std::to_string(k) + ".json")));
}

TEST_CASE("predict matches the library and reports in-sample error") {
  REQUIRE(run("fit --data small.csv --kernel gauss --sigma 0.5 --lambda 0.05 --out p.json").code == 0);
  const Run r = run("predict --model p.json --data small.csv --labelled --scores");
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.front() == "label,score");
  const auto d = dwd::load_csv(workdir() / "small.csv");
  REQUIRE(rows.size() == std::size_t(d.n()) + 1);
  const auto model = dwd::load_model(workdir() / "p.json");
  const Eigen::VectorXd expected = dwd::decision_values(model.model, d.x());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    const std::string& row = rows[std::size_t(i) + 1];
    const double score = std::stod(row.substr(row.find(',') + 1));
    CHECK(score == expected[i]);
    CHECK(std::stoi(row.substr(0, row.find(','))) == (expected[i] >= 0 ? 1 : -1));
  }
  const json summary = json::parse(read("err.txt"));
  CHECK(summary["misclassification_rate"].get<double>() == doctest::Approx(dwd::misclassification_rate(model.model, d)));
}

TEST_CASE("predict on empty input and mismatched dimensions") {
  write("empty.csv", "x1,x2\n");
  const Run r = run("predict --model p.json --data empty.csv");
  CHECK(r.code == 0);
  CHECK(r.out == "label\n");
  write("wide.csv", "1,2,3\n4,5,6\n");
  CHECK(run("predict --model p.json --data wide.csv").code == 3);
  CHECK(run("predict --model nothere.json --data wide.csv").code == 3);
}

TEST_CASE("standardized fits store and reapply the scaling") {
  REQUIRE(run("fit --data ex1.csv --standardize --out st.json").code == 0);
  const auto model = dwd::load_model(workdir() / "st.json");
  REQUIRE(model.standardizer.has_value());
  const Run r = run("predict --model st.json --data ex1.csv --labelled");
  CHECK(r.code == 0);
  const json summary = json::parse(read("err.txt"));
  CHECK(summary["misclassification_rate"].get<double>() < 0.05);
}

TEST_CASE("cv writes a grid table whose means follow from the fold columns") {
  const Run r = run("cv --data ex1.csv --lambda-grid 1e-2:1:4 --out cv.json --report cv.jsonl");
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == "sigma,lambda,mean_error,std_error,nonconverged,chosen,fold1,fold2,fold3,fold4,fold5");
  int chosen = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    std::vector<double> fields;
    std::stringstream ss(rows[k]);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(std::stod(f));
    REQUIRE(fields.size() == 11);
    const double mean = (fields[6] + fields[7] + fields[8] + fields[9] + fields[10]) / 5.0;
    CHECK(fields[2] == doctest::Approx(mean).epsilon(1e-15));
    chosen += int(fields[5]);
  }
  CHECK(chosen == 1);
  const json report = json::parse(read("cv.jsonl"));
  CHECK(report["folds"] == 5);
  CHECK(fs::exists(workdir() / "cv.json"));
}

TEST_CASE("single-point cv reproduces fit") {
  REQUIRE(run("cv --data ex1.csv --lambda-grid 0.1 --out one.json --report one.jsonl").code == 0);
  REQUIRE(run("fit --data ex1.csv --lambda 0.1 --out direct.json").code == 0);
  const auto a = std::get<dwd::LinearModel>(dwd::load_model(workdir() / "one.json").model);
  const auto b = std::get<dwd::LinearModel>(dwd::load_model(workdir() / "direct.json").model);
  CHECK(a.beta0 == b.beta0);
  CHECK(a.beta == b.beta);
}

TEST_CASE("cv with degenerate folds is a data error") {
  write("lonely.csv", "1,0\n-1,1\n-1,2\n-1,3\n-1,4\n-1,5\n");
  CHECK(run("cv --data lonely.csv --lambda-grid 0.1").code == 3);
  CHECK(run("cv --data ex1.csv --folds 1").code == 2);
}

TEST_CASE("bench emits one row per scenario and setting") {
  const Run r = run("bench --scenarios ex1,ex2 --n 100,200 --q 1,4 --reps 1");
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 1 + 2 * 2 * 2);
  CHECK(rows[0].rfind("scenario,n,p,q,lambdas,reps,mean_seconds", 0) == 0);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    std::vector<std::string> fields;
    std::stringstream ss(rows[k]);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    CHECK(std::stod(fields[6]) > 0.0);
  }
  CHECK(run("bench --scenarios fig1 --reps 1").code == 2);
  CHECK(run("bench --reps 0").code == 2);
}

TEST_CASE("bench timings grow with n") {
  const Run r = run("bench --scenarios ex1 --n 40,2000 --reps 3");
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  REQUIRE(rows.size() == 3);
  auto mean = [](const std::string& row) {
    std::vector<std::string> fields;
    std::stringstream ss(row);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return std::stod(fields[6]);
  };
  CHECK(mean(rows[1]) < mean(rows[2]));
}

TEST_CASE("verify runs single families and fails the negative control") {
  const Run ok = run("verify --only fisher");
  CHECK(ok.code == 0);
  const auto rows = lines(ok.out);
  CHECK(rows.size() == 4);
  for (const auto& row : rows) {
    const json j = json::parse(row);
    CHECK(j["family"] == "fisher");
    CHECK(j["passed"].get<bool>());
  }
  const Run bad = run("verify --only loss --quick --lipschitz-override 1.0");
  CHECK(bad.code == 1);
  bool majorization_failed = false;
  for (const auto& row : lines(bad.out)) {
    const json j = json::parse(row);
    if (j["check"] == "quadratic_majorization") majorization_failed = !j["passed"].get<bool>();
  }
  CHECK(majorization_failed);
  CHECK(run("verify --only nonsense").code == 2);
}
