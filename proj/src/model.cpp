#include "dwd/model.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "dwd/error.hpp"

namespace dwd {

using nlohmann::json;

Eigen::VectorXd decision_values(const AnyModel& model, const Eigen::MatrixXd& x) {
  return std::visit([&](const auto& m) { return m.decision_values(x); }, model);
}

Eigen::VectorXi sign_labels(const Eigen::VectorXd& decision) {
  return decision.unaryExpr([](double v) { return v >= 0.0 ? 1 : -1; });
}

Eigen::VectorXi predict(const LinearModel& model, const Eigen::MatrixXd& x) {
  return sign_labels(model.decision_values(x));
}

Eigen::VectorXi predict(const KernelModel& model, const Eigen::MatrixXd& x) {
  return sign_labels(model.decision_values(x));
}

Eigen::VectorXi predict(const AnyModel& model, const Eigen::MatrixXd& x) {
  return sign_labels(decision_values(model, x));
}

double misclassification_rate(const AnyModel& model, const Dataset& data) {
  if (data.n() == 0) return 0.0;
  const Eigen::VectorXi labels = predict(model, data.x());
  Eigen::Index wrong = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) wrong += labels[i] != static_cast<int>(data.y()[i]);
  return static_cast<double>(wrong) / static_cast<double>(data.n());
}

ConstrainedSolution to_constrained(const LinearModel& model) {
  const double norm = model.beta.norm();
  if (!(norm > 0.0)) throw InvalidArgument("coefficient vector is zero; the constrained direction is undefined");
  const double q = model.q;
  ConstrainedSolution out;
  out.omega = model.beta / norm;
  out.omega0 = model.beta0 / norm;
  out.c = std::exp((q + 1.0) * std::log(q + 1.0) - q * std::log(q) + (q + 1.0) * std::log(norm));
  return out;
}

namespace {

json vector_json(const Eigen::VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Eigen::VectorXd json_vector(const json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("model field '") + field + "' must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(std::string("model field '") + field + "' has a non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd json_matrix(const json& j, const char* field) {
  if (!j.is_array()) throw ParseError(std::string("model field '") + field + "' must be an array of rows");
  if (j.empty()) return {};
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Eigen::VectorXd row = json_vector(j[i], field);
    if (row.size() != cols) throw ParseError(std::string("model field '") + field + "' has ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

const json& require(const json& doc, const char* field) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw ParseError(std::string("model file is missing field '") + field + "'");
  return *it;
}

double require_number(const json& doc, const char* field) {
  const json& value = require(doc, field);
  if (!value.is_number()) throw ParseError(std::string("model field '") + field + "' must be a number");
  return value.get<double>();
}

}  // namespace

std::string serialize_model(const ModelFile& file) {
  json doc;
  doc["schema_version"] = ModelFile::kSchemaVersion;
  if (const auto* lin = std::get_if<LinearModel>(&file.model)) {
    doc["model_kind"] = "linear";
    doc["q"] = lin->q;
    doc["lambda"] = lin->lambda;
    doc["beta0"] = lin->beta0;
    doc["coefficients"] = vector_json(lin->beta);
  } else {
    const auto& ker = std::get<KernelModel>(file.model);
    doc["model_kind"] = "kernel";
    doc["q"] = ker.q;
    doc["lambda"] = ker.lambda;
    doc["kernel"] = {{"kind", ker.kernel.name()},
                     {"offset", ker.kernel.offset},
                     {"degree", ker.kernel.degree},
                     {"sigma", ker.kernel.sigma}};
    doc["beta0"] = ker.beta0;
    doc["coefficients"] = vector_json(ker.alpha);
    doc["train_inputs"] = matrix_json(ker.train_inputs);
  }
  if (file.standardizer) {
    doc["standardization"] = {{"mean", vector_json(file.standardizer->mean)},
                              {"scale", vector_json(file.standardizer->scale)}};
  }
  return doc.dump(1) + "\n";
}

ModelFile parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model file must hold a JSON object");
  const json& version = require(doc, "schema_version");
  if (!version.is_number_integer()) throw ParseError("schema_version must be an integer");
  if (version.get<int>() != ModelFile::kSchemaVersion) {
    throw VersionError("model schema version " + std::to_string(version.get<int>()) + " is not supported (expected " +
                       std::to_string(ModelFile::kSchemaVersion) + ")");
  }
  const json& kind = require(doc, "model_kind");
  if (!kind.is_string()) throw ParseError("model_kind must be a string");

  ModelFile file;
  try {
    if (kind == "linear") {
      LinearModel m;
      m.q = require_number(doc, "q");
      m.lambda = require_number(doc, "lambda");
      m.beta0 = require_number(doc, "beta0");
      m.beta = json_vector(require(doc, "coefficients"), "coefficients");
      file.model = std::move(m);
    } else if (kind == "kernel") {
      KernelModel m;
      m.q = require_number(doc, "q");
      m.lambda = require_number(doc, "lambda");
      m.beta0 = require_number(doc, "beta0");
      m.alpha = json_vector(require(doc, "coefficients"), "coefficients");
      m.train_inputs = json_matrix(require(doc, "train_inputs"), "train_inputs");
      const json& k = require(doc, "kernel");
      m.kernel.kind = parse_kernel_kind(k.at("kind").get<std::string>());
      m.kernel.offset = k.at("offset").get<double>();
      m.kernel.degree = k.at("degree").get<int>();
      m.kernel.sigma = k.at("sigma").get<double>();
      m.kernel.validate();
      if (m.alpha.size() != m.train_inputs.rows()) throw ParseError("coefficients and train_inputs disagree in length");
      file.model = std::move(m);
    } else {
      throw ParseError("unknown model_kind '" + kind.get<std::string>() + "'");
    }
    if (const auto it = doc.find("standardization"); it != doc.end()) {
      Standardizer s;
      s.mean = json_vector(it->at("mean"), "standardization.mean");
      s.scale = json_vector(it->at("scale"), "standardization.scale");
      if (s.mean.size() != s.scale.size()) throw ParseError("standardization mean and scale differ in length");
      file.standardizer = std::move(s);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("malformed model file: ") + e.what());
  }
  return file;
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << serialize_model(file);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void save_model(const AnyModel& model, const std::filesystem::path& path) { save_model(ModelFile{model, {}}, path); }

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

}  // namespace dwd
