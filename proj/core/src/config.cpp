#include "driftrt/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>  // nlohmann/json (vendored single header)

#include "driftrt/errors.hpp"

namespace driftrt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void reject_unknown_keys(const json& object, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known) fail(where, "unknown key '" + item.key() + "'");
  }
}

const json& require(const json& object, const std::string& where, const char* key) {
  const auto it = object.find(key);
  if (it == object.end()) fail(where, "missing required key '" + std::string(key) + "'");
  return *it;
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) fail(where, "expected a number");
  return value.get<double>();
}

std::int64_t as_integer(const json& value, const std::string& where) {
  if (!value.is_number_integer()) fail(where, "expected an integer");
  return value.get<std::int64_t>();
}

bool as_bool(const json& value, const std::string& where) {
  if (!value.is_boolean()) fail(where, "expected a boolean");
  return value.get<bool>();
}

std::vector<int> as_int_vector(const json& value, const std::string& where) {
  if (!value.is_array()) fail(where, "expected an array of integers");
  std::vector<int> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
    out.push_back(static_cast<int>(as_integer(value[i], where + "[" + std::to_string(i) + "]")));
  return out;
}

Eigen::VectorXd as_vector(const json& value, const std::string& where) {
  if (!value.is_array()) fail(where, "expected an array of numbers");
  Eigen::VectorXd out(value.size());
  for (std::size_t i = 0; i < value.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = as_number(value[i], where + "[" + std::to_string(i) + "]");
  return out;
}

Eigen::MatrixXd as_matrix(const json& value, const std::string& where) {
  if (!value.is_array()) fail(where, "expected an array of row arrays");
  const auto rows = static_cast<Eigen::Index>(value.size());
  Eigen::MatrixXd out(rows, rows == 0 ? 0 : static_cast<Eigen::Index>(value[0].size()));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::VectorXd row = as_vector(value[static_cast<std::size_t>(r)],
                                          where + "[" + std::to_string(r) + "]");
    if (row.size() != out.cols()) fail(where, "ragged matrix rows");
    out.row(r) = row;
  }
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& matrix) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) row.push_back(matrix(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Eigen::VectorXd& vector) {
  json out = json::array();
  for (Eigen::Index i = 0; i < vector.size(); ++i) out.push_back(vector[i]);
  return out;
}

ModelSpec parse_model(const json& node, Eigen::VectorXi* u1, Eigen::VectorXi* u2) {
  reject_unknown_keys(node, "model",
                      {"m", "n", "p", "q1", "q2", "dt", "d1", "d2", "u1_index", "u2_index"});
  ModelSpec spec;
  spec.m = static_cast<int>(as_integer(require(node, "model", "m"), "model.m"));
  spec.n = static_cast<int>(as_integer(require(node, "model", "n"), "model.n"));
  spec.p = static_cast<int>(as_integer(require(node, "model", "p"), "model.p"));
  spec.q1 = static_cast<int>(as_integer(require(node, "model", "q1"), "model.q1"));
  spec.q2 = static_cast<int>(as_integer(require(node, "model", "q2"), "model.q2"));
  spec.dt = node.contains("dt") ? as_number(node["dt"], "model.dt") : 1.0;
  spec.d1 = as_int_vector(require(node, "model", "d1"), "model.d1");
  spec.d2 = as_int_vector(require(node, "model", "d2"), "model.d2");

  auto parse_index = [&](const char* key, int q) {
    Eigen::VectorXi out(q);
    if (!node.contains(key)) {
      if (q > 0) fail("model", std::string("missing required key '") + key + "' (q > 0)");
      return out;
    }
    const std::vector<int> raw = as_int_vector(node[key], std::string("model.") + key);
    if (static_cast<int>(raw.size()) != q)
      fail(std::string("model.") + key, "expected " + std::to_string(q) + " entries");
    for (int i = 0; i < q; ++i) out[i] = raw[i];
    return out;
  };
  *u1 = parse_index("u1_index", spec.q1);
  *u2 = parse_index("u2_index", spec.q2);
  validate_spec(spec);
  return spec;
}

Parameters parse_params(const json& node, const ModelSpec& spec) {
  reject_unknown_keys(node, "params",
                      {"beta1", "beta2", "a1", "a2", "sigma1", "sigma2", "sigma12", "rho"});
  Parameters params;
  const json& beta1 = require(node, "params", "beta1");
  const json& beta2 = require(node, "params", "beta2");
  if (!beta1.is_array() || static_cast<int>(beta1.size()) != spec.p)
    fail("params.beta1", "expected one coefficient array per outcome");
  if (!beta2.is_array() || static_cast<int>(beta2.size()) != spec.p)
    fail("params.beta2", "expected one coefficient array per outcome");
  params.beta1.resize(spec.p);
  params.beta2.resize(spec.p);
  for (int j = 0; j < spec.p; ++j) {
    params.beta1[j] = as_vector(beta1[j], "params.beta1[" + std::to_string(j) + "]");
    params.beta2[j] = as_vector(beta2[j], "params.beta2[" + std::to_string(j) + "]");
  }
  params.a1 = as_number(require(node, "params", "a1"), "params.a1");
  params.a2 = as_number(require(node, "params", "a2"), "params.a2");
  if (!(params.a1 < params.a2)) fail("params.a1", "boundaries must satisfy a1 < a2");

  auto block = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
    if (!node.contains(key)) {
      if (rows * cols > 0) fail("params", std::string("missing required key '") + key + "'");
      return Eigen::MatrixXd(rows, cols);
    }
    Eigen::MatrixXd out = as_matrix(node[key], std::string("params.") + key);
    if (out.rows() != rows || out.cols() != cols) {
      if (out.size() == 0 && rows * cols == 0) return Eigen::MatrixXd(rows, cols);
      fail(std::string("params.") + key, "expected a " + std::to_string(rows) + "x" +
                                             std::to_string(cols) + " matrix");
    }
    return out;
  };
  params.sigma_b.sigma1 = block("sigma1", spec.q1, spec.q1);
  params.sigma_b.sigma2 = block("sigma2", spec.q2, spec.q2);
  params.sigma_b.sigma12 = block("sigma12", spec.q1, spec.q2);
  params.rho = node.contains("rho") ? as_number(node["rho"], "params.rho") : 0.0;
  if (!(std::abs(params.rho) < 1.0)) fail("params.rho", "must satisfy |rho| < 1");
  validate_params(spec, params);
  return params;
}

QuadratureConfig parse_quadrature(const json& node) {
  reject_unknown_keys(node, "quadrature", {"order", "mode", "mc_samples"});
  QuadratureConfig quad;
  if (node.contains("order"))
    quad.order = static_cast<int>(as_integer(node["order"], "quadrature.order"));
  if (quad.order < 1 || quad.order > 100) fail("quadrature.order", "must be in [1, 100]");
  if (node.contains("mode")) {
    const std::string mode = node["mode"].is_string() ? node["mode"].get<std::string>() : "";
    if (mode == "gauss-hermite")
      quad.mode = IntegrationMode::kGaussHermite;
    else if (mode == "monte-carlo")
      quad.mode = IntegrationMode::kMonteCarlo;
    else
      fail("quadrature.mode", "must be 'gauss-hermite' or 'monte-carlo'");
  }
  if (node.contains("mc_samples"))
    quad.mc_samples = as_integer(node["mc_samples"], "quadrature.mc_samples");
  if (quad.mc_samples < 1000) fail("quadrature.mc_samples", "must be >= 1000");
  return quad;
}

OptimizerConfig parse_optimizer(const json& node) {
  reject_unknown_keys(node, "optimizer",
                      {"x_tol", "f_tol", "max_evals", "restarts", "seed", "estimate_rho",
                       "estimate_sigma12", "compute_se", "trace"});
  OptimizerConfig opt;
  if (node.contains("x_tol")) opt.x_tol = as_number(node["x_tol"], "optimizer.x_tol");
  if (node.contains("f_tol")) opt.f_tol = as_number(node["f_tol"], "optimizer.f_tol");
  if (!(opt.x_tol > 0.0)) fail("optimizer.x_tol", "must be > 0");
  if (!(opt.f_tol > 0.0)) fail("optimizer.f_tol", "must be > 0");
  if (node.contains("max_evals")) opt.max_evals = as_integer(node["max_evals"], "optimizer.max_evals");
  if (opt.max_evals < 0) fail("optimizer.max_evals", "must be >= 0");
  if (node.contains("restarts"))
    opt.restarts = static_cast<int>(as_integer(node["restarts"], "optimizer.restarts"));
  if (opt.restarts < 0) fail("optimizer.restarts", "must be >= 0");
  if (node.contains("seed"))
    opt.seed = static_cast<std::uint64_t>(as_integer(node["seed"], "optimizer.seed"));
  if (node.contains("estimate_rho"))
    opt.estimate_rho = as_bool(node["estimate_rho"], "optimizer.estimate_rho");
  if (node.contains("estimate_sigma12"))
    opt.estimate_sigma12 = as_bool(node["estimate_sigma12"], "optimizer.estimate_sigma12");
  if (node.contains("compute_se")) opt.compute_se = as_bool(node["compute_se"], "optimizer.compute_se");
  if (node.contains("trace")) opt.trace = as_bool(node["trace"], "optimizer.trace");
  return opt;
}

json parse_document(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("config: malformed JSON");
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  return doc;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  const json doc = parse_document(json_text);
  reject_unknown_keys(doc, "config",
                      {"model", "params", "covariates", "quadrature", "optimizer", "io", "seed"});
  RunConfig config;
  config.model = parse_model(require(doc, "config", "model"), &config.u1_index, &config.u2_index);
  if (doc.contains("params")) config.params = parse_params(doc["params"], config.model);
  if (doc.contains("covariates")) {
    const json& node = doc["covariates"];
    reject_unknown_keys(node, "covariates", {"kind"});
    const std::string kind =
        node.contains("kind") && node["kind"].is_string() ? node["kind"].get<std::string>() : "";
    if (kind == "intercept")
      config.covariates = CovariateKind::kIntercept;
    else if (kind == "gaussian")
      config.covariates = CovariateKind::kGaussian;
    else
      fail("covariates.kind", "must be 'intercept' or 'gaussian'");
  }
  if (doc.contains("quadrature")) config.quadrature = parse_quadrature(doc["quadrature"]);
  if (doc.contains("optimizer")) config.optimizer = parse_optimizer(doc["optimizer"]);
  if (doc.contains("io")) {
    const json& node = doc["io"];
    reject_unknown_keys(node, "io", {"data", "out"});
    if (node.contains("data")) config.io.data = node["data"].get<std::string>();
    if (node.contains("out")) config.io.out = node["out"].get<std::string>();
  }
  if (doc.contains("seed"))
    config.seed = static_cast<std::uint64_t>(as_integer(doc["seed"], "seed"));

  const int q = config.model.q1 + config.model.q2;
  if (config.quadrature.mode == IntegrationMode::kGaussHermite && q > 4)
    fail("quadrature.mode",
         "tensor Gauss-Hermite is capped at q1+q2 <= 4; set mode to 'monte-carlo'");
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

Parameters parse_params_json(const std::string& json_text, const ModelSpec& spec) {
  const json doc = parse_document(json_text);
  if (doc.contains("params")) return parse_params(doc["params"], spec);
  return parse_params(doc, spec);
}

Parameters load_params_json(const std::string& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open parameter file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_params_json(buffer.str(), spec);
}

namespace {

json params_to_json_node(const Parameters& params) {
  json node;
  json beta1 = json::array();
  for (const auto& beta : params.beta1) beta1.push_back(vector_to_json(beta));
  json beta2 = json::array();
  for (const auto& beta : params.beta2) beta2.push_back(vector_to_json(beta));
  node["beta1"] = std::move(beta1);
  node["beta2"] = std::move(beta2);
  node["a1"] = params.a1;
  node["a2"] = params.a2;
  node["sigma1"] = matrix_to_json(params.sigma_b.sigma1);
  node["sigma2"] = matrix_to_json(params.sigma_b.sigma2);
  node["sigma12"] = matrix_to_json(params.sigma_b.sigma12);
  node["rho"] = params.rho;
  return node;
}

}  // namespace

std::string run_config_to_json(const RunConfig& config) {
  json doc;
  json model;
  model["m"] = config.model.m;
  model["n"] = config.model.n;
  model["p"] = config.model.p;
  model["q1"] = config.model.q1;
  model["q2"] = config.model.q2;
  model["dt"] = config.model.dt;
  model["d1"] = config.model.d1;
  model["d2"] = config.model.d2;
  json u1 = json::array();
  for (int i = 0; i < config.u1_index.size(); ++i) u1.push_back(config.u1_index[i]);
  json u2 = json::array();
  for (int i = 0; i < config.u2_index.size(); ++i) u2.push_back(config.u2_index[i]);
  model["u1_index"] = std::move(u1);
  model["u2_index"] = std::move(u2);
  doc["model"] = std::move(model);
  if (config.params) doc["params"] = params_to_json_node(*config.params);
  doc["covariates"] = {
      {"kind", config.covariates == CovariateKind::kIntercept ? "intercept" : "gaussian"}};
  doc["quadrature"] = {
      {"order", config.quadrature.order},
      {"mode",
       config.quadrature.mode == IntegrationMode::kGaussHermite ? "gauss-hermite" : "monte-carlo"},
      {"mc_samples", config.quadrature.mc_samples}};
  if (config.seed) doc["seed"] = *config.seed;
  return doc.dump(2) + "\n";
}

std::string fit_result_to_json(const FitResult& result) {
  json doc;
  doc["params_hat"] = params_to_json_node(result.params_hat);
  doc["theta_hat"] = vector_to_json(result.theta_hat.theta);
  doc["loglik"] = result.loglik;
  doc["n_evals"] = result.n_evals;
  doc["converged"] = result.converged;
  doc["restarts_used"] = result.restarts_used;
  if (result.se) {
    json se = json::array();
    for (Eigen::Index i = 0; i < result.se->size(); ++i) {
      const double value = (*result.se)[i];
      if (std::isnan(value))
        se.push_back(nullptr);  // pinned coordinate
      else
        se.push_back(value);
    }
    doc["se"] = std::move(se);
  } else {
    doc["se"] = nullptr;
  }
  if (result.trace) {
    json trace = json::array();
    for (const auto& [best, diameter] : *result.trace) trace.push_back({best, diameter});
    doc["trace"] = std::move(trace);
  } else {
    doc["trace"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

std::string oracle_reports_to_json(const std::vector<OracleReport>& reports) {
  json doc = json::array();
  for (const OracleReport& report : reports) {
    doc.push_back({{"name", report.name},
                   {"statistic", report.statistic},
                   {"threshold", report.threshold},
                   {"passed", report.passed},
                   {"n", report.n}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace driftrt
