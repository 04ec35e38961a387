#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "driftrt/fit.hpp"
#include "driftrt/model.hpp"
#include "driftrt/oracle.hpp"
#include "driftrt/simulate.hpp"

namespace driftrt {

struct QuadratureConfig {
  int order = 15;
  IntegrationMode mode = IntegrationMode::kGaussHermite;
  std::int64_t mc_samples = 100000;
};

struct OptimizerConfig {
  double x_tol = 1e-6;
  double f_tol = 1e-8;
  std::int64_t max_evals = 0;  // 0 = 20000 * dimension
  int restarts = 2;
  std::uint64_t seed = 0;
  bool estimate_rho = true;
  bool estimate_sigma12 = true;
  bool compute_se = false;
  bool trace = false;
};

struct IoConfig {
  std::string data;
  std::string out;
};

/// Parsed run configuration. Validation is strict: unknown keys anywhere in
/// the document are rejected, and every invariant names the offending field.
/// The published schema lives in docs/runconfig.schema.json.
struct RunConfig {
  ModelSpec model;
  Eigen::VectorXi u1_index;  // structural part of the design, from model section
  Eigen::VectorXi u2_index;
  std::optional<Parameters> params;
  CovariateKind covariates = CovariateKind::kIntercept;
  QuadratureConfig quadrature;
  OptimizerConfig optimizer;
  IoConfig io;
  std::optional<std::uint64_t> seed;  // present in truth sidecars
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Parameters alone (the payload of a --init file); accepts either a bare
/// parameters object or any document with a "params" key, e.g. a truth
/// sidecar.
Parameters parse_params_json(const std::string& json_text, const ModelSpec& spec);
Parameters load_params_json(const std::string& path, const ModelSpec& spec);

std::string run_config_to_json(const RunConfig& config);
std::string fit_result_to_json(const FitResult& result);
std::string oracle_reports_to_json(const std::vector<OracleReport>& reports);

}  // namespace driftrt
