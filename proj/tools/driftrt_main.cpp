// driftrt: simulate, evaluate and fit the joint latent-increment /
// reaction-time model from the command line. All structured output is JSON;
// datasets are CSV (one row per subject/time/outcome cell).

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "driftrt/config.hpp"
#include "driftrt/csv.hpp"
#include "driftrt/errors.hpp"
#include "driftrt/fit.hpp"
#include "driftrt/likelihood.hpp"
#include "driftrt/oracle.hpp"
#include "driftrt/probability.hpp"
#include "driftrt/simulate.hpp"

namespace {

using driftrt::RunConfig;

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  int threads = 0;
  std::optional<std::int64_t> seed;
  std::optional<int> quad_order;
  std::optional<std::int64_t> mc_samples;
  std::optional<std::int64_t> max_evals;
  std::optional<int> restarts;
};

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw driftrt::DataError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw driftrt::DataError("write failed for '" + path + "'");
}

RunConfig load_config(const CommonArgs& args) {
  if (args.config_path.empty()) throw driftrt::ConfigError("--config is required");
  RunConfig config = driftrt::load_run_config(args.config_path);
  if (args.quad_order) {
    if (*args.quad_order < 1 || *args.quad_order > 100)
      throw driftrt::ConfigError("--quad-order: must be in [1, 100]");
    config.quadrature.order = *args.quad_order;
  }
  if (args.mc_samples) config.quadrature.mc_samples = *args.mc_samples;
  if (args.max_evals) config.optimizer.max_evals = *args.max_evals;
  if (args.restarts) config.optimizer.restarts = *args.restarts;
  return config;
}

driftrt::Dataset load_dataset(const CommonArgs& args, const RunConfig& config) {
  const std::string path = !args.data_path.empty() ? args.data_path : config.io.data;
  if (path.empty()) throw driftrt::ConfigError("--data is required");
  return driftrt::read_dataset_csv(path, config.model, config.u1_index, config.u2_index);
}

double evaluate_loglik(const RunConfig& config, const driftrt::Dataset& dataset, int threads) {
  const int q = config.model.q1 + config.model.q2;
  if (config.quadrature.mode == driftrt::IntegrationMode::kMonteCarlo && q > 0) {
    return driftrt::mc_log_likelihood(dataset, *config.params, config.quadrature.mc_samples,
                                      config.seed.value_or(0), threads)
        .first;
  }
  const driftrt::QuadratureRule rule = driftrt::gh_rule(config.quadrature.order, q);
  return driftrt::log_likelihood(dataset, *config.params, rule,
                                 driftrt::LikelihoodOptions{threads});
}

int cmd_simulate(const CommonArgs& args, bool censor_noncrossed) {
  RunConfig config = load_config(args);
  if (!config.params)
    throw driftrt::ConfigError("simulate: config must provide a 'params' section");
  const std::string out = !args.out_path.empty() ? args.out_path : config.io.out;
  if (out.empty()) throw driftrt::ConfigError("--out is required");
  const std::uint64_t seed = args.seed ? static_cast<std::uint64_t>(*args.seed)
                                       : config.seed.value_or(0);

  driftrt::CovariateDesign design =
      driftrt::make_design(config.model, config.covariates, seed);
  design.u1_index = config.u1_index;
  design.u2_index = config.u2_index;
  const driftrt::Dataset dataset =
      driftrt::simulate_dataset(config.model, *config.params, design, seed);
  driftrt::write_dataset_csv(dataset, out, censor_noncrossed);

  config.seed = seed;
  write_text_file(out + ".truth.json", driftrt::run_config_to_json(config));
  std::cout << "{\"rows\": " << static_cast<long long>(config.model.m) * config.model.n *
                                   config.model.p
            << ", \"out\": \"" << out << "\"}\n";
  return 0;
}

int cmd_loglik(const CommonArgs& args) {
  const RunConfig config = load_config(args);
  if (!config.params)
    throw driftrt::ConfigError("loglik: config must provide a 'params' section");
  const driftrt::Dataset dataset = load_dataset(args, config);
  driftrt::reset_clamp_events();
  const double value = evaluate_loglik(config, dataset, args.threads);
  char loglik_text[40];
  std::snprintf(loglik_text, sizeof(loglik_text), "%.17g", value);
  std::cout << "{\"loglik\": " << loglik_text
            << ", \"quadrature_order\": " << config.quadrature.order
            << ", \"clamp_events\": " << driftrt::clamp_event_count() << "}\n";
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& init_path) {
  const RunConfig config = load_config(args);
  const driftrt::Dataset dataset = load_dataset(args, config);

  driftrt::FitConfig fit_config;
  fit_config.nm.x_tol = config.optimizer.x_tol;
  fit_config.nm.f_tol = config.optimizer.f_tol;
  fit_config.nm.max_evals = config.optimizer.max_evals;
  fit_config.restarts = config.optimizer.restarts;
  fit_config.seed = args.seed ? static_cast<std::uint64_t>(*args.seed) : config.optimizer.seed;
  fit_config.quad_order = config.quadrature.order;
  fit_config.mode = config.quadrature.mode;
  fit_config.mc_samples = config.quadrature.mc_samples;
  fit_config.threads = args.threads;
  fit_config.estimate_rho = config.optimizer.estimate_rho;
  fit_config.estimate_sigma12 = config.optimizer.estimate_sigma12;
  fit_config.compute_se = config.optimizer.compute_se;
  fit_config.record_trace = config.optimizer.trace;
  if (!init_path.empty())
    fit_config.init = driftrt::load_params_json(init_path, config.model);
  else if (driftrt::initial_guess(dataset).rank_fallback)
    std::cerr << "warning: rank-deficient design, least-squares start fell back to zeros\n";

  const driftrt::FitResult result = driftrt::fit(dataset, fit_config);
  const std::string json = driftrt::fit_result_to_json(result);
  const std::string out = !args.out_path.empty() ? args.out_path : config.io.out;
  if (!out.empty()) write_text_file(out, json);
  std::cout << json;
  return result.converged ? 0 : 2;
}

int cmd_check(const std::string& level, int threads, const std::string& out_path) {
  const driftrt::CheckLevel check_level =
      level == "full" ? driftrt::CheckLevel::kFull : driftrt::CheckLevel::kQuick;
  const auto reports = driftrt::run_checks(check_level, threads);
  const std::string json = driftrt::oracle_reports_to_json(reports);
  if (!out_path.empty()) write_text_file(out_path, json);
  std::cout << json;
  for (const auto& report : reports)
    if (!report.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint latent-increment / reaction-time model toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  bool censor_noncrossed = false;
  std::string init_path;
  std::string level = "quick";

  auto add_common = [&](CLI::App* cmd, bool with_data) {
    cmd->add_option("--config", args.config_path, "run configuration JSON");
    if (with_data) cmd->add_option("--data", args.data_path, "dataset CSV");
    cmd->add_option("--out", args.out_path, "output path");
    cmd->add_option("--threads", args.threads, "worker threads (0 = hardware)");
    cmd->add_option("--seed", args.seed, "seed override");
    cmd->add_option("--quad-order", args.quad_order, "Gauss-Hermite order override");
    cmd->add_option("--mc-samples", args.mc_samples, "Monte-Carlo sample override");
    cmd->add_option("--max-evals", args.max_evals, "optimizer evaluation budget override");
    cmd->add_option("--restarts", args.restarts, "optimizer restart override");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a dataset and truth sidecar");
  add_common(simulate, false);
  simulate->add_flag("--censor-noncrossed", censor_noncrossed,
                     "leave r_star empty on cells that did not cross");

  CLI::App* loglik = app.add_subcommand("loglik", "evaluate the marginal log-likelihood");
  add_common(loglik, true);

  CLI::App* fit = app.add_subcommand("fit", "maximum-likelihood estimation");
  add_common(fit, true);
  fit->add_option("--init", init_path, "starting parameters JSON (e.g. a truth sidecar)");

  CLI::App* check = app.add_subcommand("check", "run the validation oracles");
  check->add_option("--level", level, "quick | full")
      ->check(CLI::IsMember({"quick", "full"}));
  check->add_option("--threads", args.threads, "worker threads (0 = hardware)");
  check->add_option("--out", args.out_path, "report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(args, censor_noncrossed);
    if (loglik->parsed()) return cmd_loglik(args);
    if (fit->parsed()) return cmd_fit(args, init_path);
    if (check->parsed()) return cmd_check(level, args.threads, args.out_path);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
