#include "driftrt/fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "driftrt/errors.hpp"
#include "driftrt/oracle.hpp"
#include "driftrt/rng.hpp"

namespace driftrt {

namespace {

// Linear-interpolation sample quantile of a pooled sorted copy.
double percentile(std::vector<double> values, double prob) {
  std::sort(values.begin(), values.end());
  const std::size_t count = values.size();
  if (count == 1) return values[0];
  const double h = prob * static_cast<double>(count - 1);
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= count) return values[count - 1];
  return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
}

// Pooled least squares of `response(i,j) (cells) on the per-outcome design.
Eigen::VectorXd pooled_ls(const Dataset& dataset, int j, bool first_block, double scale,
                          bool* fallback) {
  const ModelSpec& spec = dataset.spec;
  const int width = first_block ? spec.d1[j] : spec.d2[j];
  if (width == 0) return Eigen::VectorXd(0);

  const auto rows = static_cast<Eigen::Index>(spec.m) * spec.n;
  Eigen::MatrixXd design(rows, width);
  Eigen::VectorXd response(rows);
  Eigen::Index row = 0;
  for (int k = 0; k < spec.m; ++k) {
    const SubjectData& subject = dataset.subjects[k];
    const Eigen::VectorXd& v =
        first_block ? subject.covariates.v1[j] : subject.covariates.v2[j];
    for (int i = 0; i < spec.n; ++i, ++row) {
      design.row(row) = scale * v.transpose();
      response[row] = first_block ? subject.y(i, j) : subject.r_star(i, j);
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < width) {
    *fallback = true;
    return Eigen::VectorXd::Zero(width);
  }
  return qr.solve(response);
}

}  // namespace

InitialGuess initial_guess(const Dataset& dataset) {
  const ModelSpec& spec = dataset.spec;
  if (spec.m < 1 || dataset.subjects.empty())
    throw ConfigError("initial_guess: dataset is empty");

  InitialGuess guess;
  Parameters& params = guess.params;
  params.beta1.resize(spec.p);
  params.beta2.resize(spec.p);
  for (int j = 0; j < spec.p; ++j) {
    params.beta1[j] = pooled_ls(dataset, j, true, spec.dt, &guess.rank_fallback);
    params.beta2[j] = pooled_ls(dataset, j, false, 1.0, &guess.rank_fallback);
  }

  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(spec.m) * spec.n * spec.p);
  for (const SubjectData& subject : dataset.subjects)
    for (int j = 0; j < spec.p; ++j)
      for (int i = 0; i < spec.n; ++i) pooled.push_back(subject.y(i, j));
  params.a1 = percentile(pooled, 0.10);
  params.a2 = percentile(pooled, 0.90);
  if (!(params.a1 < params.a2)) {  // degenerate pooled sample
    params.a1 -= 0.5;
    params.a2 = params.a1 + 1.0;
  }

  params.sigma_b.sigma1 = 0.1 * Eigen::MatrixXd::Identity(spec.q1, spec.q1);
  params.sigma_b.sigma2 = 0.1 * Eigen::MatrixXd::Identity(spec.q2, spec.q2);
  params.sigma_b.sigma12 = Eigen::MatrixXd::Zero(spec.q1, spec.q2);
  params.rho = 0.0;
  return guess;
}

FitResult fit(const Dataset& dataset, const FitConfig& config) {
  const ModelSpec& spec = dataset.spec;
  validate_spec(spec);
  if (spec.m < 1) throw ConfigError("fit: dataset is empty");

  Parameters start = config.init ? *config.init : initial_guess(dataset).params;
  validate_params(spec, start);
  const ThetaLayout layout(spec);
  const Eigen::VectorXd theta0 = pack(spec, start).theta;

  // Free-coordinate mask; pinned coordinates keep their starting values.
  std::vector<bool> pinned(layout.dim(), false);
  if (!config.estimate_rho) pinned[layout.rho_index()] = true;
  if (!config.estimate_sigma12)
    for (int idx : layout.cross_block_indices(spec.q1, spec.q2)) pinned[idx] = true;
  std::vector<int> free_idx;
  for (int i = 0; i < layout.dim(); ++i)
    if (!pinned[i]) free_idx.push_back(i);
  if (free_idx.empty()) throw ConfigError("fit: all parameters are pinned");

  auto embed = [&](const Eigen::VectorXd& x_free) {
    Eigen::VectorXd full = theta0;
    for (std::size_t i = 0; i < free_idx.size(); ++i) full[free_idx[i]] = x_free[i];
    return full;
  };

  QuadratureRule rule;
  if (config.mode == IntegrationMode::kGaussHermite && spec.q1 + spec.q2 > 0)
    rule = gh_rule(config.quad_order, spec.q1 + spec.q2);
  const LikelihoodOptions ll_options{config.threads};

  std::string last_failure;
  auto objective = [&](const Eigen::VectorXd& x_free) -> double {
    try {
      const Parameters params = unpack(spec, UnconstrainedParams{embed(x_free)});
      double value;
      if (config.mode == IntegrationMode::kMonteCarlo && spec.q1 + spec.q2 > 0) {
        value = mc_log_likelihood(dataset, params, config.mc_samples, config.seed,
                                  config.threads)
                    .first;
      } else {
        value = log_likelihood(dataset, params, rule, ll_options);
      }
      return -value;
    } catch (const NumericError& err) {
      last_failure = err.what();
      return std::numeric_limits<double>::infinity();
    } catch (const ParameterError& err) {
      last_failure = err.what();
      return std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd x_free(free_idx.size());
  for (std::size_t i = 0; i < free_idx.size(); ++i) x_free[i] = theta0[free_idx[i]];

  NelderMeadConfig nm = config.nm;
  nm.record_trace = config.record_trace;

  FitResult result;
  NelderMeadResult run;
  try {
    run = nelder_mead(objective, x_free, nm);
  } catch (const NumericError&) {
    std::string detail = last_failure.empty() ? "non-finite objective" : last_failure;
    throw NumericError("fit: likelihood failed at the starting point (" + detail +
                       "); theta0 = [" +
                       [&] {
                         std::string s;
                         for (int i = 0; i < theta0.size(); ++i)
                           s += (i ? ", " : "") + std::to_string(theta0[i]);
                         return s;
                       }() +
                       "]");
  }
  result.n_evals = run.n_evals;
  if (config.record_trace) result.trace = run.trace;

  int restarts_used = 0;
  for (int r = 1; r <= config.restarts; ++r) {
    Rng jitter = Rng::substream(config.seed, stream::kRestartJitter, static_cast<std::uint64_t>(r));
    NelderMeadConfig nm_restart = nm;
    const double scale = 1.0 + 0.5 * (2.0 * jitter.uniform() - 1.0);
    nm_restart.initial_step_rel = nm.initial_step_rel * scale;
    nm_restart.initial_step_min = nm.initial_step_min * scale;

    const double f_before = run.f_min;
    NelderMeadResult next = nelder_mead(objective, run.x_min, nm_restart);
    result.n_evals += next.n_evals;
    if (config.record_trace)
      result.trace->insert(result.trace->end(), next.trace.begin(), next.trace.end());
    ++restarts_used;
    const bool improved = next.f_min < f_before - nm.f_tol;
    run = std::move(next);
    if (!improved) break;  // best point is stable; stop restarting early
  }

  result.restarts_used = restarts_used;
  result.converged = run.converged;
  result.theta_hat = UnconstrainedParams{embed(run.x_min)};
  result.params_hat = unpack(spec, result.theta_hat);
  result.loglik = -run.f_min;

  if (config.compute_se) {
    const auto se_free = numerical_hessian_se(objective, run.x_min, config.hessian_step);
    if (se_free) {
      Eigen::VectorXd se_full =
          Eigen::VectorXd::Constant(layout.dim(), std::numeric_limits<double>::quiet_NaN());
      for (std::size_t i = 0; i < free_idx.size(); ++i) se_full[free_idx[i]] = (*se_free)[i];
      result.se = se_full;
    }
  }
  return result;
}

std::optional<Eigen::VectorXd> numerical_hessian_se(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& theta_hat, double step) {
  const int dim = static_cast<int>(theta_hat.size());
  Eigen::VectorXd h(dim);
  for (int i = 0; i < dim; ++i) h[i] = step * std::max(1.0, std::abs(theta_hat[i]));

  const double f0 = objective(theta_hat);
  if (!std::isfinite(f0)) return std::nullopt;
  Eigen::MatrixXd hessian(dim, dim);
  Eigen::VectorXd x = theta_hat;
  for (int i = 0; i < dim; ++i) {
    x = theta_hat;
    x[i] = theta_hat[i] + h[i];
    const double f_plus = objective(x);
    x[i] = theta_hat[i] - h[i];
    const double f_minus = objective(x);
    hessian(i, i) = (f_plus - 2.0 * f0 + f_minus) / (h[i] * h[i]);
    for (int j = i + 1; j < dim; ++j) {
      x = theta_hat;
      x[i] += h[i];
      x[j] += h[j];
      const double fpp = objective(x);
      x[j] -= 2.0 * h[j];
      const double fpm = objective(x);
      x[i] -= 2.0 * h[i];
      const double fmm = objective(x);
      x[j] += 2.0 * h[j];
      const double fmp = objective(x);
      hessian(i, j) = hessian(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
    }
  }
  if (!hessian.allFinite()) return std::nullopt;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(hessian);
  if (!lu.isInvertible()) return std::nullopt;
  const Eigen::MatrixXd inverse = lu.inverse();
  Eigen::VectorXd se(dim);
  for (int i = 0; i < dim; ++i) {
    const double var = inverse(i, i);
    if (!(var > 0.0) || !std::isfinite(var)) return std::nullopt;
    se[i] = std::sqrt(var);
  }
  return se;
}

}  // namespace driftrt
