#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "driftrt/likelihood.hpp"
#include "driftrt/model.hpp"
#include "driftrt/nelder_mead.hpp"

namespace driftrt {

struct FitConfig {
  NelderMeadConfig nm;
  int restarts = 2;              // extra runs from the best point, re-inflated simplex
  std::uint64_t seed = 0;        // restart jitter stream
  int quad_order = 15;
  IntegrationMode mode = IntegrationMode::kGaussHermite;
  std::int64_t mc_samples = 100000;
  int threads = 0;
  bool estimate_rho = true;      // false pins rho at its starting value
  bool estimate_sigma12 = true;  // false pins the Sigma12 Cholesky block
  bool compute_se = false;
  bool record_trace = false;
  double hessian_step = 1e-4;
  std::optional<Parameters> init;  // overrides initial_guess when set
};

struct FitResult {
  Parameters params_hat;
  UnconstrainedParams theta_hat;
  double loglik = 0.0;
  std::int64_t n_evals = 0;
  bool converged = false;
  int restarts_used = 0;
  std::optional<Eigen::VectorXd> se;  // unconstrained scale; NaN where pinned
  std::optional<std::vector<std::pair<double, double>>> trace;
};

struct InitialGuess {
  Parameters params;
  bool rank_fallback = false;  // least squares hit a rank-deficient design
};

/// Moment/least-squares starting values: beta1 from regressing y on dt*V1
/// (pooled over subjects and times), beta2 from regressing r* on V2,
/// boundaries at the pooled 10th/90th percentiles of y, Sigma_B = 0.1 I,
/// rho = 0. Rank-deficient designs fall back to zero coefficients.
InitialGuess initial_guess(const Dataset& dataset);

/// Maximum likelihood via Nelder-Mead on the unconstrained parameter vector,
/// with the configured restarts from the best point. `converged` reflects the
/// final run.
FitResult fit(const Dataset& dataset, const FitConfig& config = {});

/// Standard errors from a central-difference Hessian of `objective`
/// (the negated log-likelihood) at theta_hat: sqrt of the diagonal of the
/// inverse. Returns nullopt when the Hessian cannot be inverted.
std::optional<Eigen::VectorXd> numerical_hessian_se(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& theta_hat, double step);

}  // namespace driftrt
