#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "driftrt/model.hpp"

namespace driftrt {

/// Result of one brute-force validation check.
struct OracleReport {
  std::string name;
  double statistic = 0.0;  // computed discrepancy
  double threshold = 0.0;  // pass bound
  bool passed = false;     // statistic <= threshold
  std::int64_t n = 0;      // samples or grid size used
};

/// Monte-Carlo estimate of the marginal log-likelihood: per subject, the
/// sample mean of exp(subject_log_integrand) over n_samples draws of
/// (b1, b2) ~ MVN(0, Sigma_B), evaluated with log-sum-exp. Returns the
/// summed log estimate and its delta-method standard error. Draws come from
/// the oracle stream namespace, disjoint from simulator streams. With
/// q1 + q2 = 0 this equals the exact likelihood and the SE is 0.
std::pair<double, double> mc_log_likelihood(const Dataset& dataset, const Parameters& params,
                                            std::int64_t n_samples, std::uint64_t seed,
                                            int threads = 0);

/// Empirical conditional CDF of log R at each grid point: simulates
/// (Y, log R) pairs (means eta1/eta2, unit variances, correlation rho),
/// keeps those with Y < a1 or Y > a2, and counts. Throws NumericError when
/// fewer than 100 pairs survive the conditioning.
Eigen::VectorXd empirical_conditional_cdf(double eta1, double eta2, double a1, double a2,
                                          double rho, const Eigen::VectorXd& r_grid,
                                          std::int64_t n_samples, std::uint64_t seed);

/// 2-D Simpson integration of the standard bivariate normal density over
/// (-8, z1] x (-8, z2]. Deliberately shares nothing with
/// bivariate_normal_cdf beyond the scalar density. resolution is the
/// interval count per axis (>= 200; rounded up to even).
double integrate_bvn_rectangle(double z1, double z2, double rho, int resolution);

/// Phi(z) + Phi(-z) = 1 over a z grid, with an injectable CDF so fault
/// injection can be exercised. Defaults to the shipped normal_cdf.
OracleReport check_phi_symmetry(const std::function<double(double)>& cdf = {});

enum class CheckLevel { kQuick, kFull };

/// Runs the validation suite: `quick` covers the closed-form kernel
/// identities (a few seconds), `full` adds the Monte-Carlo comparisons.
std::vector<OracleReport> run_checks(CheckLevel level, int threads = 0);

}  // namespace driftrt
