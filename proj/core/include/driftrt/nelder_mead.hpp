#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace driftrt {

struct NelderMeadConfig {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  double x_tol = 1e-6;          // simplex diameter (max-norm to best vertex)
  double f_tol = 1e-8;          // worst-minus-best objective spread
  std::int64_t max_evals = 0;   // 0 = 20000 * dimension
  double initial_step_rel = 0.1;
  double initial_step_min = 0.05;
  bool record_trace = false;
};

struct NelderMeadResult {
  Eigen::VectorXd x_min;
  double f_min = 0.0;
  std::int64_t n_evals = 0;
  std::int64_t iterations = 0;
  std::int64_t nonfinite_evals = 0;
  bool converged = false;
  std::vector<std::pair<double, double>> trace;  // (best f, simplex diameter) per iteration
};

/// Downhill simplex minimization (Nelder & Mead, 1965) with the standard
/// reflection / expansion / contraction / shrink moves, vertex ties broken
/// by index. A non-finite objective value is treated as +infinity (the
/// vertex is rejected) and counted; a non-finite value at x0 is an error.
/// Deterministic: identical (objective, x0, config) give identical results.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadConfig& config = {});

}  // namespace driftrt
