#include "driftrt/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "driftrt/errors.hpp"

namespace driftrt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluator {
  const std::function<double(const Eigen::VectorXd&)>& objective;
  std::int64_t n_evals = 0;
  std::int64_t nonfinite = 0;

  double operator()(const Eigen::VectorXd& x) {
    ++n_evals;
    const double f = objective(x);
    if (std::isfinite(f)) return f;
    ++nonfinite;
    return kInf;
  }
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadConfig& config) {
  const int dim = static_cast<int>(x0.size());
  if (dim < 1) throw ConfigError("nelder_mead: x0 must have at least one coordinate");
  const std::int64_t max_evals =
      config.max_evals > 0 ? config.max_evals : static_cast<std::int64_t>(20000) * dim;

  Evaluator eval{objective};
  const double f0 = eval(x0);
  if (!std::isfinite(f0))
    throw NumericError("nelder_mead: objective is not finite at the starting point");

  // Axis-aligned initial simplex.
  std::vector<Eigen::VectorXd> x(dim + 1, x0);
  std::vector<double> f(dim + 1);
  f[0] = f0;
  for (int i = 0; i < dim; ++i) {
    const double step =
        std::max(config.initial_step_min, config.initial_step_rel * std::abs(x0[i]));
    x[i + 1][i] += step;
    f[i + 1] = eval(x[i + 1]);
  }

  // order[] ranks vertices by objective; stable sort breaks ties by index.
  std::vector<int> order(dim + 1);
  std::iota(order.begin(), order.end(), 0);
  auto rank = [&] {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
  };

  NelderMeadResult result;
  Eigen::VectorXd best_x = x0;
  double best_f = f0;
  auto note_best = [&](const Eigen::VectorXd& xi, double fi) {
    if (fi < best_f) {
      best_f = fi;
      best_x = xi;
    }
  };
  for (int i = 1; i <= dim; ++i) note_best(x[i], f[i]);

  Eigen::VectorXd centroid(dim), reflected(dim), expanded(dim), contracted(dim);
  bool converged = false;
  while (true) {
    rank();
    const int lo = order[0];
    const int hi = order[dim];
    const int second_hi = order[dim - 1];

    double diameter = 0.0;
    for (int i = 0; i <= dim; ++i)
      diameter = std::max(diameter, (x[i] - x[lo]).cwiseAbs().maxCoeff());
    const double spread = f[hi] - f[lo];
    if (config.record_trace) result.trace.emplace_back(f[lo], diameter);

    if (diameter <= config.x_tol && spread <= config.f_tol) {
      converged = true;
      break;
    }
    if (eval.n_evals >= max_evals) break;

    centroid.setZero();
    for (int i = 0; i <= dim; ++i)
      if (i != hi) centroid += x[i];
    centroid /= dim;

    reflected = centroid + config.reflection * (centroid - x[hi]);
    const double f_reflected = eval(reflected);
    note_best(reflected, f_reflected);

    if (f_reflected < f[lo]) {
      expanded = centroid + config.expansion * (reflected - centroid);
      const double f_expanded = eval(expanded);
      note_best(expanded, f_expanded);
      if (f_expanded < f_reflected) {
        x[hi] = expanded;
        f[hi] = f_expanded;
      } else {
        x[hi] = reflected;
        f[hi] = f_reflected;
      }
    } else if (f_reflected < f[second_hi]) {
      x[hi] = reflected;
      f[hi] = f_reflected;
    } else {
      const bool outside = f_reflected < f[hi];
      if (outside) {
        contracted = centroid + config.contraction * (reflected - centroid);
      } else {
        contracted = centroid - config.contraction * (centroid - x[hi]);
      }
      const double f_contracted = eval(contracted);
      note_best(contracted, f_contracted);
      const double accept_bound = outside ? f_reflected : f[hi];
      if (f_contracted <= accept_bound) {
        x[hi] = contracted;
        f[hi] = f_contracted;
      } else {
        // Shrink every vertex toward the best one.
        for (int i = 0; i <= dim; ++i) {
          if (i == lo) continue;
          x[i] = x[lo] + config.shrink * (x[i] - x[lo]);
          f[i] = eval(x[i]);
          note_best(x[i], f[i]);
        }
      }
    }
    ++result.iterations;
  }

  result.x_min = best_x;
  result.f_min = best_f;
  result.n_evals = eval.n_evals;
  result.nonfinite_evals = eval.nonfinite;
  result.converged = converged;
  return result;
}

}  // namespace driftrt
