#include "driftrt/likelihood.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "driftrt/errors.hpp"
#include "driftrt/parallel.hpp"
#include "driftrt/probability.hpp"

namespace driftrt {

namespace {

constexpr double kPiQuarterInv = 0.751125544464942482244;  // pi^(-1/4)
constexpr double kLogPi = 1.144729885849400174143;
constexpr double kNewtonTol = 1e-14;

// Ascending-order accumulation: the sum of a multiset of doubles evaluated
// in a canonical order, so permutations of the inputs cannot change the
// result bit.
double sorted_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace

QuadratureRule gh_rule(int order, int dim) {
  if (order < 1 || order > 100)
    throw ConfigError("gh_rule: order must be in [1, 100], got " + std::to_string(order));
  if (dim < 0) throw ConfigError("gh_rule: dim must be >= 0");

  QuadratureRule rule;
  rule.order = order;
  rule.dim = dim;
  rule.nodes.resize(order);
  rule.weights.resize(order);

  // Newton iteration on the orthonormal Hermite recurrence
  //   h_{j}(x) = x sqrt(2/j) h_{j-1} - sqrt((j-1)/j) h_{j-2},
  // largest root first, with the classic asymptotic initial guesses.
  const int half = (order + 1) / 2;
  std::vector<double> roots(half), derivs(half);
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * order + 1.0) - 1.85575 * std::pow(2.0 * order + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(order, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * roots[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * roots[1];
    } else {
      z = 2.0 * z - roots[i - 2];
    }
    double deriv = 0.0;
    bool converged = false;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = kPiQuarterInv;
      double p2 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      deriv = std::sqrt(2.0 * order) * p2;
      const double step = p1 / deriv;
      z -= step;
      if (std::abs(step) <= kNewtonTol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw NumericError("gh_rule: Newton iteration failed for order " +
                                       std::to_string(order));
    if (i == half - 1 && order % 2 == 1) z = 0.0;  // middle root of odd orders
    roots[i] = z;
    derivs[i] = deriv;
  }
  for (int i = 0; i < half; ++i) {
    const double weight = 2.0 / (derivs[i] * derivs[i]);
    rule.nodes[order - 1 - i] = roots[i];
    rule.nodes[i] = -roots[i];
    rule.weights[order - 1 - i] = weight;
    rule.weights[i] = weight;
  }
  return rule;
}

double subject_log_integrand(const ModelSpec& spec, const SubjectData& subject,
                             const Parameters& params, const Eigen::VectorXd& b) {
  const int q = spec.q1 + spec.q2;
  if (b.size() != q)
    throw ConfigError("subject_log_integrand: b has length " + std::to_string(b.size()) +
                      ", expected q1+q2 = " + std::to_string(q));
  const Eigen::VectorXd b1 = b.head(spec.q1);
  const Eigen::VectorXd b2 = b.tail(spec.q2);

  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(spec.n) * spec.p * 2);
  for (int j = 0; j < spec.p; ++j) {
    const double mu = linear_predictor_1(subject.covariates, j, params.beta1[j], b1);
    const double eta2 = linear_predictor_2(subject.covariates, j, params.beta2[j], b2);
    try {
      const JoeKernel kernel(spec.dt * mu, eta2, params.a1, params.a2, params.rho);
      for (int i = 0; i < spec.n; ++i) {
        if (subject.crossed(i, j)) {
          terms.push_back(kernel.log_density(subject.r_star(i, j)));
          terms.push_back(kernel.log_p_event());
        } else {
          terms.push_back(kernel.log_density_complement(subject.r_star(i, j)));
          terms.push_back(kernel.log_p_inside());
        }
      }
    } catch (const NumericError& err) {
      throw NumericError("outcome " + std::to_string(j) + ": " + err.what());
    }
  }
  return sorted_sum(terms);
}

namespace {

// Tensor-product grid mapped through b = sqrt(2) L_B z. The Gauss-Hermite
// weight exp(-|z|^2) times the Jacobian reproduces the MVN(0, Sigma_B)
// density, so the normalized log-weights already include it.
struct QuadGrid {
  Eigen::MatrixXd points;       // N x q
  Eigen::VectorXd log_weights;  // N
};

QuadGrid build_grid(const QuadratureRule& rule, const RandomEffectsCov& sigma_b) {
  const int q = rule.dim;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_b.full());
  if (llt.info() != Eigen::Success)
    throw ParameterError("log_likelihood: sigma_b not positive definite");
  const Eigen::MatrixXd scaled_chol = std::sqrt(2.0) * Eigen::MatrixXd(llt.matrixL());

  Eigen::VectorXd log_w1(rule.order);
  for (int i = 0; i < rule.order; ++i) log_w1[i] = std::log(rule.weights[i]);

  std::size_t total = 1;
  for (int d = 0; d < q; ++d) total *= static_cast<std::size_t>(rule.order);

  QuadGrid grid;
  grid.points.resize(static_cast<Eigen::Index>(total), q);
  grid.log_weights.resize(static_cast<Eigen::Index>(total));
  Eigen::VectorXd z(q);
  std::vector<int> digit(q, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    double lw = -0.5 * q * kLogPi;
    for (int d = 0; d < q; ++d) {
      z[d] = rule.nodes[digit[d]];
      lw += log_w1[digit[d]];
    }
    grid.points.row(static_cast<Eigen::Index>(idx)) = (scaled_chol * z).transpose();
    grid.log_weights[static_cast<Eigen::Index>(idx)] = lw;
    for (int d = q - 1; d >= 0; --d) {  // lexicographic increment
      if (++digit[d] < rule.order) break;
      digit[d] = 0;
    }
  }
  return grid;
}

double logsumexp_fixed_order(const std::vector<double>& values) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (double v : values) vmax = std::max(vmax, v);
  if (!std::isfinite(vmax)) return vmax;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - vmax);
  return vmax + std::log(sum);
}

}  // namespace

double log_likelihood(const Dataset& dataset, const Parameters& params,
                      const QuadratureRule& rule, const LikelihoodOptions& options) {
  const ModelSpec& spec = dataset.spec;
  validate_params(spec, params);
  if (static_cast<int>(dataset.subjects.size()) != spec.m)
    throw ConfigError("log_likelihood: dataset holds " +
                      std::to_string(dataset.subjects.size()) + " subjects, spec.m = " +
                      std::to_string(spec.m));
  const int q = spec.q1 + spec.q2;
  if (spec.m == 0) return 0.0;
  for (int k = 0; k < spec.m; ++k) {
    const SubjectData& subject = dataset.subjects[k];
    if (subject.y.rows() != spec.n || subject.y.cols() != spec.p ||
        subject.r_star.rows() != spec.n || subject.r_star.cols() != spec.p)
      throw ConfigError("log_likelihood: subject " + std::to_string(k) +
                        " data is not n x p");
  }

  std::vector<double> per_subject(spec.m);
  if (q == 0) {
    parallel_for(spec.m, options.threads, [&](int k) {
      try {
        per_subject[k] =
            subject_log_integrand(spec, dataset.subjects[k], params, Eigen::VectorXd(0));
      } catch (const NumericError& err) {
        throw NumericError("subject " + std::to_string(k) + ", " + err.what());
      }
    });
  } else {
    if (rule.dim != q)
      throw ConfigError("log_likelihood: rule dimension " + std::to_string(rule.dim) +
                        " != q1+q2 = " + std::to_string(q));
    if (q > 4)
      throw ConfigError(
          "log_likelihood: tensor Gauss-Hermite is capped at q1+q2 <= 4; use the "
          "monte-carlo integration mode");
    const QuadGrid grid = build_grid(rule, params.sigma_b);
    const auto total = grid.points.rows();
    parallel_for(spec.m, options.threads, [&](int k) {
      try {
        std::vector<double> values(static_cast<std::size_t>(total));
        for (Eigen::Index idx = 0; idx < total; ++idx) {
          values[static_cast<std::size_t>(idx)] =
              grid.log_weights[idx] + subject_log_integrand(spec, dataset.subjects[k], params,
                                                            grid.points.row(idx).transpose());
        }
        per_subject[k] = logsumexp_fixed_order(values);
      } catch (const NumericError& err) {
        throw NumericError("subject " + std::to_string(k) + ", " + err.what());
      }
    });
  }

  for (int k = 0; k < spec.m; ++k) {
    if (!std::isfinite(per_subject[k]))
      throw NumericError("log_likelihood: non-finite contribution from subject " +
                         std::to_string(k));
  }
  return sorted_sum(per_subject);
}

}  // namespace driftrt
