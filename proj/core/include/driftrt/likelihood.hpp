#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "driftrt/model.hpp"

namespace driftrt {

/// How the random effects are integrated out of the likelihood.
enum class IntegrationMode { kGaussHermite, kMonteCarlo };

/// One-dimensional Gauss-Hermite rule (physicists' convention, weight
/// exp(-x^2)) applied as a tensor product over `dim` random-effect
/// dimensions. Nodes are symmetric about zero; weights sum to sqrt(pi).
struct QuadratureRule {
  int order = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  int dim = 1;
};

/// Gauss-Hermite nodes and weights by Newton iteration on the orthonormal
/// Hermite recurrence; exact for polynomials of degree <= 2 order - 1.
/// Throws ConfigError unless 1 <= order <= 100.
QuadratureRule gh_rule(int order, int dim = 1);

/// Log of the conditional product over all cells of one subject at
/// random-effect point b = (b1, b2). A crossed cell contributes
///   log f(r*_ij | crossing, b2) + log P(crossing | b1)
/// and a non-crossed cell the complementary pair
///   log f(r*_ij | no crossing, b2) + log P(no crossing | b1),
/// i.e. the Joe regression is evaluated at the observed indicator value
/// (weighting every cell by the crossed-side factors regardless of its
/// indicator makes the boundary gap collapse to zero at the optimum, since
/// density * P(crossing) = phi(zr) P(crossing | r*) <= phi(zr) pointwise).
/// The conditional Y-mean is dt * (V1' beta1 + U1' b1). Cell terms are
/// accumulated in ascending value order, so any reordering of cells leaves
/// the sum bit-identical.
double subject_log_integrand(const ModelSpec& spec, const SubjectData& subject,
                             const Parameters& params, const Eigen::VectorXd& b);

struct LikelihoodOptions {
  int threads = 0;  // 0 = hardware concurrency
};

/// Marginal log-likelihood: for each subject, log of the Gauss-Hermite
/// tensor sum of exp(subject_log_integrand) over b = sqrt(2) L_B z with
/// normalized weights (the change of variables absorbs the MVN density of
/// the random effects); evaluated with log-sum-exp. Subject terms are
/// reduced in ascending value order, which makes the result independent of
/// subject order and thread count. The rule's tensor dimension must equal
/// q1 + q2; with q1 + q2 = 0 the integral degenerates to a plain sum.
double log_likelihood(const Dataset& dataset, const Parameters& params,
                      const QuadratureRule& rule, const LikelihoodOptions& options = {});

}  // namespace driftrt
