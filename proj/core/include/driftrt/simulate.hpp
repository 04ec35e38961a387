#pragma once

#include <cstdint>

#include "driftrt/model.hpp"
#include "driftrt/rng.hpp"

namespace driftrt {

/// Subject-level latent effects b1 (drift) and b2 (reaction-time location).
struct RandomEffects {
  Eigen::VectorXd b1;
  Eigen::VectorXd b2;
};

/// Cumulative latent levels X(t_i); row 0 is X(t_0) = 0, rows difference
/// back to the increments exactly.
struct LatentPath {
  Eigen::MatrixXd x;  // (n+1) x p
};

/// How cmd_simulate fills covariate designs: all-ones columns, or an
/// intercept column followed by independent standard normal columns.
enum class CovariateKind { kIntercept, kGaussian };

/// One draw (b1, b2) ~ MVN(0, Sigma_B) via the Cholesky factor applied to
/// standard normals. Throws ParameterError if Sigma_B is not PD.
RandomEffects draw_random_effects(const RandomEffectsCov& sigma_b, Rng& rng);

/// Simulates all cells of one subject. For each (i, j):
///   y_ij  = dt * (V1' beta1 + U1' b1) + e1,
///   r*_ij = (V2' beta2 + U2' b2) + e2,
/// with (e1, e2) standard bivariate normal with correlation rho; the same
/// pair drives both observables of a cell. Reaction times are generated for
/// every cell whether or not it crossed.
SubjectData simulate_subject(const ModelSpec& spec, const Parameters& params,
                             const SubjectCovariates& covariates, Rng& rng);

/// Prefix sums of the increments with a zero initial row.
LatentPath cumulative_path(const SubjectData& subject);

/// Simulates m subjects, each from its own substream of `seed`, so datasets
/// are a deterministic function of (spec, params, design, seed) and subject
/// k's data does not depend on m.
Dataset simulate_dataset(const ModelSpec& spec, const Parameters& params,
                         const CovariateDesign& design, std::uint64_t seed);

/// Builds a covariate design of the given kind (Gaussian columns drawn from
/// the design substream of `seed`).
CovariateDesign make_design(const ModelSpec& spec, CovariateKind kind, std::uint64_t seed);

}  // namespace driftrt
