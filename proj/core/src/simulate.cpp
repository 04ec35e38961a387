#include "driftrt/simulate.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "driftrt/errors.hpp"

namespace driftrt {

RandomEffects draw_random_effects(const RandomEffectsCov& sigma_b, Rng& rng) {
  const int q1 = static_cast<int>(sigma_b.sigma1.rows());
  const int q2 = static_cast<int>(sigma_b.sigma2.rows());
  const int q = q1 + q2;
  RandomEffects out;
  out.b1.resize(q1);
  out.b2.resize(q2);
  if (q == 0) return out;

  Eigen::LLT<Eigen::MatrixXd> llt(sigma_b.full());
  if (llt.info() != Eigen::Success)
    throw ParameterError("draw_random_effects: sigma_b not positive definite");
  Eigen::VectorXd z(q);
  for (int i = 0; i < q; ++i) z[i] = rng.normal();
  const Eigen::VectorXd b = llt.matrixL() * z;
  out.b1 = b.head(q1);
  out.b2 = b.tail(q2);
  return out;
}

SubjectData simulate_subject(const ModelSpec& spec, const Parameters& params,
                             const SubjectCovariates& covariates, Rng& rng) {
  const RandomEffects effects = draw_random_effects(params.sigma_b, rng);
  const double rho = params.rho;
  const double resid_sd = std::sqrt((1.0 - rho) * (1.0 + rho));

  SubjectData subject;
  subject.covariates = covariates;
  subject.y.resize(spec.n, spec.p);
  subject.r_star.resize(spec.n, spec.p);
  subject.crossed.resize(spec.n, spec.p);

  for (int j = 0; j < spec.p; ++j) {
    const double mu = linear_predictor_1(covariates, j, params.beta1[j], effects.b1);
    const double eta2 = linear_predictor_2(covariates, j, params.beta2[j], effects.b2);
    for (int i = 0; i < spec.n; ++i) {
      const double e1 = rng.normal();
      const double e2 = rho * e1 + resid_sd * rng.normal();
      const double y = spec.dt * mu + e1;
      subject.y(i, j) = y;
      subject.r_star(i, j) = eta2 + e2;
      subject.crossed(i, j) = (y < params.a1) || (y > params.a2);
    }
  }
  return subject;
}

LatentPath cumulative_path(const SubjectData& subject) {
  const auto n = subject.y.rows();
  const auto p = subject.y.cols();
  LatentPath path;
  path.x = Eigen::MatrixXd::Zero(n + 1, p);
  for (Eigen::Index i = 0; i < n; ++i) path.x.row(i + 1) = path.x.row(i) + subject.y.row(i);
  return path;
}

Dataset simulate_dataset(const ModelSpec& spec, const Parameters& params,
                         const CovariateDesign& design, std::uint64_t seed) {
  validate_spec(spec);
  validate_params(spec, params);
  validate_design(spec, design);

  Dataset dataset;
  dataset.spec = spec;
  dataset.subjects.reserve(spec.m);
  for (int k = 0; k < spec.m; ++k) {
    Rng rng = Rng::substream(seed, stream::kSimulatorSubject, static_cast<std::uint64_t>(k));
    dataset.subjects.push_back(simulate_subject(spec, params, design.slice(k), rng));
  }
  return dataset;
}

CovariateDesign make_design(const ModelSpec& spec, CovariateKind kind, std::uint64_t seed) {
  CovariateDesign design;
  design.v1.resize(spec.p);
  design.v2.resize(spec.p);
  Rng rng = Rng::substream(seed, stream::kCovariateDesign, 0);
  auto fill = [&](Eigen::MatrixXd& mat, int width) {
    mat.resize(spec.m, width);
    if (kind == CovariateKind::kIntercept) {
      mat.setOnes();
      return;
    }
    // Gaussian design: intercept column, then standard normal columns.
    for (int k = 0; k < spec.m; ++k)
      for (int c = 0; c < width; ++c) mat(k, c) = (c == 0) ? 1.0 : rng.normal();
  };
  for (int j = 0; j < spec.p; ++j) {
    fill(design.v1[j], spec.d1[j]);
    fill(design.v2[j], spec.d2[j]);
  }
  design.u1_index.resize(spec.q1);
  for (int r = 0; r < spec.q1; ++r) design.u1_index[r] = r;
  design.u2_index.resize(spec.q2);
  for (int r = 0; r < spec.q2; ++r) design.u2_index[r] = r;
  return design;
}

}  // namespace driftrt
