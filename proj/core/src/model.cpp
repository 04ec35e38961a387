#include "driftrt/model.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "driftrt/errors.hpp"

namespace driftrt {

namespace {

// Range guards keeping unpack total on any finite input. Far outside any
// region a sane optimizer visits; they only matter for adversarial vectors.
constexpr double kMaxLogDiag = 230.0;    // L diagonal in [1e-100, 1e100]
constexpr double kMaxOffDiag = 1e100;
constexpr double kMaxLogGap = 700.0;
constexpr double kRhoCap = 1.0 - 1e-12;

void check_index_vector(const Eigen::VectorXi& idx, int q, const std::vector<int>& widths,
                        const char* name) {
  if (idx.size() != q) {
    throw ConfigError(std::string(name) + ": expected " + std::to_string(q) +
                      " indices, got " + std::to_string(idx.size()));
  }
  std::set<int> seen;
  for (int i = 0; i < idx.size(); ++i) {
    if (!seen.insert(idx[i]).second) {
      throw ConfigError(std::string(name) + ": duplicate index " + std::to_string(idx[i]));
    }
    for (std::size_t j = 0; j < widths.size(); ++j) {
      if (idx[i] < 0 || idx[i] >= widths[j]) {
        throw ConfigError(std::string(name) + ": index " + std::to_string(idx[i]) +
                          " out of range for outcome " + std::to_string(j) + " design width " +
                          std::to_string(widths[j]));
      }
    }
  }
}

bool is_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

}  // namespace

void validate_spec(const ModelSpec& spec) {
  if (spec.m < 0) throw ConfigError("model.m: must be >= 0");
  if (spec.n < 1) throw ConfigError("model.n: must be >= 1");
  if (spec.p < 1) throw ConfigError("model.p: must be >= 1");
  if (spec.q1 < 0) throw ConfigError("model.q1: must be >= 0");
  if (spec.q2 < 0) throw ConfigError("model.q2: must be >= 0");
  if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) throw ConfigError("model.dt: must be > 0");
  if (static_cast<int>(spec.d1.size()) != spec.p)
    throw ConfigError("model.d1: expected one entry per outcome");
  if (static_cast<int>(spec.d2.size()) != spec.p)
    throw ConfigError("model.d2: expected one entry per outcome");
  for (int j = 0; j < spec.p; ++j) {
    if (spec.d1[j] < 0) throw ConfigError("model.d1: negative width");
    if (spec.d2[j] < 0) throw ConfigError("model.d2: negative width");
    if (spec.q1 > 0 && spec.d1[j] < spec.q1)
      throw ConfigError("model.d1: outcome " + std::to_string(j) +
                        " has fewer V1 columns than q1 (U1 must be a sub-vector of V1)");
    if (spec.q2 > 0 && spec.d2[j] < spec.q2)
      throw ConfigError("model.d2: outcome " + std::to_string(j) +
                        " has fewer V2 columns than q2 (U2 must be a sub-vector of V2)");
  }
}

SubjectCovariates CovariateDesign::slice(int k) const {
  SubjectCovariates out;
  out.v1.reserve(v1.size());
  out.v2.reserve(v2.size());
  for (const auto& mat : v1) out.v1.push_back(mat.row(k).transpose());
  for (const auto& mat : v2) out.v2.push_back(mat.row(k).transpose());
  out.u1_index = u1_index;
  out.u2_index = u2_index;
  return out;
}

void validate_design(const ModelSpec& spec, const CovariateDesign& design) {
  if (static_cast<int>(design.v1.size()) != spec.p || static_cast<int>(design.v2.size()) != spec.p)
    throw ConfigError("design: expected one V matrix per outcome");
  for (int j = 0; j < spec.p; ++j) {
    if (design.v1[j].rows() != spec.m || design.v1[j].cols() != spec.d1[j])
      throw ConfigError("design.v1: outcome " + std::to_string(j) + " must be m x d1[j]");
    if (design.v2[j].rows() != spec.m || design.v2[j].cols() != spec.d2[j])
      throw ConfigError("design.v2: outcome " + std::to_string(j) + " must be m x d2[j]");
  }
  check_index_vector(design.u1_index, spec.q1, spec.d1, "design.u1_index");
  check_index_vector(design.u2_index, spec.q2, spec.d2, "design.u2_index");
}

Eigen::MatrixXd RandomEffectsCov::full() const {
  const int q1 = static_cast<int>(sigma1.rows());
  const int q2 = static_cast<int>(sigma2.rows());
  Eigen::MatrixXd out(q1 + q2, q1 + q2);
  out.topLeftCorner(q1, q1) = sigma1;
  out.topRightCorner(q1, q2) = sigma12;
  out.bottomLeftCorner(q2, q1) = sigma12.transpose();
  out.bottomRightCorner(q2, q2) = sigma2;
  return out;
}

RandomEffectsCov RandomEffectsCov::from_full(const Eigen::MatrixXd& sigma_b, int q1, int q2) {
  RandomEffectsCov out;
  out.sigma1 = sigma_b.topLeftCorner(q1, q1);
  out.sigma12 = sigma_b.topRightCorner(q1, q2);
  out.sigma2 = sigma_b.bottomRightCorner(q2, q2);
  return out;
}

void validate_params(const ModelSpec& spec, const Parameters& params) {
  if (static_cast<int>(params.beta1.size()) != spec.p)
    throw ParameterError("params.beta1: expected one vector per outcome");
  if (static_cast<int>(params.beta2.size()) != spec.p)
    throw ParameterError("params.beta2: expected one vector per outcome");
  for (int j = 0; j < spec.p; ++j) {
    if (params.beta1[j].size() != spec.d1[j])
      throw ParameterError("params.beta1: outcome " + std::to_string(j) + " length != d1[j]");
    if (params.beta2[j].size() != spec.d2[j])
      throw ParameterError("params.beta2: outcome " + std::to_string(j) + " length != d2[j]");
    if (!params.beta1[j].allFinite() || !params.beta2[j].allFinite())
      throw ParameterError("params.beta: non-finite entry");
  }
  if (!std::isfinite(params.a1) || !std::isfinite(params.a2))
    throw ParameterError("params.a1/a2: non-finite");
  if (!(params.a1 < params.a2)) throw ParameterError("params.a1: must satisfy a1 < a2");
  if (!(std::abs(params.rho) < 1.0)) throw ParameterError("params.rho: must satisfy |rho| < 1");
  if (params.sigma_b.sigma1.rows() != spec.q1 || params.sigma_b.sigma1.cols() != spec.q1 ||
      params.sigma_b.sigma2.rows() != spec.q2 || params.sigma_b.sigma2.cols() != spec.q2 ||
      params.sigma_b.sigma12.rows() != spec.q1 || params.sigma_b.sigma12.cols() != spec.q2)
    throw ParameterError("params.sigma_b: block dimensions do not match q1/q2");
  const int q = spec.q1 + spec.q2;
  if (q > 0) {
    const Eigen::MatrixXd full = params.sigma_b.full();
    if (!is_finite(full)) throw ParameterError("params.sigma_b: non-finite entry");
    if (!full.isApprox(full.transpose(), 1e-10))
      throw ParameterError("params.sigma_b: not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(full);
    if (llt.info() != Eigen::Success)
      throw ParameterError("params.sigma_b: not positive definite");
  }
}

int theta_dim(const ModelSpec& spec) { return ThetaLayout(spec).dim(); }

ThetaLayout::ThetaLayout(const ModelSpec& spec) {
  int off = 0;
  beta1_off_.resize(spec.p);
  beta2_off_.resize(spec.p);
  for (int j = 0; j < spec.p; ++j) {
    beta1_off_[j] = off;
    off += spec.d1[j];
  }
  for (int j = 0; j < spec.p; ++j) {
    beta2_off_[j] = off;
    off += spec.d2[j];
  }
  a1_idx_ = off;
  off += 2;  // a1, log(a2 - a1)
  chol_off_ = off;
  const int q = spec.q1 + spec.q2;
  chol_len_ = q * (q + 1) / 2;
  off += chol_len_;
  rho_idx_ = off;
  dim_ = off + 1;
}

std::vector<int> ThetaLayout::cross_block_indices(int q1, int q2) const {
  std::vector<int> out;
  for (int r = q1; r < q1 + q2; ++r)
    for (int c = 0; c < q1; ++c) out.push_back(chol_off_ + r * (r + 1) / 2 + c);
  return out;
}

namespace {

double predictor(const Eigen::VectorXd& v, const Eigen::VectorXd& beta,
                 const Eigen::VectorXi& u_index, const Eigen::VectorXd& b, const char* what) {
  if (v.size() != beta.size())
    throw ConfigError(std::string(what) + ": covariate/coefficient length mismatch");
  if (u_index.size() != b.size())
    throw ConfigError(std::string(what) + ": random-effect dimension mismatch");
  double out = v.dot(beta);
  for (int r = 0; r < u_index.size(); ++r) {
    if (u_index[r] < 0 || u_index[r] >= v.size())
      throw ConfigError(std::string(what) + ": U index out of range");
    out += v[u_index[r]] * b[r];
  }
  return out;
}

}  // namespace

double linear_predictor_1(const CovariateDesign& design, int j, int k,
                          const Eigen::VectorXd& beta1_j, const Eigen::VectorXd& b1) {
  return predictor(design.v1.at(j).row(k).transpose(), beta1_j, design.u1_index, b1,
                   "linear_predictor_1");
}

double linear_predictor_2(const CovariateDesign& design, int j, int k,
                          const Eigen::VectorXd& beta2_j, const Eigen::VectorXd& b2) {
  return predictor(design.v2.at(j).row(k).transpose(), beta2_j, design.u2_index, b2,
                   "linear_predictor_2");
}

double linear_predictor_1(const SubjectCovariates& cov, int j, const Eigen::VectorXd& beta1_j,
                          const Eigen::VectorXd& b1) {
  return predictor(cov.v1.at(j), beta1_j, cov.u1_index, b1, "linear_predictor_1");
}

double linear_predictor_2(const SubjectCovariates& cov, int j, const Eigen::VectorXd& beta2_j,
                          const Eigen::VectorXd& b2) {
  return predictor(cov.v2.at(j), beta2_j, cov.u2_index, b2, "linear_predictor_2");
}

UnconstrainedParams pack(const ModelSpec& spec, const Parameters& params) {
  validate_params(spec, params);
  const ThetaLayout layout(spec);
  Eigen::VectorXd theta(layout.dim());
  for (int j = 0; j < spec.p; ++j) {
    theta.segment(layout.beta1_offset(j), spec.d1[j]) = params.beta1[j];
    theta.segment(layout.beta2_offset(j), spec.d2[j]) = params.beta2[j];
  }
  theta[layout.a1_index()] = params.a1;
  theta[layout.log_gap_index()] = std::log(params.a2 - params.a1);

  const int q = spec.q1 + spec.q2;
  if (q > 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(params.sigma_b.full());
    if (llt.info() != Eigen::Success)
      throw ParameterError("pack: sigma_b Cholesky factorization failed");
    const Eigen::MatrixXd chol = llt.matrixL();
    int idx = layout.chol_offset();
    for (int r = 0; r < q; ++r)
      for (int c = 0; c <= r; ++c)
        theta[idx++] = (r == c) ? std::log(chol(r, c)) : chol(r, c);
  }
  theta[layout.rho_index()] = std::atanh(params.rho);
  return UnconstrainedParams{std::move(theta)};
}

Parameters unpack(const ModelSpec& spec, const UnconstrainedParams& packed) {
  const ThetaLayout layout(spec);
  const Eigen::VectorXd& theta = packed.theta;
  if (theta.size() != layout.dim())
    throw ParameterError("unpack: theta has length " + std::to_string(theta.size()) +
                         ", expected " + std::to_string(layout.dim()));
  if (!theta.allFinite()) throw ParameterError("unpack: non-finite theta entry");

  Parameters params;
  params.beta1.resize(spec.p);
  params.beta2.resize(spec.p);
  for (int j = 0; j < spec.p; ++j) {
    params.beta1[j] = theta.segment(layout.beta1_offset(j), spec.d1[j]);
    params.beta2[j] = theta.segment(layout.beta2_offset(j), spec.d2[j]);
  }
  params.a1 = theta[layout.a1_index()];
  const double gap = std::exp(std::min(theta[layout.log_gap_index()], kMaxLogGap));
  params.a2 = params.a1 + gap;
  if (!(params.a2 > params.a1))
    params.a2 = std::nextafter(params.a1, std::numeric_limits<double>::infinity());

  params.sigma_b =
      build_sigma_b(theta.segment(layout.chol_offset(), layout.chol_count()), spec.q1, spec.q2);
  params.rho = std::clamp(std::tanh(theta[layout.rho_index()]), -kRhoCap, kRhoCap);
  return params;
}

RandomEffectsCov build_sigma_b(const Eigen::VectorXd& chol_params, int q1, int q2) {
  const int q = q1 + q2;
  if (chol_params.size() != q * (q + 1) / 2)
    throw ConfigError("build_sigma_b: expected " + std::to_string(q * (q + 1) / 2) +
                      " entries, got " + std::to_string(chol_params.size()));
  if (!chol_params.allFinite()) throw ParameterError("build_sigma_b: non-finite entry");
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(q, q);
  int idx = 0;
  for (int r = 0; r < q; ++r) {
    for (int c = 0; c < r; ++c)
      chol(r, c) = std::clamp(chol_params[idx++], -kMaxOffDiag, kMaxOffDiag);
    chol(r, r) = std::exp(std::clamp(chol_params[idx++], -kMaxLogDiag, kMaxLogDiag));
  }
  return RandomEffectsCov::from_full(chol * chol.transpose(), q1, q2);
}

}  // namespace driftrt
