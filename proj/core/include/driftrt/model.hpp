#pragma once

#include <Eigen/Core>
#include <vector>

namespace driftrt {

/// Dimensions and grid of the joint increment / reaction-time model.
///
/// m subjects are observed at n equally spaced time points for p outcome
/// processes. Random effects b1 (dim q1) enter the increment drift, b2
/// (dim q2) the log reaction-time location. dt is the common time increment
/// multiplying the drift. d1[j] / d2[j] are the covariate counts of the
/// V1 / V2 designs for outcome j.
struct ModelSpec {
  int m = 0;
  int n = 1;
  int p = 1;
  int q1 = 0;
  int q2 = 0;
  double dt = 1.0;
  std::vector<int> d1;
  std::vector<int> d2;
};

/// Throws ConfigError unless the spec is internally consistent.
/// m == 0 is accepted (it denotes an empty dataset); fitting requires m >= 1.
void validate_spec(const ModelSpec& spec);

/// Per-subject view of the covariate design: the vectors V1_jk, V2_jk for
/// one k, plus the index maps selecting the U sub-vectors.
struct SubjectCovariates {
  std::vector<Eigen::VectorXd> v1;  // per outcome j, length d1[j]
  std::vector<Eigen::VectorXd> v2;  // per outcome j, length d2[j]
  Eigen::VectorXi u1_index;         // q1 column indices into each V1_j
  Eigen::VectorXi u2_index;         // q2 column indices into each V2_j
};

/// Full covariate design. v1[j] is an m x d1[j] matrix whose row k is V1_jk;
/// likewise v2[j]. U1/U2 are sub-vectors of V1/V2 selected by column index,
/// shared across outcomes.
struct CovariateDesign {
  std::vector<Eigen::MatrixXd> v1;
  std::vector<Eigen::MatrixXd> v2;
  Eigen::VectorXi u1_index;
  Eigen::VectorXi u2_index;

  SubjectCovariates slice(int k) const;
};

void validate_design(const ModelSpec& spec, const CovariateDesign& design);

/// Block covariance of the stacked random effects (b1, b2):
///   Sigma_B = [ sigma1   sigma12 ]
///             [ sigma12' sigma2  ]
struct RandomEffectsCov {
  Eigen::MatrixXd sigma1;   // q1 x q1
  Eigen::MatrixXd sigma12;  // q1 x q2
  Eigen::MatrixXd sigma2;   // q2 x q2

  int dim() const { return static_cast<int>(sigma1.rows() + sigma2.rows()); }
  Eigen::MatrixXd full() const;
  static RandomEffectsCov from_full(const Eigen::MatrixXd& sigma_b, int q1, int q2);
};

/// Model parameters. Residual covariances are pinned to the identity
/// (identifiability), so the only residual parameter is rho, the correlation
/// between the increment noise and the log reaction-time noise of the same
/// cell. rho = 0 recovers conditional independence given (b1, b2).
struct Parameters {
  std::vector<Eigen::VectorXd> beta1;  // per outcome j, length d1[j]
  std::vector<Eigen::VectorXd> beta2;  // per outcome j, length d2[j]
  double a1 = -1.0;                    // lower decision boundary
  double a2 = 1.0;                     // upper decision boundary, a1 < a2
  RandomEffectsCov sigma_b;
  double rho = 0.0;                    // |rho| < 1
};

void validate_params(const ModelSpec& spec, const Parameters& params);

/// Unconstrained image of Parameters used by the optimizer. Layout:
///   [beta1_0 .. beta1_{p-1} | beta2_0 .. beta2_{p-1} | a1 | log(a2-a1)
///    | log-Cholesky of Sigma_B (row-major lower triangle, log diagonal)
///    | atanh(rho)]
struct UnconstrainedParams {
  Eigen::VectorXd theta;
};

/// Number of entries of the unconstrained vector for this spec.
int theta_dim(const ModelSpec& spec);

/// Offsets into the unconstrained vector; layout authority for pack/unpack
/// and for the fit masks.
struct ThetaLayout {
  explicit ThetaLayout(const ModelSpec& spec);

  int beta1_offset(int j) const { return beta1_off_[j]; }
  int beta2_offset(int j) const { return beta2_off_[j]; }
  int a1_index() const { return a1_idx_; }
  int log_gap_index() const { return a1_idx_ + 1; }
  int chol_offset() const { return chol_off_; }
  int chol_count() const { return chol_len_; }
  int rho_index() const { return rho_idx_; }
  int dim() const { return dim_; }
  /// Indices of lower-factor entries in the (b2, b1) cross block; pinning
  /// them to zero forces Sigma12 = 0.
  std::vector<int> cross_block_indices(int q1, int q2) const;

 private:
  std::vector<int> beta1_off_, beta2_off_;
  int a1_idx_ = 0, chol_off_ = 0, chol_len_ = 0, rho_idx_ = 0, dim_ = 0;
};

/// V1_jk' beta1_j + U1_jk' b1 for subject k, outcome j.
double linear_predictor_1(const CovariateDesign& design, int j, int k,
                          const Eigen::VectorXd& beta1_j, const Eigen::VectorXd& b1);

/// V2_jk' beta2_j + U2_jk' b2.
double linear_predictor_2(const CovariateDesign& design, int j, int k,
                          const Eigen::VectorXd& beta2_j, const Eigen::VectorXd& b2);

/// Slice-based forms used by the simulator and the likelihood inner loop.
double linear_predictor_1(const SubjectCovariates& cov, int j,
                          const Eigen::VectorXd& beta1_j, const Eigen::VectorXd& b1);
double linear_predictor_2(const SubjectCovariates& cov, int j,
                          const Eigen::VectorXd& beta2_j, const Eigen::VectorXd& b2);

/// Maps valid Parameters to the unconstrained vector. Inverse of unpack.
UnconstrainedParams pack(const ModelSpec& spec, const Parameters& params);

/// Maps any finite vector back to valid Parameters (a1 < a2 strictly,
/// Sigma_B symmetric positive definite, |rho| < 1). Extreme entries are
/// range-guarded so the map stays total. Throws ParameterError on
/// non-finite entries or a length mismatch.
Parameters unpack(const ModelSpec& spec, const UnconstrainedParams& theta);

/// Builds Sigma_B = L L' from packed lower-triangular entries (row-major,
/// diagonal exp-transformed). Vector length must be q(q+1)/2, q = q1+q2.
RandomEffectsCov build_sigma_b(const Eigen::VectorXd& chol_params, int q1, int q2);

/// One subject's observables: n x p increments, n x p log reaction times,
/// and the crossing indicator y < a1 || y > a2 under the generating
/// parameters. Covariates are the subject's design slice.
struct SubjectData {
  Eigen::MatrixXd y;
  Eigen::MatrixXd r_star;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> crossed;
  SubjectCovariates covariates;
};

struct Dataset {
  ModelSpec spec;
  std::vector<SubjectData> subjects;
};

}  // namespace driftrt
