#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "driftrt/model.hpp"

namespace driftrt {

/// Standard normal CDF, absolute error below 1e-14 (erfc-based).
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

/// P(Z1 <= z1, Z2 <= z2) for a standard bivariate normal pair with
/// correlation rho. Drezner-Wesolowsky / Genz quadrature algorithm,
/// absolute error below 5e-16 (well inside the documented 1e-10 budget).
/// Throws ParameterError if |rho| >= 1.
double bivariate_normal_cdf(double z1, double z2, double rho);

/// Crossing probabilities of one cell: standardized boundary distances
/// m1 = (a1 - eta1)/sd, m2 = (a2 - eta1)/sd and the tail masses
/// p_low = Phi(m1), p_high = 1 - Phi(m2), p_event = p_low + p_high.
/// p_inside is the complementary interval mass P(a1 <= Y <= a2), evaluated
/// on whichever tail side is accurate. p_low, p_high and p_inside are
/// clamped into [1e-12, 1 - 1e-12] before any downstream division; each
/// clamp increments the diagnostics counter.
struct CrossingProbs {
  double m1 = 0.0;
  double m2 = 0.0;
  double p_low = 0.0;
  double p_high = 0.0;
  double p_event = 0.0;
  double p_inside = 0.0;
};

CrossingProbs crossing_probs(double a1, double a2, double eta1, double sd);

/// Variance of the crossing indicator, evaluated as
/// p_low + p_high - p_low^2 - p_high^2 - 2 p_low p_high
/// (algebraically p_event (1 - p_event)).
double omega11(const CrossingProbs& cp);

/// Covariance between the response indicator I(log R <= r*) and the crossing
/// indicator: P(log R <= r*, Y < a1 or Y > a2) - P(log R <= r*) p_event,
/// for (Y, log R) bivariate normal with means (eta1, eta2), unit variances
/// and correlation rho. Exactly zero when rho == 0.
double omega21(double r_star, double eta1, double eta2, double a1, double a2, double rho);

/// Joe-approximation of the conditional CDF
/// P(log R <= r* | Y < a1 or Y > a2):
///   Phi(r* - eta2) + omega21 * (1 - p_event) / omega11,
/// clamped into [0, 1]. Throws NumericError when omega11 < 1e-24
/// (degenerate conditioning).
double joe_conditional_cdf(double r_star, double eta1, double eta2, double a1, double a2,
                           double rho);

/// d/dr* of joe_conditional_cdf:
///   phi(r* - eta2) * [1 + (P(event | log R = r*) - p_event)(1 - p_event)/omega11],
/// where the conditional crossing probability uses Y | log R = r* with mean
/// eta1 + rho (r* - eta2) and standard deviation sqrt(1 - rho^2).
/// Nonnegative; integrates to one in r*.
double joe_conditional_density(double r_star, double eta1, double eta2, double a1, double a2,
                               double rho);

/// log of joe_conditional_density, computed without underflow in the
/// Gaussian factor. This is what the likelihood accumulates.
double joe_conditional_log_density(double r_star, double eta1, double eta2, double a1, double a2,
                                   double rho);

/// Hot-path kernel: fixes (eta1, eta2, a1, a2, rho) once per (outcome,
/// quadrature point) and evaluates per-cell quantities for each r*.
/// Construction throws NumericError on degenerate conditioning.
///
/// Joe's regression form covers both values of the crossing indicator:
///   E[I(log R <= r*) | I_event = e] ~ Phi(zr) + Omega21 (e - p_event)/Omega11,
/// so next to the crossed-cell density (e = 1, the conditional density
/// above) the kernel also provides the complementary density given no
/// crossing (e = 0), which works out to phi(zr) (1 - pc)/(1 - p_event).
/// The two mix back to the marginal: p f_1(r) + (1-p) f_0(r) = phi(zr).
class JoeKernel {
 public:
  JoeKernel(double eta1, double eta2, double a1, double a2, double rho);

  double log_density(double r_star) const;
  double density(double r_star) const;
  /// log density of r* given the cell did NOT cross.
  double log_density_complement(double r_star) const;
  double cdf(double r_star) const;
  double log_p_event() const { return log_p_event_; }
  double log_p_inside() const { return log_p_inside_; }
  const CrossingProbs& crossing() const { return cp_; }

 private:
  double eta1_, eta2_, a1_, a2_, rho_;
  double cond_sd_;  // sqrt(1 - rho^2)
  CrossingProbs cp_;
  double w11_;
  double one_minus_p_;
  double log_p_event_;
  double log_p_inside_;
};

/// Multivariate normal density at b, mean zero, covariance Sigma_B.
double mvn_density(const Eigen::VectorXd& b, const RandomEffectsCov& sigma_b);
double mvn_log_density(const Eigen::VectorXd& b, const RandomEffectsCov& sigma_b);

/// Number of tail clamps performed by crossing_probs since the last reset.
std::uint64_t clamp_event_count();
void reset_clamp_events();

}  // namespace driftrt
