#include "driftrt/probability.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "driftrt/errors.hpp"

namespace driftrt {

namespace {

constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;  // log sqrt(2 pi)
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kProbFloor = 1e-12;
constexpr double kOmega11Floor = 1e-24;

std::atomic<std::uint64_t> clamp_events{0};

double clamp_tail(double prob) {
  if (prob < kProbFloor) {
    clamp_events.fetch_add(1, std::memory_order_relaxed);
    return kProbFloor;
  }
  if (prob > 1.0 - kProbFloor) {
    clamp_events.fetch_add(1, std::memory_order_relaxed);
    return 1.0 - kProbFloor;
  }
  return prob;
}

// Gauss-Legendre abscissae/weights used by the bivariate normal quadrature
// (6, 12 and 20 points, stored as symmetric half-rules).
constexpr double kGlX6[3] = {0.9324695142031521, 0.6612093864662645, 0.2386191860831969};
constexpr double kGlW6[3] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910};
constexpr double kGlX12[6] = {0.9815606342467192, 0.9041172563704749, 0.7699026741943047,
                              0.5873179542866175, 0.3678314989981802, 0.1252334085114689};
constexpr double kGlW12[6] = {0.04717533638651183, 0.1069393259953184, 0.1600783285433462,
                              0.2031674267230659,  0.2334925365383548, 0.2491470458134028};
constexpr double kGlX20[10] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                               0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                               0.5108670019508271, 0.3737060887154195, 0.2277858511416451,
                               0.07652652113349733};
constexpr double kGlW20[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410907,
                               0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                               0.1316886384491766,  0.1420961093183820,  0.1491729864726037,
                               0.1527533871307258};

// P(X > h, Y > k) for standard bivariate normal variables with correlation r.
// Port of the BVND algorithm of Drezner & Wesolowsky (1990) as improved by
// Genz (2004): Gauss-Legendre quadrature over the tetrachoric integral for
// |r| < 0.925, and the asymptotic-expansion form near |r| = 1.
double bvn_upper(double h, double k, double r) {
  const double* gx;
  const double* gw;
  int half;
  const double ar = std::abs(r);
  if (ar < 0.3) {
    gx = kGlX6;
    gw = kGlW6;
    half = 3;
  } else if (ar < 0.75) {
    gx = kGlX12;
    gw = kGlW12;
    half = 6;
  } else {
    gx = kGlX20;
    gw = kGlW20;
    half = 10;
  }

  double hk = h * k;
  double bvn = 0.0;
  if (ar < 0.925) {
    if (ar > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < half; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * gx[i] + 1.0) / 2.0);
          bvn += gw[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn *= asr / (2.0 * kTwoPi);
    }
    bvn += normal_cdf(-h) * normal_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * normal_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < 10; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double x = a * (is * kGlX20[i] + 1.0);
          const double xs = x * x;
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0) {
            bvn += a * kGlW20[i] * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
          }
        }
      }
      bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
      bvn += normal_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += normal_cdf(k) - normal_cdf(h);
    }
  }
  return bvn;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z * 0.7071067811865475244008443621048); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double bivariate_normal_cdf(double z1, double z2, double rho) {
  if (!(std::abs(rho) < 1.0))
    throw ParameterError("bivariate_normal_cdf: |rho| must be < 1, got " + std::to_string(rho));
  if (rho == 0.0) return normal_cdf(z1) * normal_cdf(z2);
  return std::clamp(bvn_upper(-z1, -z2, rho), 0.0, 1.0);
}

CrossingProbs crossing_probs(double a1, double a2, double eta1, double sd) {
  if (!(sd > 0.0) || !std::isfinite(sd))
    throw ParameterError("crossing_probs: sd must be > 0, got " + std::to_string(sd));
  if (!(a1 < a2)) throw ParameterError("crossing_probs: requires a1 < a2");
  CrossingProbs cp;
  cp.m1 = (a1 - eta1) / sd;
  cp.m2 = (a2 - eta1) / sd;
  cp.p_low = clamp_tail(normal_cdf(cp.m1));
  cp.p_high = clamp_tail(normal_cdf(-cp.m2));
  cp.p_event = cp.p_low + cp.p_high;
  // Interval mass, differenced on the accurate tail side.
  const double inside = cp.m1 + cp.m2 > 0.0 ? normal_cdf(-cp.m1) - normal_cdf(-cp.m2)
                                            : normal_cdf(cp.m2) - normal_cdf(cp.m1);
  cp.p_inside = clamp_tail(inside);
  return cp;
}

double omega11(const CrossingProbs& cp) {
  return cp.p_low + cp.p_high - cp.p_low * cp.p_low - cp.p_high * cp.p_high -
         2.0 * cp.p_low * cp.p_high;
}

double omega21(double r_star, double eta1, double eta2, double a1, double a2, double rho) {
  if (rho == 0.0) return 0.0;  // the joint probability factorizes
  const double zr = r_star - eta2;
  const double z_low = a1 - eta1;
  const double z_high = a2 - eta1;
  const double p_r = normal_cdf(zr);
  const double joint = bivariate_normal_cdf(zr, z_low, rho) +
                       (p_r - bivariate_normal_cdf(zr, z_high, rho));
  const double p_event = normal_cdf(z_low) + (1.0 - normal_cdf(z_high));
  return joint - p_r * p_event;
}

JoeKernel::JoeKernel(double eta1, double eta2, double a1, double a2, double rho)
    : eta1_(eta1), eta2_(eta2), a1_(a1), a2_(a2), rho_(rho) {
  if (!(std::abs(rho) < 1.0))
    throw ParameterError("JoeKernel: |rho| must be < 1, got " + std::to_string(rho));
  cond_sd_ = std::sqrt((1.0 - rho) * (1.0 + rho));
  cp_ = crossing_probs(a1, a2, eta1, 1.0);
  w11_ = omega11(cp_);
  if (!(w11_ >= kOmega11Floor))
    throw NumericError("degenerate conditioning: omega11 = " + std::to_string(w11_) +
                       " (crossing event has probability 0 or 1)");
  one_minus_p_ = 1.0 - cp_.p_event;
  log_p_event_ = std::log(cp_.p_event);
  log_p_inside_ = std::log(cp_.p_inside);
}

double JoeKernel::log_density(double r_star) const {
  const double zr = r_star - eta2_;
  const double log_phi = -0.5 * zr * zr - kLogSqrt2Pi;
  if (rho_ == 0.0) return log_phi;  // correction term vanishes identically
  const CrossingProbs cond = crossing_probs(a1_, a2_, eta1_ + rho_ * zr, cond_sd_);
  const double correction = 1.0 + (cond.p_event - cp_.p_event) * one_minus_p_ / w11_;
  return log_phi + std::log(std::max(correction, 1e-300));
}

double JoeKernel::log_density_complement(double r_star) const {
  const double zr = r_star - eta2_;
  const double log_phi = -0.5 * zr * zr - kLogSqrt2Pi;
  if (rho_ == 0.0) return log_phi;
  const CrossingProbs cond = crossing_probs(a1_, a2_, eta1_ + rho_ * zr, cond_sd_);
  // Joe regression at indicator value 0: correction (pc - p)(0 - p)/omega11.
  const double correction = 1.0 - (cond.p_event - cp_.p_event) * cp_.p_event / w11_;
  return log_phi + std::log(std::max(correction, 1e-300));
}

double JoeKernel::density(double r_star) const { return std::exp(log_density(r_star)); }

double JoeKernel::cdf(double r_star) const {
  const double zr = r_star - eta2_;
  const double w21 = omega21(r_star, eta1_, eta2_, a1_, a2_, rho_);
  return std::clamp(normal_cdf(zr) + w21 * one_minus_p_ / w11_, 0.0, 1.0);
}

double joe_conditional_cdf(double r_star, double eta1, double eta2, double a1, double a2,
                           double rho) {
  return JoeKernel(eta1, eta2, a1, a2, rho).cdf(r_star);
}

double joe_conditional_density(double r_star, double eta1, double eta2, double a1, double a2,
                               double rho) {
  return JoeKernel(eta1, eta2, a1, a2, rho).density(r_star);
}

double joe_conditional_log_density(double r_star, double eta1, double eta2, double a1, double a2,
                                   double rho) {
  return JoeKernel(eta1, eta2, a1, a2, rho).log_density(r_star);
}

double mvn_log_density(const Eigen::VectorXd& b, const RandomEffectsCov& sigma_b) {
  const int q = sigma_b.dim();
  if (b.size() != q) throw ParameterError("mvn_density: b has wrong length");
  if (q == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_b.full());
  if (llt.info() != Eigen::Success)
    throw ParameterError("mvn_density: sigma_b not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();
  double log_det_half = 0.0;
  for (int i = 0; i < q; ++i) log_det_half += std::log(chol(i, i));
  const Eigen::VectorXd unit = chol.triangularView<Eigen::Lower>().solve(b);
  return -0.5 * unit.squaredNorm() - log_det_half - q * kLogSqrt2Pi;
}

double mvn_density(const Eigen::VectorXd& b, const RandomEffectsCov& sigma_b) {
  return std::exp(mvn_log_density(b, sigma_b));
}

std::uint64_t clamp_event_count() { return clamp_events.load(std::memory_order_relaxed); }

void reset_clamp_events() { clamp_events.store(0, std::memory_order_relaxed); }

}  // namespace driftrt
