#include "driftrt/oracle.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "driftrt/errors.hpp"
#include "driftrt/likelihood.hpp"
#include "driftrt/parallel.hpp"
#include "driftrt/probability.hpp"
#include "driftrt/rng.hpp"
#include "driftrt/simulate.hpp"

namespace driftrt {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double bvn_density(double x, double y, double rho) {
  const double det = (1.0 - rho) * (1.0 + rho);
  const double quad = (x * x - 2.0 * rho * x * y + y * y) / (2.0 * det);
  return std::exp(-quad) / (kTwoPi * std::sqrt(det));
}

// Composite 1-D Simpson over [lo, hi] with an even interval count.
double simpson_1d(const std::function<double(double)>& f, double lo, double hi, int intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (hi - lo) / intervals;
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

}  // namespace

std::pair<double, double> mc_log_likelihood(const Dataset& dataset, const Parameters& params,
                                            std::int64_t n_samples, std::uint64_t seed,
                                            int threads) {
  const ModelSpec& spec = dataset.spec;
  validate_params(spec, params);
  if (n_samples < 1000)
    throw ConfigError("mc_log_likelihood: n_samples must be >= 1000");
  const int q = spec.q1 + spec.q2;
  if (q == 0) {
    // No integral to sample: the plug-in likelihood is exact.
    return {log_likelihood(dataset, params, gh_rule(1, 0), LikelihoodOptions{threads}), 0.0};
  }
  if (spec.m == 0) return {0.0, 0.0};

  Eigen::LLT<Eigen::MatrixXd> llt(params.sigma_b.full());
  if (llt.info() != Eigen::Success)
    throw ParameterError("mc_log_likelihood: sigma_b not positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();

  std::vector<double> subject_ll(spec.m), subject_var(spec.m);
  parallel_for(spec.m, threads, [&](int k) {
    Rng rng = Rng::substream(seed, stream::kOracleMc, static_cast<std::uint64_t>(k));
    Eigen::VectorXd z(q), b(q);
    std::vector<double> logs(static_cast<std::size_t>(n_samples));
    for (std::int64_t s = 0; s < n_samples; ++s) {
      for (int d = 0; d < q; ++d) z[d] = rng.normal();
      b = chol * z;
      logs[static_cast<std::size_t>(s)] =
          subject_log_integrand(spec, dataset.subjects[k], params, b);
    }
    const double vmax = *std::max_element(logs.begin(), logs.end());
    double mean = 0.0;
    for (double g : logs) mean += std::exp(g - vmax);
    mean /= static_cast<double>(n_samples);
    double var = 0.0;
    for (double g : logs) {
      const double dev = std::exp(g - vmax) - mean;
      var += dev * dev;
    }
    var /= static_cast<double>(n_samples - 1);
    subject_ll[k] = vmax + std::log(mean);
    // Delta method: Var(log m) ~ Var(m) / m^2, Var(m) = s^2 / n.
    subject_var[k] = var / (static_cast<double>(n_samples) * mean * mean);
  });

  std::sort(subject_var.begin(), subject_var.end());
  double total_var = 0.0;
  for (double v : subject_var) total_var += v;
  std::sort(subject_ll.begin(), subject_ll.end());
  double total = 0.0;
  for (double v : subject_ll) total += v;
  return {total, std::sqrt(total_var)};
}

Eigen::VectorXd empirical_conditional_cdf(double eta1, double eta2, double a1, double a2,
                                          double rho, const Eigen::VectorXd& r_grid,
                                          std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 100000)
    throw ConfigError("empirical_conditional_cdf: n_samples must be >= 1e5");
  if (!(std::abs(rho) < 1.0))
    throw ParameterError("empirical_conditional_cdf: |rho| must be < 1");
  if (!(a1 < a2)) throw ParameterError("empirical_conditional_cdf: requires a1 < a2");

  Rng rng = Rng::substream(seed, stream::kOracleConditional, 0);
  const double resid_sd = std::sqrt((1.0 - rho) * (1.0 + rho));
  std::vector<double> survivors;
  survivors.reserve(static_cast<std::size_t>(n_samples / 4));
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const double e1 = rng.normal();
    const double e2 = rho * e1 + resid_sd * rng.normal();
    const double y = eta1 + e1;
    if (y < a1 || y > a2) survivors.push_back(eta2 + e2);
  }
  if (survivors.size() < 100)
    throw NumericError("empirical_conditional_cdf: only " + std::to_string(survivors.size()) +
                       " samples hit the crossing event; increase n_samples or widen the event");

  std::sort(survivors.begin(), survivors.end());
  Eigen::VectorXd cdf(r_grid.size());
  for (Eigen::Index i = 0; i < r_grid.size(); ++i) {
    const auto count =
        std::upper_bound(survivors.begin(), survivors.end(), r_grid[i]) - survivors.begin();
    cdf[i] = static_cast<double>(count) / static_cast<double>(survivors.size());
  }
  return cdf;
}

double integrate_bvn_rectangle(double z1, double z2, double rho, int resolution) {
  if (resolution < 200)
    throw ConfigError("integrate_bvn_rectangle: resolution must be >= 200 per axis");
  if (!(std::abs(rho) < 1.0))
    throw ParameterError("integrate_bvn_rectangle: |rho| must be < 1");
  const double lo = -8.0;
  const double hi1 = std::min(z1, 8.0);
  const double hi2 = std::min(z2, 8.0);
  if (hi1 <= lo || hi2 <= lo) return 0.0;

  int nx = resolution + (resolution % 2);
  int ny = nx;
  const double hx = (hi1 - lo) / nx;
  const double hy = (hi2 - lo) / ny;
  auto simpson_weight = [](int i, int n) {
    if (i == 0 || i == n) return 1.0;
    return i % 2 == 1 ? 4.0 : 2.0;
  };
  double sum = 0.0;
  for (int i = 0; i <= nx; ++i) {
    const double x = lo + i * hx;
    const double wx = simpson_weight(i, nx);
    double row = 0.0;
    for (int j = 0; j <= ny; ++j)
      row += simpson_weight(j, ny) * bvn_density(x, lo + j * hy, rho);
    sum += wx * row;
  }
  return sum * hx * hy / 9.0;
}

OracleReport check_phi_symmetry(const std::function<double(double)>& cdf) {
  const std::function<double(double)> phi =
      cdf ? cdf : std::function<double(double)>(static_cast<double (*)(double)>(normal_cdf));
  OracleReport report;
  report.name = "phi_symmetry";
  report.threshold = 1e-13;
  double worst = 0.0;
  int count = 0;
  for (double z = -6.0; z <= 6.0 + 1e-9; z += 0.05, ++count)
    worst = std::max(worst, std::abs(phi(z) + phi(-z) - 1.0));
  report.statistic = worst;
  report.n = count;
  report.passed = report.statistic <= report.threshold;
  return report;
}

namespace {

OracleReport make_report(std::string name, double statistic, double threshold, std::int64_t n) {
  OracleReport report;
  report.name = std::move(name);
  report.statistic = statistic;
  report.threshold = threshold;
  report.n = n;
  report.passed = statistic <= threshold;
  return report;
}

OracleReport check_omega11_identity() {
  Rng rng = Rng::substream(0, stream::kSelfCheck, 1);
  double worst = 0.0;
  const int draws = 1000;
  for (int i = 0; i < draws; ++i) {
    const double a1 = -3.0 + 4.0 * rng.uniform();
    const double a2 = a1 + 0.1 + 3.0 * rng.uniform();
    const double eta1 = -2.0 + 4.0 * rng.uniform();
    const CrossingProbs cp = crossing_probs(a1, a2, eta1, 1.0);
    const double direct = omega11(cp);
    const double reference = cp.p_event * (1.0 - cp.p_event);
    worst = std::max(worst, std::abs(direct - reference));
  }
  return make_report("omega11_identity", worst, 1e-14, draws);
}

OracleReport check_omega21_zero_at_rho0() {
  double worst = 0.0;
  int count = 0;
  for (double r_star : {-2.0, -0.5, 0.0, 1.0, 3.0})
    for (double eta1 : {-1.0, 0.0, 0.7})
      for (double eta2 : {-0.4, 0.3})
        for (double a1 : {-2.0, -0.5}) {
          worst = std::max(worst, std::abs(omega21(r_star, eta1, eta2, a1, a1 + 2.0, 0.0)));
          ++count;
        }
  return make_report("omega21_zero_at_rho0", worst, 0.0, count);
}

OracleReport check_density_normalization() {
  double worst = 0.0;
  int cases = 0;
  for (double eta1 : {-0.5, 0.4})
    for (double eta2 : {-0.3, 0.2})
      for (double rho : {-0.6, -0.2, 0.2, 0.6, 0.8}) {
        const JoeKernel kernel(eta1, eta2, -1.0, 1.2, rho);
        const double integral = simpson_1d([&](double r) { return kernel.density(r); },
                                           eta2 - 12.0, eta2 + 12.0, 4000);
        worst = std::max(worst, std::abs(integral - 1.0));
        ++cases;
      }
  return make_report("joe_density_normalization", worst, 1e-6, cases);
}

OracleReport check_gh_weight_sums() {
  const double sqrt_pi = std::sqrt(3.14159265358979323846264338328);
  double worst = 0.0;
  for (int order = 1; order <= 40; ++order) {
    const QuadratureRule rule = gh_rule(order);
    worst = std::max(worst, std::abs(rule.weights.sum() - sqrt_pi));
  }
  return make_report("gh_weight_sums", worst, 1e-12, 40);
}

OracleReport check_bvn_independence() {
  double worst = 0.0;
  int count = 0;
  for (double z1 : {-2.0, -0.5, 0.0, 1.0, 2.5})
    for (double z2 : {-1.5, 0.0, 0.8, 3.0}) {
      worst = std::max(worst,
                       std::abs(bivariate_normal_cdf(z1, z2, 0.0) - normal_cdf(z1) * normal_cdf(z2)));
      ++count;
    }
  return make_report("bvn_independence", worst, 1e-13, count);
}

OracleReport check_bvn_arcsine() {
  const double expected = 0.25 + std::asin(0.5) / kTwoPi;
  const double got = bivariate_normal_cdf(0.0, 0.0, 0.5);
  return make_report("bvn_arcsine", std::abs(got - expected), 1e-10, 1);
}

OracleReport check_joe_cdf_monotone() {
  double worst = 0.0;  // most negative forward difference
  const int grid = 400;
  for (double rho : {-0.7, -0.3, 0.4, 0.8}) {
    const JoeKernel kernel(0.3, -0.2, -1.0, 1.4, rho);
    double prev = kernel.cdf(-6.0);
    for (int i = 1; i <= grid; ++i) {
      const double cur = kernel.cdf(-6.0 + 12.0 * i / grid);
      worst = std::max(worst, prev - cur);
      prev = cur;
    }
  }
  return make_report("joe_cdf_monotone", worst, 1e-12, 4 * grid);
}

OracleReport check_bvn_vs_simpson() {
  double worst = 0.0;
  int count = 0;
  for (double rho : {-0.8, 0.0, 0.8})
    for (double z1 : {-2.0, -1.0, 0.0, 1.0, 2.0})
      for (double z2 : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        worst = std::max(worst, std::abs(bivariate_normal_cdf(z1, z2, rho) -
                                         integrate_bvn_rectangle(z1, z2, rho, 400)));
        ++count;
      }
  return make_report("bvn_vs_simpson", worst, 1e-6, count);
}

std::vector<OracleReport> check_joe_cdf_vs_simulation() {
  std::vector<OracleReport> reports;
  const std::int64_t n_samples = 1000000;
  Eigen::VectorXd grid(61);
  for (int i = 0; i < 61; ++i) grid[i] = -3.0 + 0.1 * i;
  for (double rho : {-0.5, 0.0, 0.5}) {
    const Eigen::VectorXd empirical =
        empirical_conditional_cdf(0.0, 0.0, -1.0, 1.0, rho, grid, n_samples, 2024);
    const JoeKernel kernel(0.0, 0.0, -1.0, 1.0, rho);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      worst = std::max(worst, std::abs(kernel.cdf(grid[i]) - empirical[i]));
    reports.push_back(make_report("joe_cdf_vs_simulation[rho=" + std::to_string(rho) + "]",
                                  worst, 3e-3, n_samples));
  }
  return reports;
}

Dataset reference_dataset() {
  ModelSpec spec;
  spec.m = 20;
  spec.n = 3;
  spec.p = 1;
  spec.q1 = 1;
  spec.q2 = 1;
  spec.dt = 1.0;
  spec.d1 = {1};
  spec.d2 = {1};
  Parameters params;
  params.beta1 = {Eigen::VectorXd::Constant(1, 0.5)};
  params.beta2 = {Eigen::VectorXd::Constant(1, 1.0)};
  params.a1 = -1.0;
  params.a2 = 1.5;
  params.sigma_b.sigma1 = Eigen::MatrixXd::Constant(1, 1, 0.25);
  params.sigma_b.sigma2 = Eigen::MatrixXd::Constant(1, 1, 0.25);
  params.sigma_b.sigma12 = Eigen::MatrixXd::Constant(1, 1, 0.1);
  params.rho = 0.4;
  const CovariateDesign design = make_design(spec, CovariateKind::kIntercept, 7);
  return simulate_dataset(spec, params, design, 7);
}

Parameters reference_params() {
  Parameters params;
  params.beta1 = {Eigen::VectorXd::Constant(1, 0.5)};
  params.beta2 = {Eigen::VectorXd::Constant(1, 1.0)};
  params.a1 = -1.0;
  params.a2 = 1.5;
  params.sigma_b.sigma1 = Eigen::MatrixXd::Constant(1, 1, 0.25);
  params.sigma_b.sigma2 = Eigen::MatrixXd::Constant(1, 1, 0.25);
  params.sigma_b.sigma12 = Eigen::MatrixXd::Constant(1, 1, 0.1);
  params.rho = 0.4;
  return params;
}

std::vector<OracleReport> check_gh_vs_mc(int threads) {
  const Dataset dataset = reference_dataset();
  const Parameters params = reference_params();
  const std::int64_t n_samples = 1000000;
  const double gh20 =
      log_likelihood(dataset, params, gh_rule(20, 2), LikelihoodOptions{threads});
  const double gh30 =
      log_likelihood(dataset, params, gh_rule(30, 2), LikelihoodOptions{threads});
  const auto [mc, se] = mc_log_likelihood(dataset, params, n_samples, 99, threads);

  std::vector<OracleReport> reports;
  reports.push_back(make_report("gh_vs_mc_loglik", std::abs(gh20 - mc), 3.0 * se, n_samples));
  reports.push_back(
      make_report("quadrature_convergence", std::abs(gh20 - gh30) / std::abs(gh30), 1e-6, 2));
  return reports;
}

std::vector<OracleReport> check_simulator_moments() {
  ModelSpec spec;
  spec.m = 1;
  spec.n = 100000;
  spec.p = 1;
  spec.q1 = 0;
  spec.q2 = 0;
  spec.dt = 1.0;
  spec.d1 = {1};
  spec.d2 = {1};
  Parameters params;
  params.beta1 = {Eigen::VectorXd::Constant(1, 2.0)};
  params.beta2 = {Eigen::VectorXd::Constant(1, 0.0)};
  params.a1 = -1.0;
  params.a2 = 1.5;
  params.sigma_b.sigma1.resize(0, 0);
  params.sigma_b.sigma2.resize(0, 0);
  params.sigma_b.sigma12.resize(0, 0);
  params.rho = 0.0;
  const CovariateDesign design = make_design(spec, CovariateKind::kIntercept, 11);
  const Dataset dataset = simulate_dataset(spec, params, design, 11);
  const auto& y = dataset.subjects[0].y;
  const double n = static_cast<double>(spec.n);

  const double mean = y.mean();
  const double se_mean = 1.0 / std::sqrt(n);
  const double variance = (y.array() - mean).square().sum() / (n - 1.0);
  const double se_var = std::sqrt(2.0 / (n - 1.0));
  const double crossing_rate =
      static_cast<double>(dataset.subjects[0].crossed.count()) / n;
  const double expected_rate =
      normal_cdf(params.a1 - 2.0) + 1.0 - normal_cdf(params.a2 - 2.0);
  const double se_rate = std::sqrt(expected_rate * (1.0 - expected_rate) / n);

  std::vector<OracleReport> reports;
  reports.push_back(make_report("sim_mean", std::abs(mean - 2.0), 3.0 * se_mean, spec.n));
  reports.push_back(make_report("sim_variance", std::abs(variance - 1.0), 3.0 * se_var, spec.n));
  reports.push_back(
      make_report("sim_crossing_rate", std::abs(crossing_rate - expected_rate), 3.0 * se_rate,
                  spec.n));
  return reports;
}

}  // namespace

std::vector<OracleReport> run_checks(CheckLevel level, int threads) {
  std::vector<OracleReport> reports;
  reports.push_back(check_phi_symmetry());
  reports.push_back(check_omega11_identity());
  reports.push_back(check_omega21_zero_at_rho0());
  reports.push_back(check_density_normalization());
  reports.push_back(check_gh_weight_sums());
  reports.push_back(check_bvn_independence());
  reports.push_back(check_bvn_arcsine());
  reports.push_back(check_joe_cdf_monotone());
  if (level == CheckLevel::kFull) {
    reports.push_back(check_bvn_vs_simpson());
    for (auto& r : check_joe_cdf_vs_simulation()) reports.push_back(std::move(r));
    for (auto& r : check_gh_vs_mc(threads)) reports.push_back(std::move(r));
    for (auto& r : check_simulator_moments()) reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace driftrt
