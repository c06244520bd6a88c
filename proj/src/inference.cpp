#include "ivrl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ivrl {

Eigen::MatrixXd residual_series(std::span<const Observation> records,
                                const Eigen::VectorXd& theta_hat,
                                const Eigen::MatrixXd& gamma_hat, const DriftFn& drift) {
  if (records.empty()) throw std::invalid_argument("residual_series: empty trajectory");
  const long n = static_cast<long>(records.size());
  Eigen::MatrixXd out;
  Eigen::VectorXd mean;
  for (long k = 0; k < n; ++k) {
    const Eigen::VectorXd g = drift(records[static_cast<size_t>(k)], theta_hat, gamma_hat);
    if (k == 0) {
      out.resize(n, g.size());
      mean = Eigen::VectorXd::Zero(g.size());
    }
    out.row(k) = g.transpose();
    mean += g;
  }
  mean /= static_cast<double>(n);
  out.rowwise() -= mean.transpose();
  return out;
}

double newey_west_weight(WeightScheme scheme, int lag, int lag_window) {
  if (lag <= 0 || lag > lag_window) return 0.0;
  if (scheme == WeightScheme::kUniform) return 1.0;
  return 1.0 - static_cast<double>(lag) / (static_cast<double>(lag_window) + 1.0);
}

TavcEstimate newey_west_tavc(const Eigen::MatrixXd& residuals, int lag_window,
                             WeightScheme scheme) {
  const long n = residuals.rows();
  if (lag_window < 0) throw std::invalid_argument("newey_west_tavc: negative lag window");
  if (lag_window >= n)
    throw std::invalid_argument("newey_west_tavc: lag window must be < sample size");
  const double nd = static_cast<double>(n);
  TavcEstimate est;
  est.lag_window = lag_window;
  est.scheme = scheme;
  est.l0 = residuals.transpose() * residuals / nd;
  est.lbar = est.l0;
  for (int lag = 1; lag <= lag_window; ++lag) {
    const long m = n - lag;
    const Eigen::MatrixXd cl =
        residuals.topRows(m).transpose() * residuals.bottomRows(m) / nd;
    est.lbar += newey_west_weight(scheme, lag, lag_window) *
                (cl + Eigen::MatrixXd(cl.transpose()));
  }
  return est;
}

namespace {

void check_conditioning(const Eigen::MatrixXd& a11) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a11);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0.0) || smax / smin > 1e12)
    throw std::runtime_error("estimate_jacobian_a11: ill-conditioned Jacobian (cond > 1e12)");
}

}  // namespace

Eigen::MatrixXd estimate_jacobian_a11(std::span<const Observation> records,
                                      const Eigen::VectorXd& theta_hat,
                                      const Eigen::MatrixXd& gamma_hat,
                                      const DriftJacobianFn& drift_jacobian) {
  if (records.empty()) throw std::invalid_argument("estimate_jacobian_a11: empty trajectory");
  Eigen::MatrixXd sum;
  for (const auto& obs : records) {
    const Eigen::MatrixXd j = drift_jacobian(obs, theta_hat, gamma_hat);
    if (sum.size() == 0) sum = Eigen::MatrixXd::Zero(j.rows(), j.cols());
    sum += j;
  }
  sum /= static_cast<double>(records.size());
  check_conditioning(sum);
  return sum;
}

Eigen::MatrixXd estimate_jacobian_a11(std::span<const Observation> records,
                                      const Eigen::VectorXd& theta_hat,
                                      const Eigen::MatrixXd& gamma_hat, const DriftFn& drift) {
  if (records.empty()) throw std::invalid_argument("estimate_jacobian_a11: empty trajectory");
  const long p = theta_hat.size();
  const double nd = static_cast<double>(records.size());
  Eigen::MatrixXd jac(p, p);
  for (long i = 0; i < p; ++i) {
    const double h = 1e-5 * (1.0 + std::fabs(theta_hat(i)));
    Eigen::VectorXd plus = theta_hat;
    Eigen::VectorXd minus = theta_hat;
    plus(i) += h;
    minus(i) -= h;
    Eigen::VectorXd diff = Eigen::VectorXd::Zero(p);
    for (const auto& obs : records)
      diff += drift(obs, plus, gamma_hat) - drift(obs, minus, gamma_hat);
    jac.col(i) = diff / (2.0 * h * nd);
  }
  check_conditioning(jac);
  return jac;
}

Eigen::MatrixXd lyapunov_sigma(const Eigen::MatrixXd& a11, const Eigen::MatrixXd& lbar) {
  const long p = a11.rows();
  if (a11.cols() != p || lbar.rows() != p || lbar.cols() != p)
    throw std::invalid_argument("lyapunov_sigma: dimension mismatch");
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(a11);
  if ((eig.eigenvalues().real().array() >= 0.0).any())
    throw std::runtime_error(
        "lyapunov_sigma: a11 is not Hurwitz, the covariance integral diverges");
  // (I (x) A + A (x) I) vec(Sigma) = -vec(lbar)
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(p * p, p * p);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  for (long i = 0; i < p; ++i)
    for (long j = 0; j < p; ++j)
      kron.block(i * p, j * p, p, p) = eye(i, j) * a11 + a11(i, j) * eye;
  const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(lbar.data(), p * p);
  const Eigen::VectorXd vec = kron.partialPivLu().solve(rhs);
  Eigen::MatrixXd sigma = Eigen::Map<const Eigen::MatrixXd>(vec.data(), p, p);
  sigma = 0.5 * (sigma + Eigen::MatrixXd(sigma.transpose()));
  const double resid = (a11 * sigma + sigma * a11.transpose() + lbar).norm();
  if (!(resid < 1e-8 * std::max(1.0, lbar.norm())))
    throw std::runtime_error("lyapunov_sigma: residual exceeds tolerance");
  return sigma;
}

Eigen::VectorXd ci_half_widths(const Eigen::MatrixXd& sigma, double alpha_t, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("ci_half_widths: level must be in (0,1)");
  const double z = normal_quantile(0.5 * (1.0 + level));
  Eigen::VectorXd hw(sigma.rows());
  for (long i = 0; i < sigma.rows(); ++i) {
    const double v = sigma(i, i);
    if (!(v > 0.0))
      throw std::runtime_error("ci_half_widths: non-positive diagonal in sigma");
    hw(i) = z * std::sqrt(alpha_t * v);
  }
  return hw;
}

Eigen::MatrixX2d confidence_interval(const Eigen::VectorXd& theta_hat,
                                     const CovarianceReport& report, double level) {
  const Eigen::VectorXd hw = ci_half_widths(report.sigma, report.alpha_t, level);
  Eigen::MatrixX2d out(theta_hat.size(), 2);
  out.col(0) = theta_hat - hw;
  out.col(1) = theta_hat + hw;
  return out;
}

PolicyTestResult spot_test(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& sigma,
                           double alpha_t, const FeatureMap& features, double s, double a0,
                           const ActionInterval& interval) {
  PolicyTestResult result;
  result.a_hat = greedy_action(features, theta_hat, s, interval);
  // d phi / d a and d^2 (phi'theta) / d a^2 at (s, a0); exact for feature
  // maps quadratic in the action.
  const double h1 = 1e-6 * (1.0 + std::fabs(a0));
  const Eigen::VectorXd dphi =
      (features.eval(s, a0 + h1) - features.eval(s, a0 - h1)) / (2.0 * h1);
  const double h2 = 1e-3 * (1.0 + std::fabs(a0));
  const double hess = (features.eval(s, a0 + h2).dot(theta_hat) -
                       2.0 * features.eval(s, a0).dot(theta_hat) +
                       features.eval(s, a0 - h2).dot(theta_hat)) /
                      (h2 * h2);
  if (!(std::fabs(hess) > 1e-10))
    throw std::runtime_error("spot_test: singular action Hessian");
  result.omega_s = dphi.dot(sigma * dphi) / (hess * hess);
  if (!(result.omega_s > 0.0)) throw std::runtime_error("spot_test: non-positive variance");
  const double diff = result.a_hat - a0;
  result.t_stat = diff * diff / (alpha_t * result.omega_s);
  result.p_value = chi2_sf_1df(result.t_stat);
  return result;
}

T2TestResult policy_test_t2(const Eigen::VectorXd& theta_hat, const Eigen::MatrixXd& sigma,
                            double alpha_t, const FeatureMap& features,
                            std::span<const double> visited_states,
                            const std::function<double(double)>& pi0, int n_boot, double level,
                            Rng& rng, const ActionInterval& interval) {
  if (visited_states.empty())
    throw std::invalid_argument("policy_test_t2: no visited states");
  if (n_boot < 100)
    throw std::invalid_argument("policy_test_t2: n_boot < 100 gives unstable quantiles");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("policy_test_t2: level must be in (0,1)");
  const long m = static_cast<long>(visited_states.size());
  const double md = static_cast<double>(m);

  std::vector<double> pi_hat(static_cast<size_t>(m));
  double t2 = 0.0;
  for (long l = 0; l < m; ++l) {
    const double s = visited_states[static_cast<size_t>(l)];
    pi_hat[static_cast<size_t>(l)] = greedy_action(features, theta_hat, s, interval);
    const double d = pi_hat[static_cast<size_t>(l)] - pi0(s);
    t2 += d * d;
  }
  t2 /= (md * alpha_t);

  // sqrt of sigma via symmetric eigendecomposition (tolerates PSD inputs).
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const Eigen::VectorXd evals = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXd sqrt_sigma =
      es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();

  std::vector<double> draws(static_cast<size_t>(n_boot));
  const double scale = std::sqrt(alpha_t);
  for (int bdx = 0; bdx < n_boot; ++bdx) {
    Eigen::VectorXd xi(theta_hat.size());
    for (long i = 0; i < xi.size(); ++i) xi(i) = rng.normal();
    const Eigen::VectorXd theta_b = theta_hat + scale * (sqrt_sigma * xi);
    double g = 0.0;
    for (long l = 0; l < m; ++l) {
      const double s = visited_states[static_cast<size_t>(l)];
      const double d =
          greedy_action(features, theta_b, s, interval) - pi_hat[static_cast<size_t>(l)];
      g += d * d;
    }
    draws[static_cast<size_t>(bdx)] = g / (md * alpha_t);
  }
  std::sort(draws.begin(), draws.end());
  const double q = 1.0 - level;
  const long idx = std::min<long>(n_boot - 1,
                                  static_cast<long>(std::ceil(q * n_boot)) - 1);
  T2TestResult result;
  result.t2_stat = t2;
  result.critical_value = draws[static_cast<size_t>(std::max<long>(0, idx))];
  result.reject = t2 > result.critical_value;
  return result;
}

}  // namespace ivrl
