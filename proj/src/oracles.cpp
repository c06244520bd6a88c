#include "ivrl/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace ivrl {

namespace {

// chi2 fixed-point equation g(chi2) = gamma*c1^2*chi2 - theta3^2/(4*theta5) - chi2
// with theta3 = r2 + 2*gamma*c1*c2*chi2 and theta5 = r3 + gamma*c2^2*chi2.
double chi2_equation(const LqEnvConfig& cfg, double chi2) {
  const double g = cfg.gamma;
  const double th5 = cfg.r[3] + g * cfg.c[2] * cfg.c[2] * chi2;
  const double th3 = cfg.r[2] + 2.0 * g * cfg.c[1] * cfg.c[2] * chi2;
  return g * cfg.c[1] * cfg.c[1] * chi2 - th3 * th3 / (4.0 * th5) - chi2;
}

}  // namespace

double rbias_fixed_point(double theta_star, double beta, RbiasMode mode) {
  if (mode == RbiasMode::kActionNoise) {
    if (!(std::fabs(beta) < 1.0))
      throw std::invalid_argument("rbias_fixed_point: action mode needs |beta| < 1");
    return theta_star / (1.0 - beta);
  }
  const double disc = theta_star * theta_star + 4.0 * beta;
  if (disc < 0.0)
    throw std::invalid_argument("rbias_fixed_point: state mode needs theta*^2 + 4 beta >= 0");
  return theta_star + 0.5 * (std::sqrt(disc) - theta_star);
}

double sgd_bias_closed_form(double p, double tilde_theta, double b) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sgd_bias_closed_form: p must be in [0,1]");
  const double t = tilde_theta;
  const double e18 = std::exp(0.125), e12 = std::exp(0.5), e2 = std::exp(2.0);
  const double ea3s = (1.0 - p) * t * t * t * e2 + p * 0.25 * e18;   // E[A^3 S]
  const double ea2 = (1.0 - p) * t * t * e12 + p / 3.0;              // E[A^2]
  const double esa = (1.0 - p) * t * e12 + p * 0.5 * e18;            // E[S A]
  const double es2a2 = (1.0 - p) * t * t * e2 + p * e12 / 3.0;       // E[S^2 A^2]
  const double var = es2a2 - esa * esa;
  if (!(std::fabs(var) > 1e-14))
    throw std::invalid_argument("sgd_bias_closed_form: degenerate Var(SA)");
  return b * (ea3s - ea2 * esa) / var;
}

double sgd_bias_as_printed(double p, double tilde_theta, double b) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("sgd_bias_as_printed: p must be in [0,1]");
  const double t = tilde_theta;
  const double e18 = std::exp(0.125), e12 = std::exp(0.5), e2 = std::exp(2.0);
  const double num = (p * t * t * t * e2 + 0.25 * e18 * (1.0 - p)) -
                     (p * t * t * e12 + (1.0 - p) / 3.0) *
                         (p * t * e12 + 0.5 * e18 * (1.0 - p));
  const double den = (p * t * t * e2 + 0.2 * (1.0 - p)) -
                     std::pow(p * t * e12 + (1.0 - p) / 3.0, 2);
  if (!(std::fabs(den) > 1e-14))
    throw std::invalid_argument("sgd_bias_as_printed: degenerate denominator");
  return b * num / den;
}

SgdBiasReport sgd_bias_report(double p, double tilde_theta, double b, long n, Rng& rng) {
  if (n < 100) throw std::invalid_argument("sgd_bias_report: need n >= 100");
  SgdBiasReport report;
  report.closed_form = sgd_bias_closed_form(p, tilde_theta, b);
  report.as_printed = sgd_bias_as_printed(p, tilde_theta, b);
  // Monte-Carlo Cov(b A^2, S A)/Var(S A) with a delta-method standard error.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::vector<double> xs(static_cast<size_t>(n)), ys(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double s = rng.lognormal(0.0, 0.5);
    const double explore = rng.bernoulli(p);
    const double a = explore > 0.5 ? rng.uniform01() : tilde_theta * s;
    const double x = s * a;
    const double y = b * a * a;
    xs[static_cast<size_t>(i)] = x;
    ys[static_cast<size_t>(i)] = y;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nd = static_cast<double>(n);
  const double mx = sx / nd, my = sy / nd;
  const double var = sxx / nd - mx * mx;
  const double cov = sxy / nd - mx * my;
  report.monte_carlo = cov / var;
  // influence function of the ratio estimator
  double s2 = 0.0;
  for (long i = 0; i < n; ++i) {
    const double dx = xs[static_cast<size_t>(i)] - mx;
    const double dy = ys[static_cast<size_t>(i)] - my;
    const double infl = (dx * dy - cov - report.monte_carlo * (dx * dx - var)) / var;
    s2 += infl * infl;
  }
  report.monte_carlo_se = std::sqrt(s2 / nd) / std::sqrt(nd);
  return report;
}

ThetaStar solve_theta_star(const LqEnvConfig& cfg, std::optional<double> bias_mean_opt) {
  cfg.validate();
  const double g = cfg.gamma;
  const double c0 = cfg.c[0], c1 = cfg.c[1], c2 = cfg.c[2];
  const double r1 = cfg.r[1], r2 = cfg.r[2], r3 = cfg.r[3];
  const double bias_mean = bias_mean_opt.value_or(cfg.b * cfg.a2_sq_mean());
  if (!(r3 < 0.0)) throw std::invalid_argument("solve_theta_star: need r3 < 0");

  // Bracketed root for chi2, scanning up from 0 toward the theta5 = 0 pole to
  // stay on the branch continuous in gamma.
  double chi2 = 0.0;
  if (g > 0.0 && c2 != 0.0) {
    const double pole = -r3 / (g * c2 * c2);
    double lo = 0.0;
    double f_lo = chi2_equation(cfg, lo);
    if (std::fabs(f_lo) > 0.0) {
      double step = std::max(1e-3, std::fabs(r2 * r2 / (4.0 * r3)));
      double hi = lo;
      bool bracketed = false;
      while (hi < pole * 0.999999) {
        double next = std::min(hi + step, pole * 0.999999);
        const double f_next = chi2_equation(cfg, next);
        if (f_lo * f_next <= 0.0) {
          lo = hi;
          hi = next;
          bracketed = true;
          break;
        }
        hi = next;
        f_lo = f_next;
        step *= 1.5;
      }
      if (!bracketed)
        throw std::runtime_error("solve_theta_star: no chi2 root with theta5 < 0 found");
      // bisection to ~1e-14 interval width
      double f_a = chi2_equation(cfg, lo);
      double a = lo, b2 = hi;
      for (int it = 0; it < 200 && (b2 - a) > 1e-15 * (1.0 + std::fabs(a)); ++it) {
        const double mid = 0.5 * (a + b2);
        const double f_mid = chi2_equation(cfg, mid);
        if (f_a * f_mid <= 0.0) {
          b2 = mid;
        } else {
          a = mid;
          f_a = f_mid;
        }
      }
      chi2 = 0.5 * (a + b2);
    }
  } else if (g > 0.0) {
    chi2 = -r2 * r2 / (4.0 * r3) / (1.0 - g * c1 * c1);
  } else {
    chi2 = -r2 * r2 / (4.0 * r3);
  }

  const double th5 = r3 + g * c2 * c2 * chi2;
  if (!(th5 < 0.0)) throw std::runtime_error("solve_theta_star: solution has theta5 >= 0");
  const double th4 = g * c1 * c1 * chi2;
  const double th3 = r2 + 2.0 * g * c1 * c2 * chi2;
  // m := chi1 + 2 c0 chi2 solves theta1 = g c1 m, theta2 = r1 + g c2 m,
  // chi1 = theta1 - theta2 theta3/(2 theta5).
  const double denom = 1.0 - g * c1 + g * c2 * th3 / (2.0 * th5);
  if (!(std::fabs(denom) > 1e-14))
    throw std::runtime_error("solve_theta_star: singular linear stage");
  const double m = (2.0 * c0 * chi2 - r1 * th3 / (2.0 * th5)) / denom;
  const double th1 = g * c1 * m;
  const double th2 = r1 + g * c2 * m;
  const double chi1 = m - 2.0 * c0 * chi2;
  const double th0 = (cfg.r[0] + bias_mean - g * th2 * th2 / (4.0 * th5) + g * c0 * chi1 +
                      g * (c0 * c0 + cfg.sigma_eta_sq()) * chi2) /
                     (1.0 - g);

  ThetaStar theta;
  theta << th0, th1, th2, th3, th4, th5;
  const auto residuals = theta_star_residuals(cfg, theta, bias_mean);
  if (residuals.cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("solve_theta_star: matching residuals exceed 1e-10");
  return theta;
}

Eigen::Matrix<double, 6, 1> theta_star_residuals(const LqEnvConfig& cfg, const ThetaStar& theta,
                                                 std::optional<double> bias_mean_opt) {
  const double g = cfg.gamma;
  const double c0 = cfg.c[0], c1 = cfg.c[1], c2 = cfg.c[2];
  const double bias_mean = bias_mean_opt.value_or(cfg.b * cfg.a2_sq_mean());
  const double th0 = theta(0), th1 = theta(1), th2 = theta(2), th3 = theta(3),
               th4 = theta(4), th5 = theta(5);
  const double chi0 = th0 - th2 * th2 / (4.0 * th5);
  const double chi1 = th1 - th2 * th3 / (2.0 * th5);
  const double chi2 = th4 - th3 * th3 / (4.0 * th5);
  Eigen::Matrix<double, 6, 1> res;
  res(0) = cfg.r[0] + bias_mean +
           g * (chi0 + c0 * chi1 + (c0 * c0 + cfg.sigma_eta_sq()) * chi2) - th0;
  res(1) = g * c1 * (chi1 + 2.0 * c0 * chi2) - th1;
  res(2) = cfg.r[1] + g * c2 * (chi1 + 2.0 * c0 * chi2) - th2;
  res(3) = cfg.r[2] + 2.0 * g * c1 * c2 * chi2 - th3;
  res(4) = g * c1 * c1 * chi2 - th4;
  res(5) = cfg.r[3] + g * c2 * c2 * chi2 - th5;
  return res;
}

PolicyCoeffs optimal_policy(const ThetaStar& theta) {
  if (!(theta(5) < 0.0)) throw std::invalid_argument("optimal_policy: needs theta5 < 0");
  return PolicyCoeffs{-theta(2) / (2.0 * theta(5)), -theta(3) / (2.0 * theta(5))};
}

ValueCoeffs value_of_linear_policy(const LqEnvConfig& cfg, const PolicyCoeffs& policy) {
  const double g = cfg.gamma;
  const double m = cfg.c[1] + cfg.c[2] * policy.omega1;  // slope of E[s'|s]
  const double k = cfg.c[0] + cfg.c[2] * policy.omega0;  // intercept of E[s'|s]
  const double den2 = 1.0 - g * m * m;
  if (!(den2 > 0.0))
    throw std::invalid_argument("value_of_linear_policy: unstable policy (gamma*(c1+c2*w1)^2 >= 1)");
  const double r1 = cfg.r[1], r2 = cfg.r[2], r3 = cfg.r[3];
  const double w0 = policy.omega0, w1 = policy.omega1;
  ValueCoeffs v;
  v.v2 = (r2 * w1 + r3 * w1 * w1) / den2;
  const double den1 = 1.0 - g * m;
  if (!(std::fabs(den1) > 1e-14))
    throw std::invalid_argument("value_of_linear_policy: singular v1 equation");
  v.v1 = (r1 * w1 + r2 * w0 + 2.0 * r3 * w0 * w1 + 2.0 * g * v.v2 * k * m) / den1;
  v.v0 = (cfg.r[0] + r1 * w0 + r3 * w0 * w0 +
          g * (v.v1 * k + v.v2 * (k * k + cfg.sigma_eta_sq()))) /
         (1.0 - g);
  return v;
}

LtocResult ltoc(const LqEnvConfig& cfg, const Eigen::VectorXd& theta_hat, double s) {
  if (theta_hat.size() != 6) throw std::invalid_argument("ltoc: theta_hat must have length 6");
  if (!(theta_hat(5) < 0.0))
    throw std::invalid_argument("ltoc: induced policy undefined (theta5 >= 0)");
  const ThetaStar star = solve_theta_star(cfg);
  const ValueCoeffs v_star = value_of_linear_policy(cfg, optimal_policy(star));
  ThetaStar th;
  th << theta_hat(0), theta_hat(1), theta_hat(2), theta_hat(3), theta_hat(4), theta_hat(5);
  const ValueCoeffs v_hat = value_of_linear_policy(cfg, optimal_policy(th));
  LtocResult result;
  result.absolute = v_star.at(s) - v_hat.at(s);
  const double vs = v_star.at(s);
  if (!(std::fabs(vs) > 1e-14))
    throw std::invalid_argument("ltoc: V*(s) = 0, relative cost undefined");
  result.relative = 1.0 - v_hat.at(s) / vs;
  return result;
}

std::pair<double, double> rollout_value(const LqEnvConfig& cfg, const PolicyCoeffs& policy,
                                        double s0, int horizon, long n, Rng& rng) {
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < n; ++i) {
    double s = s0;
    double value = 0.0;
    double discount = 1.0;
    for (int t = 0; t < horizon; ++t) {
      const double a = policy.at(s);
      value += discount * cfg.true_reward(s, a);
      discount *= cfg.gamma;
      s = cfg.c[0] + cfg.c[1] * s + cfg.c[2] * a + rng.uniform(cfg.eta_dist.lo, cfg.eta_dist.hi);
    }
    sum += value;
    sum_sq += value * value;
  }
  const double nd = static_cast<double>(n);
  const double mean = sum / nd;
  const double se = std::sqrt((sum_sq / nd - mean * mean) / nd);
  return {mean, se};
}

}  // namespace ivrl
