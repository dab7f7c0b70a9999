#include "gevreg/gev.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "gevreg/error.hpp"

namespace gevreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Apery's constant zeta(3).
constexpr double kZeta3 = 1.2020569031595942853997;

bool gumbel(double xi) { return std::abs(xi) < kGumbelThreshold; }

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw Error("gev_core", "domain", std::string(what) + " must be finite");
  }
}

}  // namespace

void validate(const GevParams& p) {
  if (!std::isfinite(p.mu) || !std::isfinite(p.sigma) || !std::isfinite(p.xi) || !(p.sigma > 0.0)) {
    throw Error("gev_core", "invalid_params", "GEV parameters require finite mu, xi and sigma > 0");
  }
}

double gev_cdf(double x, const GevParams& p) {
  validate(p);
  require_finite(x, "x");
  const double s = (x - p.mu) / p.sigma;
  if (gumbel(p.xi)) return std::exp(-std::exp(-s));
  const double xs = p.xi * s;
  if (xs <= -1.0) {
    // Outside the support: below the lower endpoint when xi > 0,
    // above the upper endpoint when xi < 0.
    return p.xi > 0.0 ? 0.0 : 1.0;
  }
  const double t = std::exp(-std::log1p(xs) / p.xi);
  return std::exp(-t);
}

double gev_log_pdf(double x, const GevParams& p) {
  validate(p);
  require_finite(x, "x");
  const double s = (x - p.mu) / p.sigma;
  const double log_sigma = std::log(p.sigma);
  if (gumbel(p.xi)) return -log_sigma - s - std::exp(-s);
  const double xs = p.xi * s;
  if (xs <= -1.0) return -kInf;
  const double log_z = std::log1p(xs);
  return -log_sigma - (1.0 + 1.0 / p.xi) * log_z - std::exp(-log_z / p.xi);
}

double gev_quantile(double q, const GevParams& p) {
  validate(p);
  if (!(q > 0.0 && q < 1.0)) {
    throw Error("gev_core", "domain", "quantile level must lie in (0, 1)");
  }
  const double log_t = std::log(-std::log(q));
  if (gumbel(p.xi)) return p.mu - p.sigma * log_t;
  return p.mu + p.sigma * std::expm1(-p.xi * log_t) / p.xi;
}

double gev_mode(const GevParams& p) {
  validate(p);
  if (p.xi <= -1.0) {
    throw Error("gev_core", "mode_undefined", "mode-skewness undefined for xi <= -1");
  }
  if (gumbel(p.xi)) return p.mu;
  // (1 + xi)^{-xi} - 1, written to stay accurate for small xi.
  return p.mu + p.sigma * std::expm1(-p.xi * std::log1p(p.xi)) / p.xi;
}

double ag_skewness(double xi) {
  require_finite(xi, "xi");
  if (xi <= -1.0) {
    throw Error("gev_core", "domain", "mode-skewness undefined for xi <= -1");
  }
  return 1.0 - 2.0 * std::exp(-(1.0 + xi));
}

double gev_skewness_coeff(double xi) {
  require_finite(xi, "xi");
  if (xi >= 1.0 / 3.0) {
    throw Error("gev_core", "moment_undefined", "third moment undefined for xi >= 1/3");
  }
  if (gumbel(xi)) {
    return 12.0 * std::sqrt(6.0) * kZeta3 / (std::numbers::pi * std::numbers::pi * std::numbers::pi);
  }
  const double g1 = std::tgamma(1.0 - xi);
  const double g2 = std::tgamma(1.0 - 2.0 * xi);
  const double g3 = std::tgamma(1.0 - 3.0 * xi);
  const double sign = xi > 0.0 ? 1.0 : -1.0;
  return sign * (g3 - 3.0 * g1 * g2 + 2.0 * g1 * g1 * g1) / std::pow(g2 - g1 * g1, 1.5);
}

GevMoments gev_moments(const GevParams& p) {
  validate(p);
  if (p.xi >= 1.0 / 3.0) {
    throw Error("gev_core", "moment_undefined", "third moment undefined for xi >= 1/3");
  }
  GevMoments m;
  m.skewness_coeff = gev_skewness_coeff(p.xi);
  m.g1 = std::tgamma(1.0 - p.xi);
  m.g2 = std::tgamma(1.0 - 2.0 * p.xi);
  m.g3 = std::tgamma(1.0 - 3.0 * p.xi);
  if (gumbel(p.xi)) {
    m.mean = p.mu + p.sigma * std::numbers::egamma;
    m.variance = p.sigma * p.sigma * std::numbers::pi * std::numbers::pi / 6.0;
    return m;
  }
  m.mean = p.mu + p.sigma * (m.g1 - 1.0) / p.xi;
  m.variance = p.sigma * p.sigma * (m.g2 - m.g1 * m.g1) / (p.xi * p.xi);
  return m;
}

GevParams moment_match_normal() {
  // Skewness is increasing in xi and changes sign inside this bracket.
  double lo = -0.45;
  double hi = -0.05;
  double f_lo = gev_skewness_coeff(lo);
  if (!(f_lo < 0.0 && gev_skewness_coeff(hi) > 0.0)) {
    throw Error("gev_core", "no_convergence", "skewness bracket does not change sign");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = gev_skewness_coeff(mid);
    if ((f_mid < 0.0) == (f_lo < 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  if (hi - lo > 1e-12) {
    throw Error("gev_core", "no_convergence", "bisection did not converge");
  }
  const double xi = 0.5 * (lo + hi);
  const GevMoments unit = gev_moments({0.0, 1.0, xi});
  const double sigma = 1.0 / std::sqrt(unit.variance);
  return {-sigma * unit.mean, sigma, xi};
}

}  // namespace gevreg
