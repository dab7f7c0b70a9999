#pragma once

// Generalized extreme value distribution kernel.
//
//   G(x) = exp[-{1 + xi (x - mu) / sigma}_+^{-1/xi}],   xi != 0
//   G(x) = exp[-exp{-(x - mu) / sigma}],                xi == 0 (Gumbel)

namespace gevreg {

// Below this |xi| the Gumbel formulas are used.
inline constexpr double kGumbelThreshold = 1e-8;

struct GevParams {
  double mu = 0.0;
  double sigma = 1.0;
  double xi = 0.0;
};

struct GevMoments {
  double mean = 0.0;
  double variance = 0.0;
  double skewness_coeff = 0.0;
  // Gamma(1 - k xi), k = 1, 2, 3. Zero in the Gumbel branch.
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};

// Throws Error("gev_core", "invalid_params") unless sigma > 0 and all finite.
void validate(const GevParams& p);

double gev_cdf(double x, const GevParams& p);
double gev_log_pdf(double x, const GevParams& p);
double gev_quantile(double q, const GevParams& p);

/// Mode of the density; requires xi > -1 (the density is monotone otherwise).
double gev_mode(const GevParams& p);

/// Arnold-Groeneveld skewness 1 - 2 F(mode) of the standard GEV, which
/// reduces to 1 - 2 exp{-(1 + xi)}. Zero at xi = log 2 - 1, increasing in xi.
double ag_skewness(double xi);

/// Mean, variance and moment skewness; requires xi < 1/3.
GevMoments gev_moments(const GevParams& p);

/// Moment skewness of the standard GEV as a function of shape alone.
double gev_skewness_coeff(double xi);

/// GEV parameters whose first three moments match N(0, 1).
GevParams moment_match_normal();

}  // namespace gevreg
