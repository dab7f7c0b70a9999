#pragma once

#include <string>
#include <string_view>

namespace gevreg {

enum class LinkKind { Logit, Probit, Cloglog, Gev };

struct LinkSpec {
  LinkKind kind = LinkKind::Logit;
  double xi = 0.0;  // used only when kind == Gev

  static LinkSpec logit() { return {LinkKind::Logit, 0.0}; }
  static LinkSpec probit() { return {LinkKind::Probit, 0.0}; }
  static LinkSpec cloglog() { return {LinkKind::Cloglog, 0.0}; }
  static LinkSpec gev(double xi) { return {LinkKind::Gev, xi}; }
};

std::string to_string(LinkKind kind);
LinkKind parse_link_kind(std::string_view name);

// Standard normal distribution function and its inverse.
double normal_cdf(double x);
double normal_quantile(double p);

/// Success probability for linear predictor eta. The GEV case is
/// p = 1 - GEV(-eta; xi): exactly 1 for xi > 0, eta >= 1/xi and exactly 0
/// for xi < 0, eta <= 1/xi.
double inv_link(double eta, const LinkSpec& link);

/// Inverse of inv_link on (0, 1).
double link_fn(double p, const LinkSpec& link);

/// dp/deta; zero on the flat parts outside the GEV support.
double dinv_link_deta(double eta, const LinkSpec& link);

// Success and failure probabilities computed without cancellation. `edge` is
// set when the GEV support truncated the probability to exactly 0 or 1; any
// other tiny value comes from finite precision and is not a true degeneracy.
struct BernoulliProbs {
  double p = 0.5;
  double q = 0.5;
  bool edge = false;
};

BernoulliProbs bernoulli_probs(double eta, const LinkSpec& link);

}  // namespace gevreg
