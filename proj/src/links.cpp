#include "gevreg/links.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

#include "gevreg/error.hpp"
#include "gevreg/gev.hpp"

namespace gevreg {

namespace {

void require_finite_eta(double eta) {
  if (!std::isfinite(eta)) throw Error("links", "domain", "linear predictor must be finite");
}

// t = (1 - xi eta)^{-1/xi}, so that 1 - p = exp(-t). Returns false outside
// the support, where 1 - xi eta <= 0.
bool gev_t(double eta, double xi, double& t) {
  if (std::abs(xi) < kGumbelThreshold) {
    t = std::exp(eta);
    return true;
  }
  const double xe = -xi * eta;
  if (xe <= -1.0) return false;
  t = std::exp(-std::log1p(xe) / xi);
  return true;
}

}  // namespace

std::string to_string(LinkKind kind) {
  switch (kind) {
    case LinkKind::Logit: return "logit";
    case LinkKind::Probit: return "probit";
    case LinkKind::Cloglog: return "cloglog";
    case LinkKind::Gev: return "gev";
  }
  return "unknown";
}

LinkKind parse_link_kind(std::string_view name) {
  if (name == "logit") return LinkKind::Logit;
  if (name == "probit") return LinkKind::Probit;
  if (name == "cloglog") return LinkKind::Cloglog;
  if (name == "gev") return LinkKind::Gev;
  throw Error("links", "unknown_link", "unknown link '" + std::string(name) + "'");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("links", "domain", "probability must lie in (0, 1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

BernoulliProbs bernoulli_probs(double eta, const LinkSpec& link) {
  require_finite_eta(eta);
  BernoulliProbs out;
  switch (link.kind) {
    case LinkKind::Logit:
      out.p = 1.0 / (1.0 + std::exp(-eta));
      out.q = 1.0 / (1.0 + std::exp(eta));
      break;
    case LinkKind::Probit:
      out.p = 0.5 * std::erfc(-eta / std::numbers::sqrt2);
      out.q = 0.5 * std::erfc(eta / std::numbers::sqrt2);
      break;
    case LinkKind::Cloglog: {
      const double t = std::exp(eta);
      out.p = -std::expm1(-t);
      out.q = std::exp(-t);
      break;
    }
    case LinkKind::Gev: {
      double t = 0.0;
      if (!gev_t(eta, link.xi, t)) {
        out.edge = true;
        out.p = link.xi > 0.0 ? 1.0 : 0.0;
        out.q = 1.0 - out.p;
      } else {
        out.p = -std::expm1(-t);
        out.q = std::exp(-t);
      }
      break;
    }
  }
  return out;
}

double inv_link(double eta, const LinkSpec& link) { return bernoulli_probs(eta, link).p; }

double link_fn(double p, const LinkSpec& link) {
  if (!(p > 0.0 && p < 1.0)) throw Error("links", "domain", "probability must lie strictly inside (0, 1)");
  switch (link.kind) {
    case LinkKind::Logit: return std::log(p / (1.0 - p));
    case LinkKind::Probit: return normal_quantile(p);
    case LinkKind::Cloglog: return std::log(-std::log1p(-p));
    case LinkKind::Gev: {
      const double log_t = std::log(-std::log1p(-p));
      if (std::abs(link.xi) < kGumbelThreshold) return log_t;
      // 1 - xi eta = t^{-xi}
      return -std::expm1(-link.xi * log_t) / link.xi;
    }
  }
  return 0.0;
}

double dinv_link_deta(double eta, const LinkSpec& link) {
  require_finite_eta(eta);
  switch (link.kind) {
    case LinkKind::Logit: {
      const double p = 1.0 / (1.0 + std::exp(-eta));
      return p * (1.0 - p);
    }
    case LinkKind::Probit:
      return std::exp(-0.5 * eta * eta) / std::sqrt(2.0 * std::numbers::pi);
    case LinkKind::Cloglog: {
      return std::exp(eta - std::exp(eta));
    }
    case LinkKind::Gev: {
      double t = 0.0;
      if (!gev_t(eta, link.xi, t)) return 0.0;
      if (std::abs(link.xi) < kGumbelThreshold) return std::exp(eta - t);
      // exp(-t) (1 - xi eta)^{-1/xi - 1} = exp(-t) t / (1 - xi eta)
      const double z = 1.0 - link.xi * eta;
      const double d = std::exp(-t) * t / z;
      return std::isfinite(d) ? d : 0.0;
    }
  }
  return 0.0;
}

}  // namespace gevreg
