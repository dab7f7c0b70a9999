#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include "json.hpp"
#include <optional>
#include <span>
#include <utility>

#include "gevreg/model.hpp"
#include "gevreg/sampler.hpp"

namespace gevreg {

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double d_avg = 0.0;
  double d_at_mean = 0.0;
};

/// Deviance information criterion with p_D = mean deviance - deviance at the
/// posterior mean. Uses the chain's recorded log-likelihoods when present.
DicResult dic(const Chain& chain, const LogTarget& target);

/// Deviance at the posterior mean plus dim * log(n).
double bic(const Chain& chain, const LogTarget& target);

struct CjConfig {
  // Fresh proposal draws for the denominator; nullopt uses the chain length.
  std::optional<std::size_t> fresh_draws;
  std::uint64_t seed = 1;
};

struct MarginalLikelihood {
  double log_ml = 0.0;
  double mc_se = 0.0;
};

/// Single-block Chib-Jeliazkov estimate of log m(y) at theta* = posterior
/// mean, using the chain's frozen proposal covariance.
MarginalLikelihood marginal_likelihood_cj(const Chain& chain, const LogTarget& target, const CjConfig& config);

/// -2 log p(holdout | theta_hat) under the model's link. Zero for an empty
/// holdout.
double posterior_predictive_deviance(std::span<const double> theta_hat, const ModelSpec& model,
                                     const Dataset& holdout);

/// Random disjoint split; the holdout has round(fraction * n) rows. Rows keep
/// their original order within each part.
std::pair<Dataset, Dataset> holdout_split(const Dataset& data, double fraction, std::uint64_t seed);

struct ComparisonReport {
  double d_avg = 0.0;
  double d_at_mean = 0.0;
  double p_d = 0.0;
  double dic = 0.0;
  double bic = 0.0;
  double log_ml = 0.0;
  double log_ml_se = 0.0;
  std::optional<double> d_post;
};

/// All in-sample criteria for one fitted chain; log_ml is NaN when the prior
/// is improper.
ComparisonReport compare_criteria(const Chain& chain, const LogTarget& target, const CjConfig& cj);

nlohmann::ordered_json to_json(const ComparisonReport& report);

}  // namespace gevreg
