#include "gevreg/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "gevreg/error.hpp"
#include "gevreg/rng.hpp"

namespace gevreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void require_draws(const Chain& chain, const LogTarget& target) {
  if (chain.rows() == 0) throw Error("compare", "empty_chain", "chain has no draws");
  if (chain.dim() != target.dim()) throw Error("compare", "usage", "chain and model dimensions differ");
}

// log(mean(exp(a))) and the standard error of that log by batch means.
std::pair<double, double> log_mean_exp(std::span<const double> a) {
  const double top = *std::max_element(a.begin(), a.end());
  if (top == -kInf) return {-kInf, kInf};
  std::vector<double> scaled(a.size());
  std::transform(a.begin(), a.end(), scaled.begin(), [&](double v) { return std::exp(v - top); });
  const double mean = std::accumulate(scaled.begin(), scaled.end(), 0.0) / static_cast<double>(scaled.size());
  return {top + std::log(mean), batch_means_se(scaled) / mean};
}

}  // namespace

DicResult dic(const Chain& chain, const LogTarget& target) {
  require_draws(chain, target);
  const bool recorded = chain.log_lik.size() == static_cast<Eigen::Index>(chain.rows());
  auto deviance_at = [&](std::size_t g) {
    if (recorded) return -2.0 * chain.log_lik[static_cast<Eigen::Index>(g)];
    const Eigen::VectorXd row = chain.draws.row(static_cast<Eigen::Index>(g)).transpose();
    return -2.0 * target.log_likelihood(to_vector(row));
  };
  // Offsets from the first deviance keep a constant chain exact.
  const double first = deviance_at(0);
  double offset = 0.0;
  for (std::size_t g = 1; g < chain.rows(); ++g) offset += deviance_at(g) - first;
  DicResult out;
  out.d_avg = first + offset / static_cast<double>(chain.rows());
  const std::vector<double> mean = to_vector(posterior_mean(chain));
  out.d_at_mean = -2.0 * target.log_likelihood(mean);
  out.p_d = out.d_avg - out.d_at_mean;
  out.dic = out.d_avg + out.p_d;
  return out;
}

double bic(const Chain& chain, const LogTarget& target) {
  require_draws(chain, target);
  const std::vector<double> mean = to_vector(posterior_mean(chain));
  return -2.0 * target.log_likelihood(mean) +
         static_cast<double>(target.dim()) * std::log(static_cast<double>(target.n_obs()));
}

MarginalLikelihood marginal_likelihood_cj(const Chain& chain, const LogTarget& target, const CjConfig& config) {
  require_draws(chain, target);
  if (!target.prior_is_proper()) {
    throw Error("compare", "improper_prior", "marginal likelihood undefined under improper prior");
  }
  const std::size_t fresh = config.fresh_draws.value_or(chain.rows());
  if (fresh == 0) throw Error("compare", "config", "need at least one fresh proposal draw");
  const auto d = static_cast<Eigen::Index>(chain.dim());
  if (chain.proposal_cov.rows() != d || chain.proposal_cov.cols() != d) {
    throw Error("compare", "usage", "chain carries no frozen proposal covariance");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(chain.proposal_cov);
  if (llt.info() != Eigen::Success) throw Error("compare", "numeric", "proposal covariance is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  const double log_norm = -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;

  const Eigen::VectorXd star = posterior_mean(chain);
  const std::vector<double> star_vec = to_vector(star);
  const double ll_star = target.log_likelihood(star_vec);
  const double lprior_star = target.log_prior(star_vec);
  const double lpost_star = ll_star + lprior_star;
  if (!std::isfinite(lpost_star)) throw Error("compare", "numeric", "posterior mean has zero posterior density");

  // Numerator: alpha(theta_g, theta*) q(theta_g, theta*) over posterior draws.
  const bool recorded = chain.log_post.size() == static_cast<Eigen::Index>(chain.rows());
  std::vector<double> num(chain.rows());
  for (std::size_t g = 0; g < chain.rows(); ++g) {
    const Eigen::VectorXd theta = chain.draws.row(static_cast<Eigen::Index>(g)).transpose();
    const double lp = recorded ? chain.log_post[static_cast<Eigen::Index>(g)] : target.log_posterior(to_vector(theta));
    const Eigen::VectorXd u = L.triangularView<Eigen::Lower>().solve(star - theta);
    num[g] = std::min(0.0, lpost_star - lp) + log_norm - 0.5 * u.squaredNorm();
  }

  // Denominator: alpha(theta*, theta_j) for theta_j ~ q(theta*, .).
  CounterRng rng(config.seed, streams::kChibJeliazkov);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> den(fresh);
  Eigen::VectorXd z(d);
  for (std::size_t j = 0; j < fresh; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) z[i] = normal(rng);
    const Eigen::VectorXd theta = star + L * z;
    const double lp = target.log_posterior(to_vector(theta));
    den[j] = lp == -kInf ? 0.0 : std::min(1.0, std::exp(lp - lpost_star));
  }
  const double den_mean = std::accumulate(den.begin(), den.end(), 0.0) / static_cast<double>(fresh);
  if (!(den_mean > 0.0)) throw Error("compare", "numeric", "no fresh proposal draw was accepted");
  const double den_rel_se = batch_means_se(den) / den_mean;

  const auto [log_num, num_rel_se] = log_mean_exp(num);
  const double log_ordinate = log_num - std::log(den_mean);
  MarginalLikelihood out;
  out.log_ml = ll_star + lprior_star - log_ordinate;
  out.mc_se = std::sqrt(num_rel_se * num_rel_se + den_rel_se * den_rel_se);
  return out;
}

double posterior_predictive_deviance(std::span<const double> theta_hat, const ModelSpec& model,
                                     const Dataset& holdout) {
  holdout.validate(true);
  if (holdout.k() != model.data().k()) throw Error("compare", "usage", "holdout columns do not match the model");
  if (holdout.n() == 0) return 0.0;
  const SplitParams sp = split_params(theta_hat, model);
  return -2.0 * log_likelihood(holdout, model.link_at(sp.xi.value_or(0.0)), sp.beta);
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("compare", "usage", "holdout fraction must lie in (0, 1)");
  const std::size_t n = data.n();
  const auto n_hold = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (n_hold == 0 || n_hold >= n) throw Error("compare", "empty_part", "holdout split leaves an empty part");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  CounterRng rng(seed, streams::kHoldout);
  // Fisher-Yates with the library generator so splits do not depend on the
  // standard library's shuffle.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
    std::swap(order[i], order[std::min(j, i)]);
  }
  std::vector<std::size_t> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());
  std::sort(hold.begin(), hold.end());
  std::sort(train.begin(), train.end());
  return {data.select_rows(train), data.select_rows(hold)};
}

ComparisonReport compare_criteria(const Chain& chain, const LogTarget& target, const CjConfig& cj) {
  ComparisonReport r;
  const DicResult d = dic(chain, target);
  r.d_avg = d.d_avg;
  r.d_at_mean = d.d_at_mean;
  r.p_d = d.p_d;
  r.dic = d.dic;
  r.bic = d.d_at_mean + static_cast<double>(target.dim()) * std::log(static_cast<double>(target.n_obs()));
  if (target.prior_is_proper()) {
    const MarginalLikelihood ml = marginal_likelihood_cj(chain, target, cj);
    r.log_ml = ml.log_ml;
    r.log_ml_se = ml.mc_se;
  } else {
    r.log_ml = std::numeric_limits<double>::quiet_NaN();
    r.log_ml_se = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

nlohmann::ordered_json to_json(const ComparisonReport& report) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["d_avg"] = num(report.d_avg);
  j["d_at_mean"] = num(report.d_at_mean);
  j["p_d"] = num(report.p_d);
  j["dic"] = num(report.dic);
  j["bic"] = num(report.bic);
  j["log_ml"] = num(report.log_ml);
  j["log_ml_se"] = num(report.log_ml_se);
  j["d_post"] = report.d_post ? num(*report.d_post) : nlohmann::ordered_json(nullptr);
  return j;
}

}  // namespace gevreg
