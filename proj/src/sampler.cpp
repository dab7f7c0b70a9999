#include "gevreg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include "gevreg/error.hpp"
#include "gevreg/rng.hpp"

namespace gevreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Running mean and covariance of burn-in draws.
class RunningMoments {
 public:
  explicit RunningMoments(Eigen::Index d) : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::MatrixXd::Zero(d, d)) {}

  void add(const Eigen::VectorXd& x) {
    ++count_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_).transpose();
  }

  std::size_t count() const { return count_; }
  Eigen::MatrixXd covariance() const { return m2_ / static_cast<double>(count_ - 1); }

 private:
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

// Lower Cholesky factor of a proposal covariance; diagonal shapes only keep
// the variances.
Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& cov, ProposalShape shape) {
  const Eigen::Index d = cov.rows();
  if (shape == ProposalShape::Diagonal) {
    return cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    return cov.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  return llt.matrixL().toDenseMatrix().topLeftCorner(d, d);
}

Chain run_single_chain(const LogTarget& target, const McmcConfig& config, std::size_t chain_index,
                       const std::vector<double>& start) {
  const auto d = static_cast<Eigen::Index>(target.dim());
  CounterRng rng(config.seed, streams::kChainBase + chain_index);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Initial proposal covariance.
  Eigen::MatrixXd base_cov(d, d);
  base_cov.setZero();
  const bool adaptive = !config.proposal_scales.has_value();
  if (adaptive) {
    const std::vector<double> sd = target.initial_scales();
    const double factor = 2.38 * 2.38 / static_cast<double>(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double s = j < static_cast<Eigen::Index>(sd.size()) && sd[j] > 0.0 && std::isfinite(sd[j]) ? sd[j] : 0.1;
      base_cov(j, j) = factor * s * s;
    }
  } else {
    for (Eigen::Index j = 0; j < d; ++j) base_cov(j, j) = (*config.proposal_scales)[j] * (*config.proposal_scales)[j];
  }
  double log_factor = 0.0;
  Eigen::MatrixXd factor = proposal_factor(base_cov, config.proposal_shape);

  Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(start.data(), d);
  double lprior = target.log_prior(start);
  double llik = target.log_likelihood(start);
  double lpost = lprior + llik;

  Chain chain;
  chain.chain_index = chain_index;
  chain.seed_used = config.seed;
  chain.names = target.parameter_names();
  const std::size_t kept = config.retained();
  chain.draws.resize(static_cast<Eigen::Index>(kept), d);
  chain.log_post.resize(static_cast<Eigen::Index>(kept));
  chain.log_lik.resize(static_cast<Eigen::Index>(kept));

  RunningMoments moments(d);
  const std::size_t adapt_start = config.burn_in / 5;
  const std::size_t min_for_shape = std::max<std::size_t>(2 * config.adapt_window, 10 * static_cast<std::size_t>(d));

  Eigen::VectorXd z(d);
  Eigen::VectorXd proposal(d);
  std::size_t accepted_after_burn = 0;
  std::size_t row = 0;
  for (std::size_t it = 0; it < config.n_iterations; ++it) {
    const bool burning = it < config.burn_in;
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
    proposal = theta + std::exp(log_factor) * (factor * z);

    const std::span<const double> prop_span(proposal.data(), static_cast<std::size_t>(d));
    double prop_prior = target.log_prior(prop_span);
    double prop_lik = -kInf;
    double prop_post = -kInf;
    if (prop_prior > -kInf && !std::isnan(prop_prior)) {
      prop_lik = target.log_likelihood(prop_span);
      if (!std::isnan(prop_lik)) prop_post = prop_prior + prop_lik;
    }

    const double log_ratio = prop_post - lpost;
    const double accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    if (prop_post > -kInf && rng.uniform() < accept_prob) {
      theta = proposal;
      lprior = prop_prior;
      llik = prop_lik;
      lpost = prop_post;
      if (!burning) ++accepted_after_burn;
    }

    if (burning && adaptive) {
      // Robbins-Monro on the global log scale.
      const double gain = std::pow(1.0 + static_cast<double>(it) / static_cast<double>(config.adapt_window), -0.6);
      log_factor += gain * (accept_prob - config.target_acceptance);
      log_factor = std::clamp(log_factor, -10.0, 10.0);
      if (it >= adapt_start) moments.add(theta);
      if ((it + 1) % config.adapt_window == 0 && moments.count() >= min_for_shape) {
        Eigen::MatrixXd cov = moments.covariance();
        cov.diagonal().array() += 1e-10;
        // The running covariance replaces the initial guess; the global scale
        // keeps adapting on top of it.
        const Eigen::MatrixXd next = (2.38 * 2.38 / static_cast<double>(d)) * cov;
        if (next.allFinite() && next.diagonal().maxCoeff() > 0.0) {
          factor = proposal_factor(next, config.proposal_shape);
        }
      }
    }

    if (!burning) {
      const std::size_t t = it - config.burn_in + 1;
      if (t % config.thin == 0 && row < kept) {
        chain.draws.row(static_cast<Eigen::Index>(row)) = theta.transpose();
        chain.log_post[static_cast<Eigen::Index>(row)] = lpost;
        chain.log_lik[static_cast<Eigen::Index>(row)] = llik;
        ++row;
      }
    }
  }

  const Eigen::MatrixXd scaled = std::exp(log_factor) * factor;
  chain.proposal_cov = scaled * scaled.transpose();
  const std::size_t post_burn = config.n_iterations - config.burn_in;
  chain.acceptance_rate = {post_burn > 0 ? static_cast<double>(accepted_after_burn) / static_cast<double>(post_burn) : 0.0};
  return chain;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance_of(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

// Variance of the sample mean from non-overlapping batch means.
double batch_means_var(std::span<const double> x) {
  const std::size_t m = x.size();
  if (m < 2) return 0.0;
  const std::size_t b = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(m)))));
  const std::size_t a = m / b;
  if (a < 2) return variance_of(x) / static_cast<double>(m);
  std::vector<double> means(a);
  for (std::size_t i = 0; i < a; ++i) means[i] = mean_of(x.subspan(i * b, b));
  return variance_of(means) / static_cast<double>(a);
}

}  // namespace

std::string to_string(ProposalShape shape) { return shape == ProposalShape::Full ? "full" : "diagonal"; }

ProposalShape parse_proposal_shape(const std::string& name) {
  if (name == "diagonal") return ProposalShape::Diagonal;
  if (name == "full") return ProposalShape::Full;
  throw Error("sampler", "config", "unknown proposal shape '" + name + "'");
}

void McmcConfig::validate(std::size_t dim) const {
  if (n_iterations == 0) throw Error("sampler", "config", "n_iterations must be positive");
  if (burn_in >= n_iterations) throw Error("sampler", "config", "burn_in must be smaller than n_iterations");
  if (thin == 0) throw Error("sampler", "config", "thin must be positive");
  if (n_chains == 0) throw Error("sampler", "config", "n_chains must be positive");
  if (adapt_window == 0) throw Error("sampler", "config", "adapt_window must be positive");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    throw Error("sampler", "config", "target_acceptance must lie in (0, 1)");
  }
  if (retained() == 0) throw Error("sampler", "config", "no draws would be retained");
  if (proposal_scales) {
    if (proposal_scales->size() != dim) throw Error("sampler", "config", "need one proposal scale per parameter");
    bool any_positive = false;
    for (double s : *proposal_scales) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw Error("sampler", "config", "proposal scales must be finite and >= 0");
      any_positive = any_positive || s > 0.0;
    }
    if (!any_positive) throw Error("sampler", "config", "all proposal scales are zero");
  }
}

std::vector<Chain> run_mh(const LogTarget& target, const McmcConfig& config) {
  config.validate(target.dim());
  const std::vector<double> start = target.initial_point();
  if (start.size() != target.dim() || !std::isfinite(target.log_posterior(start))) {
    throw Error("sampler", "init", "no starting point with finite log posterior");
  }

  std::vector<Chain> chains(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  auto work = [&](std::size_t c) {
    try {
      chains[c] = run_single_chain(target, config, c, start);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.n_chains == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(config.n_chains);
    for (std::size_t c = 0; c < config.n_chains; ++c) threads.emplace_back(work, c);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return chains;
}

Eigen::VectorXd posterior_mean(const Chain& chain) {
  if (chain.rows() == 0) throw Error("sampler", "empty_chain", "chain has no draws");
  // Sums of offsets from the first draw, so a constant column returns that
  // value exactly.
  const Eigen::RowVectorXd first = chain.draws.row(0);
  Eigen::RowVectorXd offset = Eigen::RowVectorXd::Zero(chain.draws.cols());
  for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) offset += chain.draws.row(i) - first;
  return (first + offset / static_cast<double>(chain.draws.rows())).transpose();
}

Eigen::VectorXd posterior_sd(const Chain& chain) {
  Eigen::VectorXd sd(chain.draws.cols());
  for (Eigen::Index j = 0; j < sd.size(); ++j) sd[j] = std::sqrt(variance_of(chain.column(static_cast<std::size_t>(j))));
  return sd;
}

std::pair<double, double> hpd_interval(std::span<const double> values, double credibility) {
  if (!(credibility > 0.0 && credibility < 1.0)) throw Error("sampler", "usage", "credibility must lie in (0, 1)");
  if (values.size() < 10) throw Error("sampler", "too_few_draws", "HPD interval needs at least 10 draws");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const auto window = std::min<std::size_t>(m, static_cast<std::size_t>(std::ceil(credibility * static_cast<double>(m))));
  std::size_t best = 0;
  double best_width = kInf;
  for (std::size_t i = 0; i + window <= m; ++i) {
    const double width = sorted[i + window - 1] - sorted[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {sorted[best], sorted[best + window - 1]};
}

std::pair<double, double> hpd_interval(const Chain& chain, std::size_t column, double credibility) {
  if (column >= chain.dim()) throw Error("sampler", "usage", "column out of range");
  return hpd_interval(chain.column(column), credibility);
}

double batch_means_se(std::span<const double> values) { return std::sqrt(batch_means_var(values)); }

double geweke_z(std::span<const double> values) {
  const std::size_t m = values.size();
  const std::size_t first = m / 10;
  const std::size_t last = m / 2;
  if (first < 2 || last < 2) throw Error("sampler", "too_few_draws", "Geweke diagnostic needs at least 20 draws");
  const auto a = values.first(first);
  const auto b = values.last(last);
  const double var = batch_means_var(a) + batch_means_var(b);
  if (!(var > 0.0)) return 0.0;
  return (mean_of(a) - mean_of(b)) / std::sqrt(var);
}

double effective_sample_size(std::span<const double> values) {
  const std::size_t m = values.size();
  if (m < 4) return static_cast<double>(m);
  const double mu = mean_of(values);
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < m; ++i) s += (values[i] - mu) * (values[i + lag] - mu);
    return s / static_cast<double>(m);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return 0.0;
  // tau = -1 + 2 * sum of positive pair sums (rho_{2k} + rho_{2k+1}).
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < m; ++k) {
    const double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (!(pair > 0.0)) break;
    tau += 2.0 * pair;
  }
  return static_cast<double>(m) / std::max(tau, 1e-12);
}

ChainDiagnostics diagnostics(const Chain& chain) {
  ChainDiagnostics out;
  out.acceptance_rate = chain.acceptance_rate.empty() ? 0.0 : chain.acceptance_rate.front();
  for (std::size_t j = 0; j < chain.dim(); ++j) {
    const auto col = chain.column(j);
    const bool constant = variance_of(col) <= 0.0;
    out.degenerate_columns.push_back(constant);
    if (constant) {
      out.degenerate = true;
      out.geweke_z.push_back(0.0);
      out.ess.push_back(0.0);
      continue;
    }
    out.geweke_z.push_back(col.size() >= 20 ? geweke_z(col) : 0.0);
    out.ess.push_back(effective_sample_size(col));
  }
  return out;
}

void write_chain_csv(const Chain& chain, std::ostream& out) {
  for (const auto& name : chain.names) out << name << ',';
  out << "log_post\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < chain.draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < chain.draws.cols(); ++j) out << chain.draws(i, j) << ',';
    out << chain.log_post[i] << '\n';
  }
}

}  // namespace gevreg
