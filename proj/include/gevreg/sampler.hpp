#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gevreg/model.hpp"

namespace gevreg {

// Shape of the frozen random-walk proposal covariance.
enum class ProposalShape { Diagonal, Full };

std::string to_string(ProposalShape shape);
ProposalShape parse_proposal_shape(const std::string& name);

struct McmcConfig {
  std::size_t n_iterations = 25000;
  std::size_t burn_in = 5000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
  std::size_t n_chains = 1;
  // Fixed per-parameter proposal standard deviations; nullopt means "auto",
  // which tunes the proposal during burn-in and freezes it afterwards.
  std::optional<std::vector<double>> proposal_scales;
  std::size_t adapt_window = 100;
  double target_acceptance = 0.234;
  ProposalShape proposal_shape = ProposalShape::Diagonal;

  void validate(std::size_t dim) const;
  std::size_t retained() const { return (n_iterations - burn_in) / thin; }
};

struct Chain {
  Eigen::MatrixXd draws;  // retained iterations x dim
  Eigen::VectorXd log_post;
  Eigen::VectorXd log_lik;
  std::vector<double> acceptance_rate;  // one entry per update block
  std::uint64_t seed_used = 0;
  std::size_t chain_index = 0;
  // Covariance of the random-walk increment used for every retained draw.
  Eigen::MatrixXd proposal_cov;
  std::vector<std::string> names;

  std::size_t rows() const { return static_cast<std::size_t>(draws.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(draws.cols()); }
  std::span<const double> column(std::size_t j) const {
    return {draws.col(static_cast<Eigen::Index>(j)).data(), rows()};
  }
};

/// Random-walk Metropolis-Hastings with a single joint block. Chains run on
/// separate threads; chain c draws from stream (seed, c), so the result is a
/// pure function of (target, config).
std::vector<Chain> run_mh(const LogTarget& target, const McmcConfig& config);

Eigen::VectorXd posterior_mean(const Chain& chain);
Eigen::VectorXd posterior_sd(const Chain& chain);

/// Shortest window holding ceil(credibility * m) consecutive order statistics
/// (leftmost on ties). Requires at least 10 values.
std::pair<double, double> hpd_interval(std::span<const double> values, double credibility);
std::pair<double, double> hpd_interval(const Chain& chain, std::size_t column, double credibility);

struct ChainDiagnostics {
  std::vector<double> geweke_z;
  std::vector<double> ess;
  std::vector<bool> degenerate_columns;
  double acceptance_rate = 0.0;
  bool degenerate = false;  // any column constant
};

ChainDiagnostics diagnostics(const Chain& chain);

/// Geweke z comparing the first 10% with the last 50%, each variance taken
/// from batch means.
double geweke_z(std::span<const double> values);

/// Effective sample size with Geyer's initial positive sequence truncation.
double effective_sample_size(std::span<const double> values);

/// Monte Carlo standard error of the mean by non-overlapping batch means
/// (batch length floor(sqrt(m))).
double batch_means_se(std::span<const double> values);

/// Headered CSV, one row per retained draw: parameter names then log_post.
void write_chain_csv(const Chain& chain, std::ostream& out);

}  // namespace gevreg
