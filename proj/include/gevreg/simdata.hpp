#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gevreg/links.hpp"
#include "gevreg/model.hpp"

namespace gevreg {

enum class SimId { Sim1Cloglog, Sim2Probit };

std::string to_string(SimId id);
SimId parse_sim_id(const std::string& name);

/// Design with columns intercept, x2 ~ N(0, 1), (x3, x4) dummies of a
/// uniform three-level nominal (reference level has neither), x5 ~ Bernoulli(1/2).
/// The response is left at zero.
///
/// x2 is recorded as the standardized natural log of a latent original
/// covariate 2^{x2} (center 0, scale log 2), so doubling the original value
/// shifts x2 by exactly one.
Dataset simulate_covariates(std::size_t n, std::uint64_t seed);

/// y_i ~ Bernoulli(inv_link(x_i' beta)).
Eigen::VectorXd simulate_binary(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, const LinkSpec& link,
                                std::uint64_t seed);

struct SimTruth {
  Eigen::VectorXd beta;
  LinkSpec link;
};

SimTruth sim_truth(SimId id);

Dataset preset(SimId id, std::size_t n, std::uint64_t seed);

/// Fresh data set of the same design and coefficients, for hold-out checks.
Dataset preset_holdout(SimId id, std::size_t n, std::uint64_t seed);

}  // namespace gevreg
