#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "gevreg/model.hpp"
#include "gevreg/sampler.hpp"

namespace gevreg {

// Overlap check on X*, the design with rows tau_i x_i', tau_i = 2 y_i - 1.
// A direction beta != 0 with X* beta >= 0 means the data are completely or
// quasi-completely separated, and no strictly positive a with a' X* = 0
// exists, which is what posterior propriety under a flat prior relies on.
struct SeparationReport {
  std::size_t x_star_rank = 0;
  bool separated = false;
  std::optional<Eigen::VectorXd> certificate;  // X* certificate >= 0, not all zero
  std::string blocks_checked;
};

SeparationReport separation_check(const Dataset& data);
nlohmann::ordered_json to_json(const SeparationReport& report);

struct FitBin {
  std::string label;
  double lower = 0.0;  // -inf for the first bin
  double upper = 0.0;  // +inf for the last bin
  std::size_t n_obs = 0;
  double observed_ones = 0.0;
  double expected_ones = 0.0;
};

/// Bins [e_{j-1}, e_j) with open ends below e_0 and at or above e_last, so
/// m edges give m + 1 bins. Edges must be strictly increasing.
std::vector<FitBin> binned_table(std::span<const double> values, std::span<const double> y,
                                 std::span<const double> p_hat, std::span<const double> edges);

/// Observed against expected successes at the chain's posterior mean.
std::vector<FitBin> binned_fit_table(const Chain& chain, const ModelSpec& model, const std::string& column,
                                     std::span<const double> edges);

/// Same, for any data set scored at a fixed parameter vector.
std::vector<FitBin> binned_fit_table(std::span<const double> theta_hat, const ModelSpec& model, const Dataset& data,
                                     const std::string& column, std::span<const double> edges);

/// Fitted probabilities at theta_hat for every row of data.
Eigen::VectorXd fitted_probabilities(std::span<const double> theta_hat, const ModelSpec& model, const Dataset& data);

}  // namespace gevreg
