#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gevreg/links.hpp"

namespace gevreg {

enum class ColumnKind { Intercept, ContinuousStandardized, Dummy };

std::string to_string(ColumnKind kind);

// How a continuous column was derived from its original values:
// stored = ((log_applied ? log(original) : original) - center) / scale.
struct Standardization {
  bool log_applied = false;
  double center = 0.0;
  double scale = 1.0;
};

struct Dataset {
  Eigen::VectorXd y;  // entries 0 or 1
  Eigen::MatrixXd X;  // n x k, first column the intercept by convention
  std::vector<std::string> column_names;
  std::vector<ColumnKind> column_kinds;
  std::vector<Standardization> standardization;  // one per column

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t k() const { return static_cast<std::size_t>(X.cols()); }

  /// Checks shapes, binary y, finite X and positive scales. Empty datasets
  /// are rejected unless allow_empty is set.
  void validate(bool allow_empty = false) const;

  /// Column position by name; throws when absent.
  std::size_t column_index(const std::string& name) const;

  /// Subset of rows, in the given order, with the same column metadata.
  Dataset select_rows(std::span<const std::size_t> rows) const;
};

struct NormalIndependent {
  std::vector<double> beta_variances;  // one per column
  double xi_variance = 1e4;
};

// pi(beta) proportional to 1, xi ~ U[xi_low, xi_high).
struct FlatBetaUniformXi {
  double xi_low = -1.0;
  double xi_high = 1.0;
};

// pi(beta | xi) proportional to |X' Omega X|^{1/2}, xi ~ N(0, xi_prior_variance).
struct Jeffreys {
  double xi_prior_variance = 1e4;
};

using PriorSpec = std::variant<NormalIndependent, FlatBetaUniformXi, Jeffreys>;

/// Independent N(0, variance) priors on every coefficient and on xi.
PriorSpec default_prior(std::size_t k, double variance = 1e4);

std::string prior_name(const PriorSpec& prior);

class ModelSpec {
 public:
  ModelSpec(Dataset data, LinkKind link, PriorSpec prior);

  const Dataset& data() const { return data_; }
  LinkKind link() const { return link_; }
  const PriorSpec& prior() const { return prior_; }

  bool has_shape() const { return link_ == LinkKind::Gev; }
  /// k coefficients, plus xi under the GEV link.
  std::size_t dim() const { return data_.k() + (has_shape() ? 1 : 0); }
  std::vector<std::string> parameter_names() const;

  /// Link at the given shape (ignored unless GEV).
  LinkSpec link_at(double xi) const;

 private:
  Dataset data_;
  LinkKind link_;
  PriorSpec prior_;
};

// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] before taking
// logs, except at exact GEV support edges.
inline constexpr double kProbFloor = 1e-15;

/// Bernoulli log-likelihood of one observation; -inf only when the GEV
/// support forces a probability of exactly 0 for the observed outcome.
double log_bernoulli(double y, double eta, const LinkSpec& link);

/// Sum over rows, accumulated sequentially in row order.
double log_likelihood(const Dataset& data, const LinkSpec& link, std::span<const double> beta);

double log_likelihood(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model);
double deviance(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model);
double log_prior(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model);
double log_posterior(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model);

/// Jeffreys weight (1 - xi eta)^{-2/xi - 2} [exp{(1 - xi eta)^{-1/xi}} - 1]^{-1};
/// zero outside the support.
double jeffreys_weight(double eta, double xi);

// Splits a parameter vector theta = (beta, [xi]) for the model.
struct SplitParams {
  std::span<const double> beta;
  std::optional<double> xi;
};
SplitParams split_params(std::span<const double> theta, const ModelSpec& model);

// Unnormalized log density over a flat parameter vector. The sampler, the
// marginal-likelihood estimator and the criteria only see this interface.
class LogTarget {
 public:
  virtual ~LogTarget() = default;

  virtual std::size_t dim() const = 0;
  virtual double log_likelihood(std::span<const double> theta) const = 0;
  virtual double log_prior(std::span<const double> theta) const = 0;
  virtual bool prior_is_proper() const = 0;
  /// Number of observations, for BIC.
  virtual std::size_t n_obs() const = 0;

  /// Starting point with finite log posterior, or empty if none is known.
  virtual std::vector<double> initial_point() const = 0;
  /// Rough posterior standard deviations used to shape the first proposal.
  virtual std::vector<double> initial_scales() const;
  virtual std::vector<std::string> parameter_names() const;

  double log_posterior(std::span<const double> theta) const;
};

// Posterior of a binary regression ModelSpec as a LogTarget.
class RegressionTarget : public LogTarget {
 public:
  explicit RegressionTarget(const ModelSpec& model);

  std::size_t dim() const override { return model_.dim(); }
  double log_likelihood(std::span<const double> theta) const override;
  double log_prior(std::span<const double> theta) const override;
  bool prior_is_proper() const override;
  std::size_t n_obs() const override { return model_.data().n(); }
  std::vector<double> initial_point() const override;
  std::vector<double> initial_scales() const override;
  std::vector<std::string> parameter_names() const override { return model_.parameter_names(); }

  const ModelSpec& model() const { return model_; }

 private:
  ModelSpec model_;
  std::vector<double> start_;
  std::vector<double> start_scales_;
};

// Fisher-scoring fit of beta under a fixed link. Returns nullopt when the
// iteration fails to converge (for example under separation).
struct IrlsFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // inverse Fisher information at beta
  int iterations = 0;
};
std::optional<IrlsFit> fit_irls(const Dataset& data, const LinkSpec& link, int max_iterations = 100);

// Shape used to start GEV chains.
inline constexpr double kInitialXi = 0.1;

}  // namespace gevreg
