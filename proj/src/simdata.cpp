#include "gevreg/simdata.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "gevreg/error.hpp"
#include "gevreg/rng.hpp"

namespace gevreg {

std::string to_string(SimId id) { return id == SimId::Sim1Cloglog ? "sim1" : "sim2"; }

SimId parse_sim_id(const std::string& name) {
  if (name == "sim1" || name == "sim1-cloglog") return SimId::Sim1Cloglog;
  if (name == "sim2" || name == "sim2-probit") return SimId::Sim2Probit;
  throw Error("simdata", "unknown_preset", "unknown simulation preset '" + name + "'");
}

Dataset simulate_covariates(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error("simdata", "usage", "n must be positive");
  CounterRng rng(seed, streams::kCovariates);
  std::normal_distribution<double> normal(0.0, 1.0);

  Dataset d;
  const auto rows = static_cast<Eigen::Index>(n);
  d.X.resize(rows, 5);
  d.y = Eigen::VectorXd::Zero(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double x2 = normal(rng);
    const int level = std::min(2, static_cast<int>(rng.uniform() * 3.0));
    const double x5 = rng.uniform() < 0.5 ? 1.0 : 0.0;
    d.X(i, 0) = 1.0;
    d.X(i, 1) = x2;
    d.X(i, 2) = level == 1 ? 1.0 : 0.0;
    d.X(i, 3) = level == 2 ? 1.0 : 0.0;
    d.X(i, 4) = x5;
  }
  d.column_names = {"intercept", "x2", "x3", "x4", "x5"};
  d.column_kinds = {ColumnKind::Intercept, ColumnKind::ContinuousStandardized, ColumnKind::Dummy, ColumnKind::Dummy,
                    ColumnKind::Dummy};
  d.standardization.assign(5, Standardization{});
  d.standardization[1] = Standardization{true, 0.0, std::numbers::ln2};
  return d;
}

Eigen::VectorXd simulate_binary(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta, const LinkSpec& link,
                                std::uint64_t seed) {
  if (X.cols() != beta.size()) throw Error("simdata", "usage", "beta length does not match the design");
  CounterRng rng(seed, streams::kResponse);
  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd y(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) y[i] = rng.uniform() < inv_link(eta[i], link) ? 1.0 : 0.0;
  return y;
}

SimTruth sim_truth(SimId id) {
  SimTruth t;
  t.beta.resize(5);
  if (id == SimId::Sim1Cloglog) {
    t.beta << 0.0, 1.0, 1.0, 0.5, -0.5;
    t.link = LinkSpec::cloglog();
  } else {
    t.beta << 0.0, 1.0, 1.0, 1.25, -0.25;
    t.link = LinkSpec::probit();
  }
  return t;
}

Dataset preset(SimId id, std::size_t n, std::uint64_t seed) {
  Dataset d = simulate_covariates(n, seed);
  const SimTruth truth = sim_truth(id);
  d.y = simulate_binary(d.X, truth.beta, truth.link, seed);
  return d;
}

Dataset preset_holdout(SimId id, std::size_t n, std::uint64_t seed) {
  return preset(id, n, CounterRng::mix64(seed ^ 0x686F6C646F7574ULL));
}

}  // namespace gevreg
