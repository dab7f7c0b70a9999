#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "gevreg/error.hpp"
#include "gevreg/simdata.hpp"

using namespace gevreg;

namespace {

// Population success rate: x2 ~ N(0,1), three equiprobable levels, x5 fair coin.
double population_rate(SimId id) {
  const SimTruth t = sim_truth(id);
  double total = 0.0;
  for (int level = 0; level < 3; ++level) {
    for (int x5 = 0; x5 < 2; ++x5) {
      const double off = t.beta[0] + (level == 1 ? t.beta[2] : 0.0) + (level == 2 ? t.beta[3] : 0.0) + x5 * t.beta[4];
      auto f = [&](double z) {
        return inv_link(off + t.beta[1] * z, t.link) * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
      };
      total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -12.0, 12.0, 15, 1e-13) / 6.0;
    }
  }
  return total;
}

}  // namespace

TEST_SUITE("simdata") {

TEST_CASE("covariate distributions") {
  const std::size_t n = 40000;
  const Dataset d = simulate_covariates(n, 21);
  const double nn = static_cast<double>(n);
  CHECK(d.X.col(0).isOnes());
  const double mean = d.X.col(1).mean();
  const double var = (d.X.col(1).array() - mean).square().sum() / (nn - 1.0);
  CHECK(std::abs(mean) < 4.0 / std::sqrt(nn));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / nn));
  const double se3 = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / nn);
  CHECK(std::abs(d.X.col(2).mean() - 1.0 / 3.0) < 4.0 * se3);
  CHECK(std::abs(d.X.col(3).mean() - 1.0 / 3.0) < 4.0 * se3);
  CHECK(std::abs(d.X.col(4).mean() - 0.5) < 4.0 * std::sqrt(0.25 / nn));
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    REQUIRE(d.X(i, 2) + d.X(i, 3) <= 1.0);
    for (Eigen::Index j = 2; j < 5; ++j) REQUIRE((d.X(i, j) == 0.0 || d.X(i, j) == 1.0));
  }
  CHECK(d.column_names == std::vector<std::string>{"intercept", "x2", "x3", "x4", "x5"});
  CHECK(d.standardization[1].log_applied);
  CHECK(d.standardization[1].scale == std::numbers::ln2);
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("response rates") {
  const double p1 = population_rate(SimId::Sim1Cloglog);
  const double p2 = population_rate(SimId::Sim2Probit);
  CHECK(std::abs(p1 - 0.70) <= 0.03);
  CHECK(p2 == doctest::Approx(0.6607).epsilon(1e-3));
  const std::size_t n = 100000;
  const double band1 = 4.0 * std::sqrt(p1 * (1 - p1) / n);
  const double band2 = 4.0 * std::sqrt(p2 * (1 - p2) / n);
  CHECK(std::abs(preset(SimId::Sim1Cloglog, n, 3).y.mean() - p1) < band1);
  CHECK(std::abs(preset(SimId::Sim2Probit, n, 3).y.mean() - p2) < band2);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const double r = preset(SimId::Sim1Cloglog, 1000, seed).y.mean();
    CHECK(std::abs(r - 0.70) <= 0.03 + 4.0 * std::sqrt(0.25 / 1000.0));
  }
}

TEST_CASE("determinism and seeds") {
  const Dataset a = preset(SimId::Sim2Probit, 500, 42);
  const Dataset b = preset(SimId::Sim2Probit, 500, 42);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  const Dataset c = preset(SimId::Sim2Probit, 500, 43);
  CHECK(a.X != c.X);
  // The same covariates for both presets at a given seed.
  CHECK(preset(SimId::Sim1Cloglog, 500, 42).X == a.X);
  const Dataset h = preset_holdout(SimId::Sim2Probit, 500, 42);
  CHECK(h.X != a.X);
  // Prefixes agree across n.
  CHECK(simulate_covariates(100, 5).X == simulate_covariates(200, 5).X.topRows(100));
}

TEST_CASE("small designs") {
  const Dataset one = preset(SimId::Sim1Cloglog, 1, 8);
  CHECK(one.n() == 1);
  CHECK(one.k() == 5);
  CHECK(one.y.size() == 1);
  CHECK_THROWS_AS(simulate_covariates(0, 1), Error);
  const Dataset d = simulate_covariates(200, 9);
  CHECK(Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(d.X).rank() == 5);
}

TEST_CASE("simulated response follows the link") {
  const Dataset d = simulate_covariates(300, 10);
  Eigen::VectorXd beta(5);
  beta << 5.0, 0.0, 0.0, 0.0, 0.0;
  // GEV with xi = 0.5 has probability exactly 1 for eta >= 2.
  CHECK(simulate_binary(d.X, beta, LinkSpec::gev(0.5), 1).isOnes());
  beta[0] = -5.0;
  CHECK(simulate_binary(d.X, beta, LinkSpec::gev(-0.5), 1).isZero());
  CHECK_THROWS_AS(simulate_binary(d.X, Eigen::VectorXd::Zero(3), LinkSpec::logit(), 1), Error);
  CHECK(parse_sim_id("sim2") == SimId::Sim2Probit);
  CHECK_THROWS_AS(parse_sim_id("sim3"), Error);
}

}  // TEST_SUITE
