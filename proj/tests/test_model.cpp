#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "doctest.h"
#include "gevreg/error.hpp"
#include "gevreg/model.hpp"
#include "gevreg/simdata.hpp"
#include "test_util.hpp"

using namespace gevreg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

// Closed forms written out independently of the library's link code.
double oracle_p(double eta, LinkKind kind, double xi) {
  switch (kind) {
    case LinkKind::Logit: return 1.0 / (1.0 + std::exp(-eta));
    case LinkKind::Probit: return 0.5 * std::erfc(-eta / std::sqrt(2.0));
    case LinkKind::Cloglog: return 1.0 - std::exp(-std::exp(eta));
    case LinkKind::Gev:
      if (xi == 0.0) return 1.0 - std::exp(-std::exp(eta));
      return 1.0 - std::exp(-std::pow(1.0 - xi * eta, -1.0 / xi));
  }
  return 0.0;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("single observation") {
  Eigen::MatrixXd X(1, 1);
  X << 1.0;
  Eigen::VectorXd y(1);
  y << 1.0;
  const ModelSpec m(testutil::make_dataset(X, y), LinkKind::Logit, default_prior(1));
  const std::vector<double> beta{0.0};
  CHECK(log_likelihood(beta, std::nullopt, m) == doctest::Approx(-std::numbers::ln2).epsilon(1e-15));
  CHECK(deviance(beta, std::nullopt, m) == doctest::Approx(1.3862943611198906).epsilon(1e-15));
}

TEST_CASE("degenerate probability that agrees with y contributes zero") {
  Eigen::MatrixXd X(2, 1);
  X << 3.0, 0.5;
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  const ModelSpec m(testutil::make_dataset(X, y, false), LinkKind::Gev, default_prior(1));
  const std::vector<double> beta{1.0};
  const double xi = 0.5;  // eta_1 = 3 >= 1/xi
  const double expected = std::log(1.0 - oracle_p(0.5, LinkKind::Gev, xi));
  CHECK(log_likelihood(beta, xi, m) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(log_bernoulli(1.0, 3.0, LinkSpec::gev(xi)) == 0.0);
  CHECK(log_bernoulli(0.0, 3.0, LinkSpec::gev(xi)) == -kInf);

  Eigen::VectorXd y_bad(2);
  y_bad << 0.0, 0.0;
  const ModelSpec bad(testutil::make_dataset(X, y_bad, false), LinkKind::Gev, default_prior(1));
  CHECK(log_likelihood(beta, xi, bad) == -kInf);
  CHECK(deviance(beta, xi, bad) == kInf);
}

TEST_CASE("likelihood matches a product oracle") {
  const Dataset d = testutil::random_dataset(20, 3, 31);
  std::mt19937_64 gen(32);
  std::normal_distribution<double> z(0.0, 0.7);
  for (LinkKind kind : {LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog, LinkKind::Gev}) {
    const ModelSpec m(d, kind, default_prior(3));
    for (int rep = 0; rep < 5; ++rep) {
      const std::vector<double> beta{z(gen), z(gen), z(gen)};
      const double xi = kind == LinkKind::Gev ? 0.05 * rep - 0.1 : 0.0;
      double prod = 1.0;
      for (Eigen::Index i = 0; i < 20; ++i) {
        const double eta = d.X(i, 0) * beta[0] + d.X(i, 1) * beta[1] + d.X(i, 2) * beta[2];
        double p = oracle_p(eta, kind, xi);
        if (kind == LinkKind::Gev && 1.0 - xi * eta <= 0.0) p = xi > 0 ? 1.0 : 0.0;
        prod *= d.y[i] == 1.0 ? p : 1.0 - p;
      }
      const std::optional<double> shape = kind == LinkKind::Gev ? std::optional<double>(xi) : std::nullopt;
      CAPTURE(to_string(kind));
      CHECK(log_likelihood(beta, shape, m) == doctest::Approx(std::log(prod)).epsilon(1e-12));
      CHECK(deviance(beta, shape, m) == doctest::Approx(-2.0 * std::log(prod)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dimension mismatch is a usage error") {
  const ModelSpec m(testutil::random_dataset(10, 3, 33), LinkKind::Logit, default_prior(3));
  const std::vector<double> short_beta{0.0, 0.0};
  CHECK_THROWS_AS(log_likelihood(short_beta, std::nullopt, m), Error);
  const ModelSpec g(testutil::random_dataset(10, 3, 33), LinkKind::Gev, default_prior(3));
  const std::vector<double> beta{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(log_likelihood(beta, std::nullopt, g), Error);
}

TEST_CASE("normal prior") {
  const std::size_t k = 4;
  const ModelSpec m(testutil::random_dataset(10, k, 34), LinkKind::Gev, default_prior(k));
  const std::vector<double> zeros(k, 0.0);
  const double expected = -0.5 * static_cast<double>(k + 1) * std::log(2.0 * std::numbers::pi * 1e4);
  CHECK(log_prior(zeros, 0.0, m) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("flat prior with uniform shape") {
  const ModelSpec m(testutil::random_dataset(10, 2, 35), LinkKind::Gev, FlatBetaUniformXi{});
  const std::vector<double> beta{3.0, -7.0};
  CHECK(log_prior(beta, 1.0, m) == -kInf);
  CHECK(log_prior(beta, -1.0, m) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(log_prior(beta, 0.3, m) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(log_posterior(beta, 1.2, m) == -kInf);
}

TEST_CASE("jeffreys weights") {
  CHECK(jeffreys_weight(0.0, 0.5) == doctest::Approx(0.58197670686932642).epsilon(1e-14));
  CHECK(jeffreys_weight(3.0, 0.5) == 0.0);
  for (double xi : {-0.6, -0.2, 1e-10, 0.2, 0.5}) {
    for (int i = 0; i <= 40; ++i) {
      const double eta = -3.0 + 0.15 * i;
      if (1.0 - xi * eta <= 0.0) continue;
      const LinkSpec l = LinkSpec::gev(xi);
      const double p = inv_link(eta, l);
      if (p <= 1e-12 || p >= 1.0 - 1e-12) continue;
      const double dp = dinv_link_deta(eta, l);
      const double generic = dp * dp / (p * (1.0 - p));
      CAPTURE(xi);
      CAPTURE(eta);
      CHECK(jeffreys_weight(eta, xi) > 0.0);
      CHECK(jeffreys_weight(eta, xi) == doctest::Approx(generic).epsilon(1e-8));
    }
  }
}

TEST_CASE("jeffreys prior log determinant") {
  const Dataset d = testutil::random_dataset(15, 3, 36);
  const ModelSpec m(d, LinkKind::Gev, Jeffreys{4.0});
  const std::vector<double> beta{0.2, -0.3, 0.1};
  const double xi = 0.15;
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(3, 3);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const double eta = d.X.row(i).dot(Eigen::Vector3d(beta[0], beta[1], beta[2]));
    const LinkSpec l = LinkSpec::gev(xi);
    const double p = inv_link(eta, l);
    const double dp = dinv_link_deta(eta, l);
    info += dp * dp / (p * (1.0 - p)) * d.X.row(i).transpose() * d.X.row(i);
  }
  const double expected = 0.5 * std::log(info.determinant()) - 0.5 * std::log(2.0 * std::numbers::pi * 4.0) -
                          xi * xi / 8.0;
  CHECK(log_prior(beta, xi, m) == doctest::Approx(expected).epsilon(1e-10));
  // Outside the support of some row.
  const std::vector<double> far{8.0, 0.0, 0.0};
  CHECK(log_prior(far, 0.5, m) == -kInf);
}

TEST_CASE("jeffreys only for the gev link") {
  CHECK_THROWS_AS(ModelSpec(testutil::random_dataset(10, 2, 37), LinkKind::Logit, Jeffreys{}), Error);
}

TEST_CASE("posterior is likelihood plus prior") {
  const Dataset d = preset(SimId::Sim1Cloglog, 200, 1);
  const ModelSpec m(d, LinkKind::Gev, default_prior(5));
  const Eigen::VectorXd truth = sim_truth(SimId::Sim1Cloglog).beta;
  const auto beta = vec(truth);
  const double lp = log_posterior(beta, 0.0, m);
  CHECK(std::isfinite(lp));
  CHECK(lp == doctest::Approx(log_likelihood(beta, 0.0, m) + log_prior(beta, 0.0, m)).epsilon(1e-15));
}

TEST_CASE("row permutation invariance") {
  const Dataset d = testutil::random_dataset(30, 3, 38);
  std::vector<std::size_t> order(30);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(39));
  const Dataset p = d.select_rows(order);
  const std::vector<double> beta{0.3, -0.5, 0.8};
  for (LinkKind kind : {LinkKind::Logit, LinkKind::Cloglog, LinkKind::Gev}) {
    const std::optional<double> xi = kind == LinkKind::Gev ? std::optional<double>(-0.2) : std::nullopt;
    const ModelSpec a(d, kind, default_prior(3));
    const ModelSpec b(p, kind, default_prior(3));
    CHECK(log_likelihood(beta, xi, a) == doctest::Approx(log_likelihood(beta, xi, b)).epsilon(1e-13));
  }
}

TEST_CASE("symmetric links under response flip") {
  Dataset d = testutil::random_dataset(30, 3, 40);
  Dataset f = d;
  f.y = (1.0 - d.y.array()).matrix();
  const std::vector<double> beta{0.3, -0.5, 0.8};
  const std::vector<double> neg{-0.3, 0.5, -0.8};
  for (LinkKind kind : {LinkKind::Logit, LinkKind::Probit}) {
    const ModelSpec a(d, kind, default_prior(3));
    const ModelSpec b(f, kind, default_prior(3));
    CHECK(log_likelihood(beta, std::nullopt, a) ==
          doctest::Approx(log_likelihood(neg, std::nullopt, b)).epsilon(1e-13));
  }
}

TEST_CASE("posterior gradient matches central differences") {
  const Dataset d = testutil::random_dataset(40, 3, 41);
  for (LinkKind kind : {LinkKind::Logit, LinkKind::Probit, LinkKind::Cloglog, LinkKind::Gev}) {
    const ModelSpec m(d, kind, default_prior(3, 4.0));
    const std::optional<double> xi = kind == LinkKind::Gev ? std::optional<double>(0.1) : std::nullopt;
    const LinkSpec link = m.link_at(xi.value_or(0.0));
    const std::vector<double> beta{0.2, -0.4, 0.3};
    for (std::size_t j = 0; j < 3; ++j) {
      // Analytic score of the Bernoulli likelihood plus the normal prior.
      double grad = -beta[j] / 4.0;
      for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const double eta = d.X.row(i).dot(Eigen::Vector3d(beta[0], beta[1], beta[2]));
        const double p = inv_link(eta, link);
        const double dp = dinv_link_deta(eta, link);
        grad += (d.y[i] / p - (1.0 - d.y[i]) / (1.0 - p)) * dp * d.X(i, static_cast<Eigen::Index>(j));
      }
      const double h = 1e-5;
      auto up = beta;
      auto down = beta;
      up[j] += h;
      down[j] -= h;
      const double fd = (log_posterior(up, xi, m) - log_posterior(down, xi, m)) / (2 * h);
      CAPTURE(to_string(kind));
      CHECK(fd == doctest::Approx(grad).epsilon(1e-5));
    }
  }
}

TEST_CASE("regression target") {
  const Dataset d = preset(SimId::Sim1Cloglog, 300, 2);
  const ModelSpec m(d, LinkKind::Gev, default_prior(5));
  const RegressionTarget t(m);
  CHECK(t.dim() == 6);
  CHECK(t.n_obs() == 300);
  CHECK(t.prior_is_proper());
  const auto start = t.initial_point();
  REQUIRE(start.size() == 6);
  CHECK(start.back() == kInitialXi);
  CHECK(std::isfinite(t.log_posterior(start)));
  CHECK(t.parameter_names().back() == "xi");
  CHECK(t.log_posterior(start) == doctest::Approx(t.log_likelihood(start) + t.log_prior(start)).epsilon(1e-15));
  CHECK_FALSE(RegressionTarget(ModelSpec(d, LinkKind::Gev, FlatBetaUniformXi{})).prior_is_proper());
  CHECK_FALSE(RegressionTarget(ModelSpec(d, LinkKind::Gev, Jeffreys{})).prior_is_proper());
}

TEST_CASE("irls recovers the logit maximum likelihood estimate") {
  const Dataset d = testutil::random_dataset(200, 3, 42);
  const auto fit = fit_irls(d, LinkSpec::logit());
  REQUIRE(fit);
  // Score is zero at the estimate.
  Eigen::VectorXd score = Eigen::VectorXd::Zero(3);
  for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-d.X.row(i).dot(fit->beta)));
    score += (d.y[i] - p) * d.X.row(i).transpose();
  }
  CHECK(score.norm() < 1e-8);
}

TEST_CASE("dataset validation") {
  Dataset d = testutil::random_dataset(5, 2, 43);
  d.y[0] = 0.5;
  CHECK_THROWS_AS(d.validate(), Error);
  Dataset e = testutil::random_dataset(5, 2, 43);
  e.X(1, 1) = std::nan("");
  CHECK_THROWS_AS(e.validate(), Error);
  Dataset f = testutil::random_dataset(5, 2, 43);
  f.standardization[1].scale = 0.0;
  CHECK_THROWS_AS(f.validate(), Error);
  CHECK_THROWS_AS(f.column_index("nope"), Error);
}

}  // TEST_SUITE
