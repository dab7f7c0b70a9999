#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "gevreg/compare.hpp"
#include "gevreg/error.hpp"
#include "gevreg/simdata.hpp"
#include "normal_mean.hpp"
#include "test_util.hpp"

using namespace gevreg;
using testutil::NormalMean;
using testutil::normal_sample;

namespace {

// log L(theta) = -5 - theta^2 / 2 in one dimension.
class Quadratic : public LogTarget {
 public:
  explicit Quadratic(std::size_t dim = 1, std::size_t n = 1) : dim_(dim), n_(n) {}
  std::size_t dim() const override { return dim_; }
  double log_likelihood(std::span<const double> t) const override { return -5.0 - 0.5 * t[0] * t[0]; }
  double log_prior(std::span<const double>) const override { return 0.0; }
  bool prior_is_proper() const override { return false; }
  std::size_t n_obs() const override { return n_; }
  std::vector<double> initial_point() const override { return std::vector<double>(dim_, 0.0); }

 private:
  std::size_t dim_;
  std::size_t n_;
};

Chain make_chain(const Eigen::MatrixXd& draws, const LogTarget& t) {
  Chain c;
  c.draws = draws;
  c.log_lik.resize(draws.rows());
  c.log_post.resize(draws.rows());
  for (Eigen::Index i = 0; i < draws.rows(); ++i) {
    const Eigen::VectorXd r = draws.row(i).transpose();
    c.log_lik[i] = t.log_likelihood({r.data(), static_cast<std::size_t>(r.size())});
    c.log_post[i] = c.log_lik[i] + t.log_prior({r.data(), static_cast<std::size_t>(r.size())});
  }
  c.names = t.parameter_names();
  c.acceptance_rate = {0.0};
  c.proposal_cov = Eigen::MatrixXd::Identity(draws.cols(), draws.cols()) * 0.01;
  return c;
}


}  // namespace

TEST_SUITE("compare") {

TEST_CASE("dic hand case") {
  const Quadratic t;
  Eigen::MatrixXd draws(2, 1);
  draws << 0.0, 2.0;
  const Chain c = make_chain(draws, t);
  const DicResult d = dic(c, t);
  CHECK(d.d_avg == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(d.d_at_mean == doctest::Approx(11.0).epsilon(1e-15));
  CHECK(d.p_d == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.dic == doctest::Approx(13.0).epsilon(1e-15));
  // Same answer when the chain carries no recorded likelihoods.
  Chain bare = c;
  bare.log_lik.resize(0);
  CHECK(dic(bare, t).dic == doctest::Approx(13.0).epsilon(1e-15));
}

TEST_CASE("dic of a constant chain") {
  const ModelSpec m(preset(SimId::Sim1Cloglog, 200, 1), LinkKind::Gev, default_prior(5));
  const RegressionTarget t(m);
  Eigen::MatrixXd draws(57, 6);
  for (Eigen::Index i = 0; i < draws.rows(); ++i) draws.row(i) << 0.1, 0.9, 1.1, 0.3, -0.7, 0.13;
  const DicResult d = dic(make_chain(draws, t), t);
  CHECK(d.p_d == 0.0);
  CHECK(d.dic == d.d_at_mean);
}

TEST_CASE("dic identities and errors") {
  const ModelSpec m(preset(SimId::Sim1Cloglog, 200, 2), LinkKind::Logit, default_prior(5));
  const RegressionTarget t(m);
  McmcConfig cfg;
  cfg.n_iterations = 3000;
  cfg.burn_in = 1000;
  const Chain c = run_mh(t, cfg).front();
  const DicResult d = dic(c, t);
  CHECK(d.dic == doctest::Approx(d.d_avg + d.p_d).epsilon(1e-15));
  CHECK(d.p_d == doctest::Approx(d.d_avg - d.d_at_mean).epsilon(1e-15));
  CHECK(bic(c, t) == doctest::Approx(d.d_at_mean + 5.0 * std::log(200.0)).epsilon(1e-14));
  // Row order does not matter.
  Chain reversed = c;
  reversed.draws = c.draws.colwise().reverse();
  reversed.log_lik = c.log_lik.reverse();
  reversed.log_post = c.log_post.reverse();
  CHECK(dic(reversed, t).dic == doctest::Approx(d.dic).epsilon(1e-12));
  CHECK(bic(reversed, t) == doctest::Approx(bic(c, t)).epsilon(1e-12));
  Chain empty = c;
  empty.draws.resize(0, 5);
  CHECK_THROWS_AS(dic(empty, t), Error);
}

TEST_CASE("bic hand cases") {
  Eigen::MatrixXd one(1, 1);
  one << std::sqrt(2.0 * 4.0);  // log L = -5 - 4 = -9 -> deviance 18
  const Quadratic single(1, 1);
  CHECK(bic(make_chain(one, single), single) == doctest::Approx(18.0).epsilon(1e-14));
  const Quadratic three(3, 100);
  Eigen::MatrixXd draws(2, 3);
  draws << 0.0, 1.0, 2.0, 2.0, 3.0, 4.0;  // mean theta_0 = 1 -> deviance 11
  CHECK(bic(make_chain(draws, three), three) == doctest::Approx(24.815510557964274).epsilon(1e-14));
}

TEST_CASE("chib-jeliazkov on the normal-mean model") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const NormalMean t(normal_sample(40, 0.8, 100 + seed), 2.0);
    McmcConfig cfg;
    cfg.seed = seed;
    const Chain c = run_mh(t, cfg).front();
    const MarginalLikelihood ml = marginal_likelihood_cj(c, t, CjConfig{std::nullopt, seed});
    CAPTURE(seed);
    CHECK(ml.mc_se > 0.0);
    CHECK(ml.mc_se < 0.05);
    CHECK(std::abs(ml.log_ml - t.log_evidence()) < 3.0 * ml.mc_se);
  }
}

TEST_CASE("chib-jeliazkov errors") {
  const NormalMean t(normal_sample(20, 0.0, 7), 1.0);
  McmcConfig cfg;
  cfg.n_iterations = 2000;
  cfg.burn_in = 500;
  const Chain c = run_mh(t, cfg).front();
  try {
    marginal_likelihood_cj(c, t, CjConfig{0, 1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "config");
  }
  const ModelSpec m(preset(SimId::Sim1Cloglog, 200, 2), LinkKind::Gev, FlatBetaUniformXi{});
  const RegressionTarget flat(m);
  Eigen::MatrixXd draws = Eigen::MatrixXd::Zero(20, 6);
  try {
    marginal_likelihood_cj(make_chain(draws, flat), flat, CjConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == "improper_prior");
  }
  const ComparisonReport r = compare_criteria(make_chain(draws, flat), flat, CjConfig{});
  CHECK(std::isnan(r.log_ml));
}

TEST_CASE("posterior predictive deviance") {
  Eigen::MatrixXd X(2, 1);
  X << std::log(0.8 / 0.2), std::log(0.3 / 0.7);
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  const Dataset d = testutil::make_dataset(X, y, false);
  const ModelSpec m(d, LinkKind::Logit, default_prior(1));
  const std::vector<double> beta{1.0};
  // -2 (log 0.8 + log 0.7), mpmath.
  CHECK(posterior_predictive_deviance(beta, m, d) == doctest::Approx(1.1596369905058843).epsilon(1e-13));
  CHECK(posterior_predictive_deviance(beta, m, d.select_rows(std::vector<std::size_t>{})) == 0.0);
  // Additive over rows.
  const double a = posterior_predictive_deviance(beta, m, d.select_rows(std::vector<std::size_t>{0}));
  const double b = posterior_predictive_deviance(beta, m, d.select_rows(std::vector<std::size_t>{1}));
  CHECK(a + b == doctest::Approx(1.1596369905058843).epsilon(1e-13));
}

TEST_CASE("holdout on the training data reproduces the deviance at the mean") {
  const ModelSpec m(preset(SimId::Sim2Probit, 300, 3), LinkKind::Probit, default_prior(5));
  const RegressionTarget t(m);
  McmcConfig cfg;
  cfg.n_iterations = 3000;
  cfg.burn_in = 1000;
  const Chain c = run_mh(t, cfg).front();
  const Eigen::VectorXd mean = posterior_mean(c);
  const double ppd = posterior_predictive_deviance({mean.data(), 5}, m, m.data());
  CHECK(ppd == doctest::Approx(dic(c, t).d_at_mean).epsilon(1e-14));
}

TEST_CASE("holdout split") {
  const Dataset d = testutil::random_dataset(10, 2, 61);
  const auto [train, hold] = holdout_split(d, 0.1, 5);
  CHECK(train.n() == 9);
  CHECK(hold.n() == 1);
  const auto [train2, hold2] = holdout_split(d, 0.1, 5);
  CHECK(train2.X == train.X);
  CHECK(hold2.X == hold.X);

  const Dataset big = testutil::random_dataset(101, 3, 62);
  const auto [tr, ho] = holdout_split(big, 0.25, 9);
  CHECK(ho.n() == 25);
  CHECK(tr.n() == 76);
  std::multiset<std::vector<double>> all;
  std::multiset<std::vector<double>> parts;
  auto rows = [](const Dataset& s, std::multiset<std::vector<double>>& out) {
    for (Eigen::Index i = 0; i < s.X.rows(); ++i) {
      std::vector<double> r{s.y[i]};
      for (Eigen::Index j = 0; j < s.X.cols(); ++j) r.push_back(s.X(i, j));
      out.insert(r);
    }
  };
  rows(big, all);
  rows(tr, parts);
  rows(ho, parts);
  CHECK(all == parts);
  CHECK_THROWS_AS(holdout_split(d, 0.01, 1), Error);
  CHECK_THROWS_AS(holdout_split(d, 0.99, 1), Error);
  CHECK_THROWS_AS(holdout_split(d, 1.0, 1), Error);
}

TEST_CASE("report json fields") {
  ComparisonReport r;
  r.d_avg = 1;
  r.d_at_mean = 2;
  r.p_d = 3;
  r.dic = 4;
  r.bic = 5;
  r.log_ml = std::nan("");
  r.log_ml_se = 0.5;
  const auto j = to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"d_avg", "d_at_mean", "p_d", "dic", "bic", "log_ml", "log_ml_se", "d_post"});
  CHECK(j["log_ml"].is_null());
  CHECK(j["d_post"].is_null());
}

}  // TEST_SUITE
