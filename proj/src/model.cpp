#include "gevreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gevreg/error.hpp"
#include "gevreg/gev.hpp"

namespace gevreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_normal_density(double x, double variance) {
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * x * x / variance;
}

void check_variance(double v, const char* what) {
  if (!std::isfinite(v) || !(v > 0.0)) {
    throw Error("model", "invalid_prior", std::string(what) + " must be finite and positive");
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Intercept: return "intercept";
    case ColumnKind::ContinuousStandardized: return "continuous";
    case ColumnKind::Dummy: return "dummy";
  }
  return "unknown";
}

void Dataset::validate(bool allow_empty) const {
  const auto rows = X.rows();
  const auto cols = X.cols();
  if (!allow_empty && rows < 1) throw Error("model", "invalid_dataset", "dataset has no rows");
  if (y.size() != rows) throw Error("model", "invalid_dataset", "y and X have different row counts");
  if (cols < 1) throw Error("model", "invalid_dataset", "design matrix has no columns");
  if (column_names.size() != static_cast<std::size_t>(cols) ||
      column_kinds.size() != static_cast<std::size_t>(cols) ||
      standardization.size() != static_cast<std::size_t>(cols)) {
    throw Error("model", "invalid_dataset", "column metadata does not match the design matrix");
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!(y[i] == 0.0 || y[i] == 1.0)) {
      throw Error("model", "invalid_dataset", "response entries must be 0 or 1 (row " + std::to_string(i) + ")");
    }
  }
  if (!X.allFinite()) throw Error("model", "invalid_dataset", "design matrix has non-finite entries");
  for (std::size_t j = 0; j < standardization.size(); ++j) {
    if (column_kinds[j] == ColumnKind::ContinuousStandardized &&
        !(standardization[j].scale > 0.0 && std::isfinite(standardization[j].scale))) {
      throw Error("model", "invalid_dataset", "column '" + column_names[j] + "' has a nonpositive scale");
    }
  }
}

std::size_t Dataset::column_index(const std::string& name) const {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it == column_names.end()) throw Error("model", "unknown_column", "no column named '" + name + "'");
  return static_cast<std::size_t>(it - column_names.begin());
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.y.resize(static_cast<Eigen::Index>(rows.size()));
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    if (src < 0 || src >= X.rows()) throw Error("model", "invalid_dataset", "row index out of range");
    out.y[static_cast<Eigen::Index>(r)] = y[src];
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(src);
  }
  out.column_names = column_names;
  out.column_kinds = column_kinds;
  out.standardization = standardization;
  return out;
}

PriorSpec default_prior(std::size_t k, double variance) {
  return NormalIndependent{std::vector<double>(k, variance), variance};
}

std::string prior_name(const PriorSpec& prior) {
  return std::visit(Overloaded{[](const NormalIndependent&) { return std::string("normal"); },
                               [](const FlatBetaUniformXi&) { return std::string("flat"); },
                               [](const Jeffreys&) { return std::string("jeffreys"); }},
                    prior);
}

ModelSpec::ModelSpec(Dataset data, LinkKind link, PriorSpec prior)
    : data_(std::move(data)), link_(link), prior_(std::move(prior)) {
  data_.validate();
  std::visit(Overloaded{[&](const NormalIndependent& p) {
                          if (p.beta_variances.size() != data_.k()) {
                            throw Error("model", "invalid_prior", "need one prior variance per coefficient");
                          }
                          for (double v : p.beta_variances) check_variance(v, "beta prior variance");
                          check_variance(p.xi_variance, "xi prior variance");
                        },
                        [](const FlatBetaUniformXi& p) {
                          if (!(p.xi_low < p.xi_high)) throw Error("model", "invalid_prior", "empty xi range");
                        },
                        [&](const Jeffreys& p) {
                          if (link_ != LinkKind::Gev) {
                            throw Error("model", "usage", "Jeffreys prior is only available for the GEV link");
                          }
                          check_variance(p.xi_prior_variance, "xi prior variance");
                        }},
             prior_);
}

std::vector<std::string> ModelSpec::parameter_names() const {
  std::vector<std::string> names = data_.column_names;
  if (has_shape()) names.emplace_back("xi");
  return names;
}

LinkSpec ModelSpec::link_at(double xi) const { return {link_, link_ == LinkKind::Gev ? xi : 0.0}; }

double log_bernoulli(double y, double eta, const LinkSpec& link) {
  const BernoulliProbs pr = bernoulli_probs(eta, link);
  const double prob = y != 0.0 ? pr.p : pr.q;
  if (pr.edge) return prob > 0.0 ? 0.0 : -kInf;
  return std::log(std::max(prob, kProbFloor));
}

double log_likelihood(const Dataset& data, const LinkSpec& link, std::span<const double> beta) {
  if (beta.size() != data.k()) throw Error("model", "usage", "coefficient vector has the wrong length");
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
  const Eigen::VectorXd eta = data.X * b;
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total += log_bernoulli(data.y[i], eta[i], link);
    if (total == -kInf) return total;
  }
  return total;
}

SplitParams split_params(std::span<const double> theta, const ModelSpec& model) {
  if (theta.size() != model.dim()) throw Error("model", "usage", "parameter vector has the wrong length");
  SplitParams out{theta.first(model.data().k()), std::nullopt};
  if (model.has_shape()) out.xi = theta.back();
  return out;
}

namespace {

LinkSpec resolve_link(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model) {
  if (beta.size() != model.data().k()) throw Error("model", "usage", "coefficient vector has the wrong length");
  if (model.has_shape() != xi.has_value()) {
    throw Error("model", "usage", model.has_shape() ? "GEV link needs a shape value" : "only the GEV link takes a shape");
  }
  if (xi && !std::isfinite(*xi)) throw Error("model", "usage", "shape must be finite");
  return model.link_at(xi.value_or(0.0));
}

}  // namespace

double log_likelihood(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model) {
  return log_likelihood(model.data(), resolve_link(beta, xi, model), beta);
}

double deviance(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model) {
  return -2.0 * log_likelihood(beta, xi, model);
}

double jeffreys_weight(double eta, double xi) {
  if (std::abs(xi) < kGumbelThreshold) {
    const double t = std::exp(eta);
    return std::exp(2.0 * eta) / std::expm1(t);
  }
  const double z = 1.0 - xi * eta;
  if (z <= 0.0) return 0.0;
  const double log_z = std::log(z);
  const double t = std::exp(-log_z / xi);
  const double w = std::exp((-2.0 / xi - 2.0) * log_z) / std::expm1(t);
  return std::isfinite(w) ? w : 0.0;
}

double log_prior(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model) {
  resolve_link(beta, xi, model);
  return std::visit(
      Overloaded{
          [&](const NormalIndependent& p) {
            double lp = 0.0;
            for (std::size_t j = 0; j < beta.size(); ++j) lp += log_normal_density(beta[j], p.beta_variances[j]);
            if (xi) lp += log_normal_density(*xi, p.xi_variance);
            return lp;
          },
          [&](const FlatBetaUniformXi& p) {
            if (!xi) return 0.0;
            return (*xi >= p.xi_low && *xi < p.xi_high) ? -std::log(p.xi_high - p.xi_low) : -kInf;
          },
          [&](const Jeffreys& p) {
            const Dataset& d = model.data();
            const Eigen::Map<const Eigen::VectorXd> b(beta.data(), static_cast<Eigen::Index>(beta.size()));
            const Eigen::VectorXd eta = d.X * b;
            Eigen::VectorXd w(eta.size());
            for (Eigen::Index i = 0; i < eta.size(); ++i) {
              if (std::abs(*xi) >= kGumbelThreshold && 1.0 - *xi * eta[i] <= 0.0) return -kInf;
              w[i] = jeffreys_weight(eta[i], *xi);
            }
            const Eigen::MatrixXd info = d.X.transpose() * w.asDiagonal() * d.X;
            const Eigen::LLT<Eigen::MatrixXd> llt(info);
            if (llt.info() != Eigen::Success) return -kInf;
            const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
            if (!std::isfinite(log_det)) return -kInf;
            return 0.5 * log_det + log_normal_density(*xi, p.xi_prior_variance);
          }},
      model.prior());
}

double log_posterior(std::span<const double> beta, std::optional<double> xi, const ModelSpec& model) {
  const double lp = log_prior(beta, xi, model);
  if (lp == -kInf) return lp;
  return lp + log_likelihood(beta, xi, model);
}

std::vector<double> LogTarget::initial_scales() const { return std::vector<double>(dim(), 0.1); }

std::vector<std::string> LogTarget::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < dim(); ++j) names.push_back("theta" + std::to_string(j + 1));
  return names;
}

double LogTarget::log_posterior(std::span<const double> theta) const {
  const double lp = log_prior(theta);
  if (lp == -kInf || std::isnan(lp)) return -kInf;
  const double ll = log_likelihood(theta);
  return std::isnan(ll) ? -kInf : lp + ll;
}

std::optional<IrlsFit> fit_irls(const Dataset& data, const LinkSpec& link, int max_iterations) {
  const auto n = data.X.rows();
  const auto k = data.X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd w(n);
  Eigen::VectorXd z(n);
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::VectorXd eta = data.X * beta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const BernoulliProbs pr = bernoulli_probs(eta[i], link);
      const double d = dinv_link_deta(eta[i], link);
      if (pr.edge || !(d > 1e-300)) return std::nullopt;
      const double pq = std::max(pr.p * pr.q, 1e-300);
      w[i] = d * d / pq;
      z[i] = eta[i] + (data.y[i] - pr.p) / d;
    }
    const Eigen::MatrixXd info = data.X.transpose() * w.asDiagonal() * data.X;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    const Eigen::VectorXd next = ldlt.solve(data.X.transpose() * (w.array() * z.array()).matrix());
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e3) return std::nullopt;
    const double step = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (step < 1e-8 * (1.0 + beta.cwiseAbs().maxCoeff())) {
      IrlsFit fit;
      fit.beta = beta;
      fit.covariance = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
      fit.iterations = it;
      if (!fit.covariance.allFinite()) return std::nullopt;
      return fit;
    }
  }
  return std::nullopt;
}

RegressionTarget::RegressionTarget(const ModelSpec& model) : model_(model) {
  const std::size_t k = model_.data().k();
  auto with_shape = [&](const Eigen::VectorXd& beta) {
    std::vector<double> theta(beta.data(), beta.data() + beta.size());
    if (model_.has_shape()) theta.push_back(kInitialXi);
    return theta;
  };
  auto scales_from = [&](const IrlsFit& fit) {
    std::vector<double> s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = std::sqrt(fit.covariance(j, j));
    if (model_.has_shape()) s.push_back(0.1);
    return s;
  };

  std::vector<LinkSpec> attempts{model_.link_at(kInitialXi)};
  if (model_.link() != LinkKind::Logit) attempts.push_back(LinkSpec::logit());
  for (const LinkSpec& link : attempts) {
    if (auto fit = fit_irls(model_.data(), link)) {
      auto theta = with_shape(fit->beta);
      if (std::isfinite(log_posterior(theta))) {
        start_ = std::move(theta);
        start_scales_ = scales_from(*fit);
        return;
      }
    }
  }
  auto theta = with_shape(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)));
  if (std::isfinite(log_posterior(theta))) start_ = std::move(theta);
  start_scales_.assign(model_.dim(), 0.1);
}

double RegressionTarget::log_likelihood(std::span<const double> theta) const {
  const SplitParams sp = split_params(theta, model_);
  return gevreg::log_likelihood(sp.beta, sp.xi, model_);
}

double RegressionTarget::log_prior(std::span<const double> theta) const {
  const SplitParams sp = split_params(theta, model_);
  return gevreg::log_prior(sp.beta, sp.xi, model_);
}

bool RegressionTarget::prior_is_proper() const {
  return std::holds_alternative<NormalIndependent>(model_.prior());
}

std::vector<double> RegressionTarget::initial_point() const { return start_; }

std::vector<double> RegressionTarget::initial_scales() const { return start_scales_; }

}  // namespace gevreg
