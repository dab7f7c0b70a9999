#include "gevreg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gevreg/error.hpp"

namespace gevreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solves  max b'y  s.t.  G y <= 0,  -1 <= y_j <= 1
// through its dual  min 1'(u + v)  s.t.  G'w + u - v = b,  w, u, v >= 0,
// with a revised simplex under Bland's rule. The dual has one row per
// variable, so the basis stays small however many constraints G has. The
// slack columns of the box give a feasible starting basis. Returns the
// optimal y (the simplex multipliers) and the optimal value.
struct BoxLpResult {
  Eigen::VectorXd y;
  double value = 0.0;
};

BoxLpResult solve_box_lp(const Eigen::MatrixXd& G, const Eigen::VectorXd& b) {
  const Eigen::Index m = b.size();        // dual rows = primal variables
  const Eigen::Index n_rows = G.rows();   // dual columns for w
  const Eigen::Index n_cols = n_rows + 2 * m;
  const double tol = 1e-10 * std::max(1.0, G.cwiseAbs().maxCoeff());

  auto column = [&](Eigen::Index j) -> Eigen::VectorXd {
    if (j < n_rows) return G.row(j).transpose();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    const Eigen::Index r = j - n_rows;
    if (r < m) {
      e[r] = 1.0;
    } else {
      e[r - m] = -1.0;
    }
    return e;
  };
  auto cost = [&](Eigen::Index j) { return j < n_rows ? 0.0 : 1.0; };

  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  Eigen::MatrixXd binv = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd x_b(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const bool pos = b[r] >= 0.0;
    basis[static_cast<std::size_t>(r)] = n_rows + (pos ? r : m + r);
    binv(r, r) = pos ? 1.0 : -1.0;
    x_b[r] = std::abs(b[r]);
  }
  std::vector<bool> in_basis(static_cast<std::size_t>(n_cols), false);
  for (Eigen::Index j : basis) in_basis[static_cast<std::size_t>(j)] = true;

  Eigen::VectorXd c_b(m);
  const long max_iterations = 100L * static_cast<long>(n_cols) + 1000L;
  for (long it = 0; it < max_iterations; ++it) {
    for (Eigen::Index r = 0; r < m; ++r) c_b[r] = cost(basis[static_cast<std::size_t>(r)]);
    const Eigen::VectorXd y = binv.transpose() * c_b;

    // Bland: lowest-index column with negative reduced cost enters.
    Eigen::Index entering = -1;
    Eigen::VectorXd a_j;
    for (Eigen::Index j = 0; j < n_cols; ++j) {
      if (in_basis[static_cast<std::size_t>(j)]) continue;
      Eigen::VectorXd a = column(j);
      if (cost(j) - a.dot(y) < -tol) {
        entering = j;
        a_j = std::move(a);
        break;
      }
    }
    if (entering < 0) return {y, b.dot(y)};

    const Eigen::VectorXd d = binv * a_j;
    Eigen::Index leave = -1;
    double best = kInf;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (d[r] <= tol) continue;
      const double ratio = x_b[r] / d[r];
      if (ratio < best - 1e-15 ||
          (std::abs(ratio - best) <= 1e-15 && leave >= 0 &&
           basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave < 0) throw Error("diagnostics", "numeric", "feasibility LP is unbounded");

    const double pivot = d[leave];
    binv.row(leave) /= pivot;
    x_b[leave] /= pivot;
    for (Eigen::Index r = 0; r < m; ++r) {
      if (r == leave) continue;
      binv.row(r) -= d[r] * binv.row(leave);
      x_b[r] -= d[r] * x_b[leave];
    }
    in_basis[static_cast<std::size_t>(basis[static_cast<std::size_t>(leave)])] = false;
    basis[static_cast<std::size_t>(leave)] = entering;
    in_basis[static_cast<std::size_t>(entering)] = true;
    x_b = x_b.cwiseMax(0.0);
  }
  throw Error("diagnostics", "numeric", "feasibility LP did not terminate");
}

bool certifies(const Eigen::MatrixXd& x_star, const Eigen::VectorXd& beta, double tol) {
  const Eigen::VectorXd margin = x_star * beta;
  return margin.minCoeff() >= -tol && margin.maxCoeff() > tol;
}

std::string edge_label(double lo, double hi) {
  std::ostringstream out;
  if (lo == -kInf) {
    out << "<" << hi;
  } else if (hi == kInf) {
    out << ">=" << lo;
  } else {
    out << "[" << lo << "," << hi << ")";
  }
  return out.str();
}

}  // namespace

SeparationReport separation_check(const Dataset& data) {
  data.validate();
  const auto n = static_cast<Eigen::Index>(data.n());
  const auto k = static_cast<Eigen::Index>(data.k());
  if (n < k) throw Error("diagnostics", "usage", "separation check needs at least as many rows as columns");

  Eigen::MatrixXd x_star = data.X;
  for (Eigen::Index i = 0; i < n; ++i) x_star.row(i) *= 2.0 * data.y[i] - 1.0;

  SeparationReport report;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_star);
  qr.setThreshold(1e-10);
  report.x_star_rank = static_cast<std::size_t>(qr.rank());
  if (qr.rank() < k) throw Error("diagnostics", "not_identifiable", "design not identifiable (rank-deficient X)");
  report.blocks_checked =
      "one linear feasibility solve over all " + std::to_string(n) + " rows; block decomposition not searched";

  // Stage 1: max 1'X* beta subject to X* beta >= 0 and |beta_j| <= 1. A
  // positive optimum is a separating direction, complete or quasi-complete.
  const double scale = std::max(1.0, x_star.cwiseAbs().maxCoeff());
  const double tol = 1e-9 * scale * static_cast<double>(k);
  const BoxLpResult sum_lp = solve_box_lp(-x_star, x_star.colwise().sum().transpose());
  if (!(sum_lp.value > tol) || !certifies(x_star, sum_lp.y, tol)) return report;

  Eigen::VectorXd certificate = sum_lp.y;
  // Stage 2: prefer a direction with the largest common margin t,
  // max t subject to X* beta >= t, which is strictly positive under
  // complete separation.
  Eigen::MatrixXd g2(n, k + 1);
  g2.leftCols(k) = -x_star;
  g2.col(k).setOnes();
  Eigen::VectorXd b2 = Eigen::VectorXd::Zero(k + 1);
  b2[k] = 1.0;
  const BoxLpResult margin_lp = solve_box_lp(g2, b2);
  if (margin_lp.value > tol) {
    const Eigen::VectorXd beta = margin_lp.y.head(k);
    if (certifies(x_star, beta, tol)) certificate = beta;
  }
  certificate /= certificate.cwiseAbs().maxCoeff();
  report.separated = true;
  report.certificate = certificate;
  return report;
}

nlohmann::ordered_json to_json(const SeparationReport& report) {
  nlohmann::ordered_json j;
  j["x_star_rank"] = report.x_star_rank;
  j["separated"] = report.separated;
  if (report.certificate) {
    j["certificate"] = std::vector<double>(report.certificate->data(),
                                           report.certificate->data() + report.certificate->size());
  } else {
    j["certificate"] = nullptr;
  }
  j["blocks_checked"] = report.blocks_checked;
  return j;
}

std::vector<FitBin> binned_table(std::span<const double> values, std::span<const double> y,
                                 std::span<const double> p_hat, std::span<const double> edges) {
  if (values.size() != y.size() || values.size() != p_hat.size()) {
    throw Error("diagnostics", "usage", "values, responses and probabilities differ in length");
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!std::isfinite(edges[e]) || (e > 0 && !(edges[e] > edges[e - 1]))) {
      throw Error("diagnostics", "usage", "bin edges must be finite and strictly increasing");
    }
  }
  std::vector<FitBin> bins(edges.size() + 1);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].lower = b == 0 ? -kInf : edges[b - 1];
    bins[b].upper = b == edges.size() ? kInf : edges[b];
    bins[b].label = edges.empty() ? "all" : edge_label(bins[b].lower, bins[b].upper);
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), values[i]) - edges.begin());
    bins[b].n_obs += 1;
    bins[b].observed_ones += y[i];
    bins[b].expected_ones += p_hat[i];
  }
  return bins;
}

Eigen::VectorXd fitted_probabilities(std::span<const double> theta_hat, const ModelSpec& model, const Dataset& data) {
  const SplitParams sp = split_params(theta_hat, model);
  const LinkSpec link = model.link_at(sp.xi.value_or(0.0));
  if (data.k() != sp.beta.size()) throw Error("diagnostics", "usage", "data columns do not match the model");
  const Eigen::Map<const Eigen::VectorXd> beta(sp.beta.data(), static_cast<Eigen::Index>(sp.beta.size()));
  const Eigen::VectorXd eta = data.X * beta;
  Eigen::VectorXd p(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) p[i] = inv_link(eta[i], link);
  return p;
}

std::vector<FitBin> binned_fit_table(std::span<const double> theta_hat, const ModelSpec& model, const Dataset& data,
                                     const std::string& column, std::span<const double> edges) {
  const auto j = static_cast<Eigen::Index>(data.column_index(column));
  const Eigen::VectorXd values = data.X.col(j);
  const Eigen::VectorXd p = fitted_probabilities(theta_hat, model, data);
  return binned_table({values.data(), static_cast<std::size_t>(values.size())},
                      {data.y.data(), static_cast<std::size_t>(data.y.size())},
                      {p.data(), static_cast<std::size_t>(p.size())}, edges);
}

std::vector<FitBin> binned_fit_table(const Chain& chain, const ModelSpec& model, const std::string& column,
                                     std::span<const double> edges) {
  const Eigen::VectorXd mean = posterior_mean(chain);
  return binned_fit_table({mean.data(), static_cast<std::size_t>(mean.size())}, model, model.data(), column, edges);
}

}  // namespace gevreg
