#include "gevreg/effects.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "gevreg/error.hpp"

namespace gevreg {

namespace {

double parse_delta(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !std::isfinite(v)) throw Error("effects", "usage", "bad change amount '" + text + "'");
  return v;
}

// Shift applied to the stored column for shift-type changes.
double stored_shift(const CovariateChange& change, ColumnKind kind, const Standardization& st) {
  switch (change.kind) {
    case ChangeKind::DoubleOriginal:
      if (kind != ColumnKind::ContinuousStandardized || !st.log_applied) {
        throw Error("effects", "usage", "doubling needs a log-transformed column ('" + change.column + "')");
      }
      return std::numbers::ln2 / st.scale;
    case ChangeKind::AddOriginalUnits:
      if (kind != ColumnKind::ContinuousStandardized) {
        throw Error("effects", "usage", "original-unit shifts need a continuous column ('" + change.column + "')");
      }
      if (st.log_applied) {
        throw Error("effects", "usage",
                    "original-unit shifts are ambiguous on log-transformed column '" + change.column +
                        "'; use a standardized shift");
      }
      return change.delta / st.scale;
    case ChangeKind::AddStandardized:
      if (kind != ColumnKind::ContinuousStandardized) {
        throw Error("effects", "usage", "standardized shifts need a continuous column ('" + change.column + "')");
      }
      return change.delta;
    case ChangeKind::ZeroToOne:
      break;
  }
  return 0.0;
}

}  // namespace

CovariateChange parse_change(const std::string& column, const std::string& text) {
  if (text == "0to1" || text == "zero-to-one") return {column, ChangeKind::ZeroToOne, 0.0};
  if (text == "double") return {column, ChangeKind::DoubleOriginal, 0.0};
  if (text.rfind("add-std:", 0) == 0) return {column, ChangeKind::AddStandardized, parse_delta(text.substr(8))};
  if (text.rfind("add:", 0) == 0) return {column, ChangeKind::AddOriginalUnits, parse_delta(text.substr(4))};
  throw Error("effects", "usage", "unknown covariate change '" + text + "'");
}

std::string describe(const CovariateChange& change) {
  auto fmt = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  switch (change.kind) {
    case ChangeKind::ZeroToOne: return "0to1";
    case ChangeKind::DoubleOriginal: return "double";
    case ChangeKind::AddOriginalUnits: return "add:" + fmt(change.delta);
    case ChangeKind::AddStandardized: return "add-std:" + fmt(change.delta);
  }
  return "unknown";
}

AceResult average_covariate_effect(const Chain& chain, const ModelSpec& model, const CovariateChange& change,
                                   std::size_t max_draws) {
  const Dataset& data = model.data();
  if (chain.rows() == 0) throw Error("effects", "empty_chain", "chain has no draws");
  if (chain.dim() != model.dim()) throw Error("effects", "usage", "chain and model dimensions differ");
  const std::size_t j = data.column_index(change.column);
  const ColumnKind kind = data.column_kinds[j];
  const auto col = static_cast<Eigen::Index>(j);

  double shift = 0.0;
  if (change.kind == ChangeKind::ZeroToOne) {
    if (kind != ColumnKind::Dummy) throw Error("effects", "usage", "0-to-1 changes need a dummy column ('" + change.column + "')");
  } else {
    shift = stored_shift(change, kind, data.standardization[j]);
  }

  std::vector<std::size_t> draws;
  const std::size_t m = chain.rows();
  if (max_draws == 0 || max_draws >= m) {
    for (std::size_t g = 0; g < m; ++g) draws.push_back(g);
  } else {
    for (std::size_t s = 0; s < max_draws; ++s) draws.push_back(s * m / max_draws);
  }

  const auto n = static_cast<Eigen::Index>(data.n());
  const std::size_t k = data.k();
  std::vector<double> per_draw;
  per_draw.reserve(draws.size());
  for (std::size_t g : draws) {
    const auto row = chain.draws.row(static_cast<Eigen::Index>(g));
    const Eigen::VectorXd beta = row.head(static_cast<Eigen::Index>(k)).transpose();
    const LinkSpec link = model.link_at(model.has_shape() ? row(static_cast<Eigen::Index>(k)) : 0.0);
    const Eigen::VectorXd eta = data.X * beta;
    const double b = beta[col];
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double base = eta[i];
      double changed = eta[i] + shift * b;
      if (change.kind == ChangeKind::ZeroToOne) {
        base = eta[i] - data.X(i, col) * b;
        changed = base + b;
      }
      sum += inv_link(changed, link) - inv_link(base, link);
    }
    per_draw.push_back(sum / static_cast<double>(n));
  }

  AceResult out;
  double total = 0.0;
  for (double v : per_draw) total += v;
  out.ace = total / static_cast<double>(per_draw.size());
  out.mc_se = batch_means_se(per_draw);
  return out;
}

}  // namespace gevreg
