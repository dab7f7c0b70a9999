#pragma once

#include <string>

#include "gevreg/model.hpp"
#include "gevreg/sampler.hpp"

namespace gevreg {

enum class ChangeKind {
  ZeroToOne,         // dummy: compare everyone at 1 against everyone at 0
  DoubleOriginal,    // log-standardized column: original value doubled
  AddOriginalUnits,  // standardized, unlogged column: original value + delta
  AddStandardized,   // any continuous column: stored value + delta
};

struct CovariateChange {
  std::string column;
  ChangeKind kind = ChangeKind::ZeroToOne;
  double delta = 0.0;
};

/// Parses "0to1", "double", "add:<delta>" (original units) or
/// "add-std:<delta>" (standardized units).
CovariateChange parse_change(const std::string& column, const std::string& text);
std::string describe(const CovariateChange& change);

struct AceResult {
  double ace = 0.0;
  double mc_se = 0.0;
};

/// Change in success probability averaged over the empirical covariate rows
/// and the retained draws. max_draws > 0 uses that many evenly spaced draws.
AceResult average_covariate_effect(const Chain& chain, const ModelSpec& model, const CovariateChange& change,
                                   std::size_t max_draws = 0);

}  // namespace gevreg
