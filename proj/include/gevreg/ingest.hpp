#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "gevreg/model.hpp"
#include "gevreg/sampler.hpp"
#include "gevreg/simdata.hpp"

namespace gevreg {

// Comma-separated text with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);
std::string format_double(double value);

enum class CovariateRole { Continuous, Binary, Categorical };

struct CovariateSpec {
  std::string name;
  CovariateRole role = CovariateRole::Continuous;
  bool log = false;
  bool standardize = true;
  // Fixed centering and scaling instead of the sample mean and SD.
  std::optional<double> center;
  std::optional<double> scale;
  // Categorical reference level; empty means the first level in sorted order.
  std::string reference;
};

struct SimulatedSource {
  SimId id = SimId::Sim1Cloglog;
  std::size_t n = 1000;
};

struct PriorConfig {
  std::string type = "normal";  // normal | flat | jeffreys
  double variance = 1e4;        // beta variance under "normal"
  double xi_variance = 1e4;     // normal and jeffreys
  double xi_low = -1.0;         // flat
  double xi_high = 1.0;
};

struct AceRequest {
  std::string column;
  std::string change;
};

struct BinSpec {
  std::string column;
  std::vector<double> edges;
};

struct RunConfig {
  std::string input;  // CSV path; empty when simulating
  std::optional<SimulatedSource> simulate;
  std::string response = "y";
  std::vector<CovariateSpec> covariates;  // empty: every other column, continuous
  std::vector<LinkKind> links{LinkKind::Gev};
  PriorConfig prior;
  McmcConfig mcmc;
  double holdout_fraction = 0.0;
  bool flip_response = false;
  std::string out = "out";
  std::uint64_t seed = 1;
  std::optional<std::size_t> cj_draws;
  std::vector<AceRequest> ace;
  std::optional<BinSpec> bins;

  void validate() const;
};

/// Reads a JSON config. Unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const RunConfig& config);

PriorSpec make_prior(const PriorConfig& config, std::size_t k);

/// Builds the design from the configured CSV or simulation preset.
Dataset ingest(const RunConfig& config);

/// Builds the design from an already parsed table.
Dataset ingest_table(const CsvTable& table, const RunConfig& config);

/// Writes the data in original units (inverting logs and standardization) so
/// that ingesting with covariate_specs_for(data) reproduces the design.
void export_csv(const Dataset& data, const std::string& response, std::ostream& out);
std::vector<CovariateSpec> covariate_specs_for(const Dataset& data);

}  // namespace gevreg
