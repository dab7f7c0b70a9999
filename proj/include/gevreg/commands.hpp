#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "gevreg/ingest.hpp"

namespace gevreg {

// Each command writes report.json plus its CSV tables into config.out and
// returns the report. Files are written to a temporary name and renamed.
// The only run-dependent field of a report is "generated_at".
nlohmann::ordered_json simulate_command(const RunConfig& config);
nlohmann::ordered_json fit_command(const RunConfig& config);
nlohmann::ordered_json compare_command(const RunConfig& config);
nlohmann::ordered_json ace_command(const RunConfig& config);
nlohmann::ordered_json predict_command(const RunConfig& config);
nlohmann::ordered_json check_command(const RunConfig& config);

/// Dispatches by subcommand name.
nlohmann::ordered_json run_command(const std::string& name, const RunConfig& config);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace gevreg
