#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "dpt/experiment.hpp"
#include "dpt/run_config.hpp"

namespace dpt {

inline constexpr int kRunSchemaVersion = 1;
inline constexpr const char* kLibraryVersion = "1.0.0";

nlohmann::json trace_to_json(const SelectionTrace& trace);
SelectionTrace trace_from_json(const nlohmann::json& doc);
nlohmann::json report_to_json(const EstimatorReport& report);
nlohmann::json shear_report_to_json(const ShearReport& report);

// Files written: run.json, trace.csv, trajectory.csv, frequencies.csv,
// eigenvalues.csv. Throws IoError with the offending path.
void export_report(const SelectionTrace& trace, const EstimatorReport& report, const RunConfig& config,
                   const std::filesystem::path& dir);

struct LoadedRun {
  RunConfig config;
  SelectionTrace trace;
  nlohmann::json report;
};

LoadedRun load_run(const std::filesystem::path& run_json);

// Human-readable summary of a run.json document.
std::string summarize_run(const LoadedRun& run);

}  // namespace dpt
