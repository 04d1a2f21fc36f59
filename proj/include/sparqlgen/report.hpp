#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "sparqlgen/pipeline.hpp"

namespace sparqlgen {

// Half-up rounding to `digits` decimals (0.845 -> 0.85), tolerant of the
// binary representation error of the input.
double round_half_up(double value, int digits);
// round_half_up(value, 2) printed with exactly two decimals.
std::string format_2dp(double value);

// Full-precision, timestamp-free report; byte-identical for identical inputs.
nlohmann::json report_json(const PipelineResult& result);

// Human-readable table of the report: per-run rows plus mean ± std, two
// decimals, followed by the error category counts.
std::string summary_table(const nlohmann::json& report);

// Writes report.json, report.csv, errors.csv, manifest.json and summary.txt
// into `dir` (created if needed).
void emit_report(const PipelineResult& result, const std::filesystem::path& dir);

}  // namespace sparqlgen
