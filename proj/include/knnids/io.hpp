#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "knnids/core.hpp"
#include "knnids/scenario.hpp"

namespace knnids::streams {

enum class Format { csv_matrix, jsonl_stream };

/// .csv -> csv_matrix, .jsonl / .ndjson -> jsonl_stream; otherwise nullopt.
std::optional<Format> format_from_extension(const std::filesystem::path& p);

/// CSV rows get t = 1, 2, ... and an empty source_id. Lines starting with '#'
/// and blank lines are skipped.
std::vector<core::DataInstance> read_csv(std::istream& in);
std::vector<core::DataInstance> read_jsonl(std::istream& in);
std::vector<core::DataInstance> ingest(const std::filesystem::path& path, Format format);

/// Numbers use the shortest representation that parses back exactly.
void write_csv(std::ostream& out, std::span<const core::DataInstance> xs);
void write_jsonl(std::ostream& out, std::span<const core::DataInstance> xs);
void export_stream(const std::filesystem::path& path, std::span<const core::DataInstance> xs, Format format);

std::string format_double(double x);

nlohmann::json truth_to_json(const ScenarioSpec& spec);

/// One report line: {"source_id","T","q","final_stat","flagged_dims","mean_contributions"}.
struct ReportRecord {
    std::string source_id;
    core::Tick T = 0;
    core::Tick q = 0;
    double final_stat = 0.0;
    std::vector<std::size_t> flagged_dims;
    std::vector<double> mean_contributions;

    friend bool operator==(const ReportRecord&, const ReportRecord&) = default;
};

std::string report_line(const ReportRecord& r);
ReportRecord parse_report_line(const std::string& line, std::size_t line_no = 1);

/// Opens for reading/writing; failures throw DataError naming the path.
std::ifstream open_in(const std::filesystem::path& p);
std::ofstream open_out(const std::filesystem::path& p);

}  // namespace knnids::streams
