#pragma once

#include "clare/harness/config.hpp"
#include "clare/protocol/protocol.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace clare::harness {

using protocol::MetricsRecord;

inline constexpr int kReportFormatVersion = 1;
inline constexpr const char* kArtifactVersion = "0.1.0";

/// Mean overall accuracy of the first k records (k >= 1, k <= size).
double average_over_tasks(std::span<const MetricsRecord> records, std::size_t k);
double average_over_tasks(std::span<const double> accuracies, std::size_t k);

struct RunSummary {
    double final_accuracy = 0.0;
    std::optional<double> average_5;  // first 5 increments
    std::optional<double> average_10; // first 10 increments

    bool operator==(const RunSummary&) const = default;
};

RunSummary summarize(std::span<const MetricsRecord> records);

struct RunResult {
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;
    RunSummary summary;
};

/// Mean and sample standard deviation over seeds (sd is 0 for one seed).
struct Spread {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n = 0;

    bool operator==(const Spread&) const = default;
};

struct AggregateTable {
    std::vector<Spread> per_increment; // overall accuracy at each increment
    Spread final_accuracy;
    std::optional<Spread> average_5;
    std::optional<Spread> average_10;

    bool operator==(const AggregateTable&) const = default;
};

/// Aggregates runs that share a schedule; increments present in every run
/// are tabulated.
AggregateTable aggregate(std::span<const RunResult> runs);

struct ResultsReport {
    ExperimentConfig config;
    std::vector<RunResult> runs;
    AggregateTable aggregate;
    std::string artifact_version = kArtifactVersion;
    double total_wall_seconds = 0.0;
};

/// Builds a report, filling summaries and the aggregate from the records.
ResultsReport make_report(ExperimentConfig config, std::vector<RunResult> runs, double total_wall_seconds);

/// Structured form of the report. With `include_timing` false every
/// wall-clock field is omitted, which makes two runs of the same
/// configuration compare equal.
nlohmann::json report_to_json(const ResultsReport& report, bool include_timing = true);
/// Parses and validates: the format version must match and every summary
/// must equal its recomputation from the records.
ResultsReport report_from_json(const nlohmann::json& j);

void write_report(const ResultsReport& report, const std::filesystem::path& path);
ResultsReport read_report(const std::filesystem::path& path);

/// Flat (seed, increment, class, accuracy) rows for plotting.
void write_csv(const ResultsReport& report, const std::filesystem::path& path);

/// Table with one row per seed and one column per increment, plus the
/// task averages.
std::string format_table(const ResultsReport& report);

} // namespace clare::harness
