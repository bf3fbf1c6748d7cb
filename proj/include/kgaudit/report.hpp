#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgaudit/evaluate.hpp"
#include "kgaudit/fairness_stats.hpp"
#include "kgaudit/ingest.hpp"

namespace kgaudit {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kToolName = "kgaudit";
inline constexpr std::string_view kToolVersion = KGAUDIT_VERSION;

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& p);

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    /// Input role -> SHA-256 of its contents, in insertion order.
    std::vector<std::pair<std::string, std::string>> inputs;
};

struct EvaluationReport {
    std::string dataset;
    DatasetStats stats;
    std::vector<std::size_t> cutoffs;
    std::vector<std::size_t> fidelity_cutoffs;
    std::vector<MethodEvaluation> methods;
    Provenance provenance;
};

Json to_json(const DatasetStats& s);
Json to_json(const Provenance& p);
Json to_json(const EvaluationReport& r);

/// Stable fingerprint of a dataset: name plus its statistics.
std::string dataset_fingerprint(const std::string& name, const DatasetStats& stats);

/// Long-format CSV views. Every value is rendered with format_number and
/// therefore matches the JSON report verbatim.
std::string metrics_csv(const EvaluationReport& r);
std::string fidelity_csv(const EvaluationReport& r);
std::string fairness_csv(const EvaluationReport& r);
std::string tests_csv(const EvaluationReport& r);
std::string per_user_csv(const EvaluationReport& r, const MethodEvaluation& m, const CutoffEvaluation& c,
                         const Labels& labels, std::span<const UserId> users);

struct RadarSeries {
    std::string name;
    std::vector<double> values;
};

/// Radar chart with axes in the given order (callers sort by metric name).
std::string radar_svg(const std::string& title, const std::vector<std::string>& axes,
                      const std::vector<RadarSeries>& series);

/// The report's charts keyed by file stem: utility and beyond-utility,
/// consumer fairness per dimension, explanation quality. One chart per
/// perspective at the first cutoff.
std::map<std::string, std::string> report_figures(const EvaluationReport& r);

// ---------------------------------------------------------------------------
// Cross-method significance table
// ---------------------------------------------------------------------------

/// The part of an EvaluationReport that `compare` consumes.
struct ReportSummary {
    std::string dataset;
    std::string fingerprint;
    std::vector<std::size_t> cutoffs;
    /// method -> cutoff -> metric -> value
    std::vector<std::pair<std::string, std::map<std::size_t, std::map<std::string, double>>>> methods;
};

ReportSummary summarize_report(const Json& report);

struct CompareCell {
    std::string metric;
    std::optional<TestResult> result;
    /// Why the cell is empty ("absent", or the test's precondition failure).
    std::string note;
};

struct CompareRow {
    std::string dataset;
    std::size_t k = 0;
    std::vector<CompareCell> cells;
};

struct CompareTable {
    std::vector<std::string> classes;
    std::vector<std::string> metrics;
    std::vector<CompareRow> rows;
};

/// Welch t-test between the two method classes for every metric of every
/// dataset. `grouping` maps method name -> class; exactly two classes.
/// Reports of one dataset must agree on fingerprint and contain `cutoff`
/// (default: the first cutoff of the first report).
CompareTable compare_reports(std::span<const ReportSummary> reports, const std::map<std::string, std::string>& grouping,
                             std::optional<std::size_t> cutoff = std::nullopt);

Json to_json(const CompareTable& t);
std::string compare_csv(const CompareTable& t);
/// Markdown table; p-values below 0.05 are bold.
std::string compare_markdown(const CompareTable& t);

}  // namespace kgaudit
