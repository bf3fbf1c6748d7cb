#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgaudit/ingest.hpp"
#include "kgaudit/io.hpp"
#include "kgaudit/rec_model.hpp"
#include "kgaudit/report.hpp"
#include "kgaudit/split.hpp"

namespace kgaudit {

struct MethodSpec {
    std::string name;
    std::filesystem::path recs;
    std::filesystem::path paths;
};

/// Parses `name=recs[,paths]`.
MethodSpec parse_method_spec(std::string_view s);

struct RunConfig {
    std::string dataset = "dataset";
    RawPaths inputs;
    TextFormat format;
    PreprocessConfig preprocess;
    SplitConfig split;

    std::vector<std::size_t> cutoffs{10};
    std::vector<std::size_t> fidelity_cutoffs{10, 20, 50, 100};
    double beta = 0.3;
    std::uint64_t seed = 42;
    std::filesystem::path out_dir = "kgaudit_out";
    std::set<std::string> formats{"json", "csv", "svg"};
    unsigned workers = 1;

    std::size_t max_hops = 3;
    std::string interaction_relation = "interacted";
    PathSelection selection = PathSelection::recent_first;
    PathPolicy path_policy = PathPolicy::first;
    /// List length produced by the baselines; 0 means the largest cutoff.
    std::size_t baseline_k = 0;

    std::vector<MethodSpec> methods;
    std::vector<std::filesystem::path> reports;
    /// method -> class, for compare.
    std::map<std::string, std::string> grouping;
    std::optional<std::size_t> compare_cutoff;

    std::size_t list_length() const;
    /// Throws UsageError on inconsistent settings.
    void validate() const;
    /// Settings that affect results, one `key = value` per line; input paths
    /// appear by file name only.
    std::string canonical() const;
    std::string hash() const;
};

/// Applies `key = value` lines. Relative paths resolve against `base`.
void apply_config(RunConfig& cfg, std::istream& in, const std::filesystem::path& base, std::string_view source);
RunConfig load_config(const std::filesystem::path& file);

std::vector<std::size_t> parse_cutoffs(std::string_view s);
std::set<std::string> parse_formats(std::string_view s);

/// Output layout under out_dir.
struct Layout {
    std::filesystem::path root;
    std::filesystem::path bundle() const { return root / "bundle"; }
    std::filesystem::path split() const { return root / "split"; }
    std::filesystem::path baselines() const { return root / "baselines"; }
    std::filesystem::path report() const { return root / "report"; }
    std::filesystem::path compare() const { return root / "compare"; }
};

PreprocessResult cmd_preprocess(const RunConfig& cfg, std::ostream& log);
SplitBundle cmd_split(const RunConfig& cfg, std::ostream& log);
void cmd_baseline(const RunConfig& cfg, std::ostream& log);
EvaluationReport cmd_evaluate(const RunConfig& cfg, std::ostream& log);
CompareTable cmd_compare(const RunConfig& cfg, std::ostream& log);
/// Statistics of the preprocessed bundle as JSON.
Json cmd_stats(const RunConfig& cfg);

}  // namespace kgaudit
