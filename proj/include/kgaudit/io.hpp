#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kgaudit/ingest.hpp"
#include "kgaudit/metrics_expl.hpp"
#include "kgaudit/rec_model.hpp"
#include "kgaudit/split.hpp"

namespace kgaudit {

// Plain-text exchange formats shared by the built-in baselines and external
// methods:
//
//   recommendations   user <TAB> rank <TAB> product <TAB> score
//   paths             user <TAB> product <TAB> U<user> rel E<entity> rel~inv ... P<product>
//
// Labels are the dataset's external labels. A `~inv` suffix marks a relation
// traversed from tail to head.

inline constexpr std::string_view kInverseSuffix = "~inv";

/// Renders `path` as a path string. Entities in `catalog` (sorted) get the
/// P prefix, all others E.
std::string format_path(const ReasoningPath& path, const Labels& labels, std::span<const ProductId> catalog);

/// Parses a path string. Unknown relation labels are interned into
/// `labels.relations`; unknown users or entities throw ValidationError, as do
/// structural defects (even token count, wrong endpoint prefixes).
ReasoningPath parse_path(std::string_view text, Labels& labels);

/// How to pick one path when a method supplies several for the same entry.
enum class PathPolicy { first, max_lir, max_sep };

PathPolicy parse_path_policy(std::string_view s);
std::string_view to_string(PathPolicy p) noexcept;

struct LoadLog {
    std::size_t entries = 0;
    std::size_t paths_read = 0;
    std::size_t paths_attached = 0;
    /// Invalid paths by reason; such entries count as unexplained.
    std::map<std::string, std::size_t> invalid_paths;
    std::size_t paths_without_entry = 0;
};

struct MethodOutput {
    std::string name;
    /// Sorted by user id.
    std::vector<RecommendedList> lists;
    LoadLog log;
};

struct PathValidationContext {
    const KnowledgeGraph& kg;
    const InteractionIndex& train;
    const ExplanationWeights* weights = nullptr;
    PathPolicy policy = PathPolicy::first;
};

/// Reads a recommendation file and, when `paths` is non-empty, its path
/// file. Unknown users or products are row-addressed ValidationErrors;
/// invalid paths are dropped and counted.
MethodOutput load_method_output(std::string name, const std::filesystem::path& recs, const std::filesystem::path& paths,
                                Labels& labels, const PathValidationContext& ctx);

void write_recommendations(std::ostream& out, std::span<const RecommendedList> lists, const Labels& labels);
void write_paths(std::ostream& out, std::span<const RecommendedList> lists, const Labels& labels,
                 std::span<const ProductId> catalog);

void write_interactions(std::ostream& out, std::span<const Interaction> xs, const Labels& labels);

/// Writes train.tsv, valid.tsv and test.tsv under `dir`.
void save_split(const SplitBundle& split, const Labels& labels, const std::filesystem::path& dir);
/// Reads the three partition files; labels must already be known.
SplitBundle load_split(const std::filesystem::path& dir, const Labels& labels);

/// Round-trip decimal rendering shared by every text output.
std::string format_number(double v);

}  // namespace kgaudit
