#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgaudit/kg_core.hpp"

namespace kgaudit {

struct RecEntry {
    std::size_t rank = 0;
    ProductId product;
    double score = 0.0;
    std::optional<ReasoningPath> path;

    friend bool operator==(const RecEntry&, const RecEntry&) = default;
};

struct RecommendedList {
    UserId user;
    std::vector<RecEntry> entries;
    /// Set when fewer than the requested number of products were available.
    bool short_list = false;

    friend bool operator==(const RecommendedList&, const RecommendedList&) = default;
};

/// Throws ValidationError if ranks are not 1..n, products repeat, scores
/// increase with rank, or an attached path does not run from the list's user
/// to its entry's product.
void check_list(const RecommendedList& list);

/// Training frequency per product and the resulting ranking, sorted by
/// (count desc, product id asc).
struct PopularityModel {
    std::vector<std::size_t> counts;
    std::vector<ProductId> ranking;

    std::size_t count(ProductId p) const noexcept { return p.index() < counts.size() ? counts[p.index()] : 0; }
    std::size_t max_count() const noexcept { return ranking.empty() ? 0 : count(ranking.front()); }
};

/// Catalog products absent from training are ranked last with count 0.
PopularityModel train_mostpop(std::span<const Interaction> train, std::span<const ProductId> catalog = {});

/// Top-k unseen products. `seen` must be sorted.
RecommendedList recommend_mostpop(const PopularityModel& model, UserId user, std::size_t k,
                                  std::span<const ProductId> seen);

/// How recommend_pathcount picks the one path it attaches to an entry.
enum class PathSelection {
    /// Most recent linking interaction, then least popular shared entity.
    recent_first,
    /// Oldest linking interaction, then most popular shared entity.
    oldest_first,
};

struct PathCountOptions {
    std::size_t max_hops = 3;
    /// Relation label used for the user -> product step.
    RelationId interaction_relation;
    PathSelection selection = PathSelection::recent_first;
};

/// Scores each unseen catalog product by the number of simple paths of at
/// most `max_hops` hops reaching it from the user's training products, and
/// attaches one representative path per entry. `catalog` and `seen` must be
/// sorted. Throws ValidationError when the user has no training interactions.
RecommendedList recommend_pathcount(const KnowledgeGraph& kg, const InteractionIndex& train, UserId user,
                                    std::size_t k, std::span<const ProductId> catalog,
                                    std::span<const ProductId> seen, const PathCountOptions& opts);

}  // namespace kgaudit
