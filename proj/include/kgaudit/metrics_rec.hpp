#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgaudit/rec_model.hpp"

namespace kgaudit {

/// Sorted product ids; membership by binary search.
using ProductSet = std::span<const ProductId>;

/// Binary-relevance NDCG with log2 discount. nullopt when `relevant` is empty.
std::optional<double> ndcg_at_k(const RecommendedList& list, ProductSet relevant, std::size_t k);

/// Reciprocal rank of the first relevant entry in the top k. nullopt when
/// `relevant` is empty.
std::optional<double> mrr(const RecommendedList& list, ProductSet relevant, std::size_t k);

/// Share of the catalog appearing in at least one top-k list. Throws
/// UsageError on an empty catalog.
double coverage(std::span<const RecommendedList> lists, ProductSet catalog, std::size_t k);

/// Distinct categories over the top-k entries divided by k.
double diversity(const RecommendedList& list, std::span<const std::vector<EntityId>> category_of, std::size_t k);

/// Mean of 1 - count/max_count over the top-k entries; products absent from
/// training contribute 1. nullopt for an empty list.
std::optional<double> novelty(const RecommendedList& list, const PopularityModel& popularity, std::size_t k);

/// Share of the top k not recommended by the baseline at the same k.
double serendipity(const RecommendedList& list, const RecommendedList& baseline, std::size_t k);

/// Per-user utility values at one cutoff. Index i refers to the i-th
/// evaluated user; undefined values are nullopt.
struct UtilityReport {
    std::size_t k = 0;
    std::vector<std::optional<double>> ndcg, mrr, serendipity, diversity, novelty;
    double coverage = 0.0;

    std::optional<double> mean_ndcg, mean_mrr, mean_serendipity, mean_diversity, mean_novelty;
};

/// Mean over defined values; nullopt if none are defined.
std::optional<double> defined_mean(std::span<const std::optional<double>> values);

}  // namespace kgaudit
