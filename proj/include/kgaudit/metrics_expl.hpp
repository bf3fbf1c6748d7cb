#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kgaudit/rec_model.hpp"

namespace kgaudit {

/// Precomputed recency weights for linking interactions and popularity
/// weights for shared entities.
///
/// Recency: per user, training timestamps are min-max normalised to [0,1]
/// (0.5 for every record when they are all equal) and exponentially smoothed
/// in chronological order, w1 = v1 and wi = (1 - beta) w(i-1) + beta vi.
/// Popularity: log(1 + degree) / log(1 + max degree among entities of the
/// same type).
class ExplanationWeights {
public:
    ExplanationWeights() = default;

    /// Weight of the user's most recent training interaction with `product`;
    /// nullopt if there is none.
    std::optional<double> recency(UserId user, ProductId product) const;

    /// Recency weights of a user's training interactions in chronological order.
    std::span<const double> chronological(UserId user) const;

    double popularity(EntityId e) const noexcept {
        return e.valid() && e.index() < popularity_.size() ? popularity_[e.index()] : 0.0;
    }

    double beta() const noexcept { return beta_; }

private:
    friend ExplanationWeights precompute_weights(std::span<const Interaction> train, const KnowledgeGraph& kg,
                                                 double beta);

    struct Linked {
        ProductId product;
        double weight;
    };

    double beta_ = 0.3;
    std::vector<std::size_t> chrono_offsets_;
    std::vector<double> chronological_;
    std::vector<std::size_t> latest_offsets_;
    /// Per user, sorted by product, weight of the latest interaction.
    std::vector<Linked> latest_;
    std::vector<double> popularity_;
};

/// Throws UsageError unless beta lies in (0, 1].
ExplanationWeights precompute_weights(std::span<const Interaction> train, const KnowledgeGraph& kg, double beta = 0.3);

/// Share of explained entries among the top min(k, length) of each
/// non-empty list, averaged over those lists. nullopt when no list is non-empty.
std::optional<double> fidelity_at_k(std::span<const RecommendedList> lists, std::size_t k);

/// Fidelity of one list; nullopt for an empty list.
std::optional<double> list_fidelity(const RecommendedList& list, std::size_t k);

// Path-property metrics below are computed over the explained entries among
// the top k and return nullopt when there are none.

std::optional<double> lir(const RecommendedList& list, const ExplanationWeights& weights, std::size_t k);
std::optional<double> lid(const RecommendedList& list, std::size_t k);
std::optional<double> sep(const RecommendedList& list, const ExplanationWeights& weights, std::size_t k);
std::optional<double> sed(const RecommendedList& list, std::size_t k);
std::optional<double> ptd(const RecommendedList& list, std::size_t k);

/// Normalised Shannon entropy (base 2) of the path-type distribution in the
/// list, divided by log2(run_types). 0 when run_types <= 1 or the list has a
/// single type.
std::optional<double> ptc(const RecommendedList& list, std::size_t k, std::size_t run_types);

/// As ptc, over path patterns (types refined by intermediate entity types).
std::optional<double> ppc(const RecommendedList& list, const KnowledgeGraph& kg, std::size_t k,
                          std::size_t run_patterns);

/// Distinct path types / patterns over the explained top-k entries of every list.
std::size_t run_path_types(std::span<const RecommendedList> lists, std::size_t k);
std::size_t run_path_patterns(std::span<const RecommendedList> lists, const KnowledgeGraph& kg, std::size_t k);

/// Entropy of `counts` (base 2) divided by log2(categories); 0 when
/// categories <= 1 or fewer than two counts are positive.
double normalized_entropy(std::span<const std::size_t> counts, std::size_t categories);

struct ExplanationQualityReport {
    std::size_t k = 0;
    std::vector<std::optional<double>> fid, lir, lid, sep, sed, ptd, ptc, ppc;
    std::optional<double> mean_fid, mean_lir, mean_lid, mean_sep, mean_sed, mean_ptd, mean_ptc, mean_ppc;
    std::size_t run_types = 0;
    std::size_t run_patterns = 0;
};

}  // namespace kgaudit
