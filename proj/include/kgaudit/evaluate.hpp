#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgaudit/fairness_stats.hpp"
#include "kgaudit/ingest.hpp"
#include "kgaudit/io.hpp"
#include "kgaudit/metrics_expl.hpp"
#include "kgaudit/metrics_rec.hpp"
#include "kgaudit/rec_model.hpp"
#include "kgaudit/split.hpp"

namespace kgaudit {

/// Everything shared by the evaluation of every method on one split.
/// Immutable once built.
class EvaluationContext {
public:
    EvaluationContext(const DatasetBundle& bundle, const SplitBundle& split, double beta, std::size_t baseline_k);

    const DatasetBundle& bundle() const noexcept { return bundle_; }
    const SplitBundle& split() const noexcept { return split_; }

    /// Users with a non-empty test partition, ascending.
    const std::vector<UserId>& users() const noexcept { return users_; }
    std::span<const ProductId> test_products(std::size_t i) const { return test_[i]; }
    std::span<const ProductId> seen_products(std::size_t i) const { return seen_[i]; }

    const InteractionIndex& train_index() const noexcept { return train_index_; }
    const PopularityModel& popularity() const noexcept { return popularity_; }
    const ExplanationWeights& weights() const noexcept { return weights_; }
    /// Most-popular list of evaluated user i at the baseline cutoff.
    const RecommendedList& baseline(std::size_t i) const { return baseline_[i]; }
    std::size_t baseline_k() const noexcept { return baseline_k_; }

    const GroupAssignment& consumers(Dimension d) const { return d == Dimension::gender ? user_gender_ : user_age_; }
    const GroupAssignment& providers(Dimension d) const {
        return d == Dimension::gender ? provider_gender_ : provider_age_;
    }

private:
    const DatasetBundle& bundle_;
    const SplitBundle& split_;
    std::vector<UserId> users_;
    std::vector<std::vector<ProductId>> test_;
    std::vector<std::vector<ProductId>> seen_;
    InteractionIndex train_index_;
    PopularityModel popularity_;
    ExplanationWeights weights_;
    std::vector<RecommendedList> baseline_;
    std::size_t baseline_k_;
    GroupAssignment user_gender_, user_age_, provider_gender_, provider_age_;
};

/// Significance of the gap between demographic groups for one metric:
/// Welch t for the two gender groups, Kruskal-Wallis H across age groups.
struct GroupTest {
    std::string metric;
    Dimension dimension = Dimension::gender;
    std::optional<TestResult> result;
    std::string note;
};

struct CutoffEvaluation {
    std::size_t k = 0;
    UtilityReport utility;
    ExplanationQualityReport explanation;
    std::vector<FairnessReport> consumer_fairness;
    std::vector<FairnessReport> provider_fairness;
    std::vector<GroupTest> consumer_tests;
    /// Headline values keyed by metric acronym (NDCG, MRR, ..., PF, PF_age).
    std::map<std::string, double> summary;
};

struct MethodEvaluation {
    std::string name;
    std::vector<CutoffEvaluation> cutoffs;
    std::vector<std::pair<std::size_t, std::optional<double>>> fidelity_sweep;
    LoadLog log;
};

/// Lists aligned with ctx.users(); users without a list get an empty one.
std::vector<RecommendedList> align_lists(const EvaluationContext& ctx, std::span<const RecommendedList> lists);

/// Computes every metric at every cutoff. Per-user work is spread over
/// `workers` threads; results do not depend on the worker count.
MethodEvaluation evaluate_method(const EvaluationContext& ctx, const MethodOutput& output,
                                 std::span<const std::size_t> cutoffs, std::span<const std::size_t> fidelity_cutoffs,
                                 unsigned workers = 1);

/// Per-user metric names in the order they are reported.
const std::vector<std::string>& per_user_metric_names();

/// Per-user column of `metric` from a cutoff evaluation.
std::span<const std::optional<double>> per_user_values(const CutoffEvaluation& c, std::string_view metric);

}  // namespace kgaudit
