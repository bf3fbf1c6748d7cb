#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgaudit/ingest.hpp"
#include "kgaudit/rec_model.hpp"

namespace kgaudit {

enum class Dimension { gender, age };
enum class Side { consumer, provider };

std::string_view to_string(Dimension d) noexcept;
std::string_view to_string(Side s) noexcept;

/// Maps subject ids (users or providers) to group indices for one dimension.
struct GroupAssignment {
    Dimension dimension = Dimension::gender;
    Side side = Side::consumer;
    std::vector<std::string> labels;
    /// Indexed by subject id; nullopt for subjects without a label.
    std::vector<std::optional<std::size_t>> group_of;

    std::optional<std::size_t> group(std::size_t subject) const {
        return subject < group_of.size() ? group_of[subject] : std::nullopt;
    }
};

GroupAssignment assign_groups(std::span<const Demographics> attributes, Dimension dimension, Side side);

struct GroupMean {
    std::string label;
    std::size_t members = 0;
    std::optional<double> mean;
};

struct FairnessReport {
    std::string metric;
    Dimension dimension = Dimension::gender;
    Side side = Side::consumer;
    std::vector<GroupMean> groups;
    /// Mean absolute pairwise difference over non-empty groups.
    double delta = 0.0;
    std::vector<std::string> empty_groups;
};

/// Mean of |a - b| over all unordered pairs of `means`; 0 with fewer than two.
double pairwise_delta(std::span<const double> means);

/// `values[i]` belongs to subject `subjects[i]`. Groups without any defined
/// value are reported in `empty_groups` and left out of the pairs.
FairnessReport group_delta(std::span<const std::optional<double>> values, std::span<const std::size_t> subjects,
                           const GroupAssignment& assignment, std::string metric = {});

/// Positionally discounted exposure share (weight 1/log2(rank+1)) of each
/// provider group in the top k. The result has one slot per label plus a
/// trailing "unattributed" slot. All zeros for an empty list.
std::vector<double> exposure_share(const RecommendedList& list, std::span<const std::optional<ProviderId>> provider_of,
                                   const GroupAssignment& providers, std::size_t k);

/// Group exposure averaged over non-empty lists, and its pairwise delta
/// across the labelled groups. Groups with no provider in `catalog` are
/// reported empty.
FairnessReport provider_exposure(std::span<const RecommendedList> lists,
                                 std::span<const std::optional<ProviderId>> provider_of,
                                 const GroupAssignment& providers, std::span<const ProductId> catalog, std::size_t k);

enum class TestKind { welch_t, kruskal_h };

struct TestResult {
    TestKind kind = TestKind::welch_t;
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
};

std::string_view to_string(TestKind k) noexcept;

/// Two-sided Welch unequal-variance t-test. Identical constant samples give
/// t = 0, p = 1; other degenerate inputs throw UsageError.
TestResult welch_ttest(std::span<const double> a, std::span<const double> b);

/// Kruskal-Wallis H with mid-rank tie correction; p from the chi-squared
/// distribution with groups - 1 degrees of freedom.
TestResult kruskal_h(std::span<const std::vector<double>> groups);

}  // namespace kgaudit
