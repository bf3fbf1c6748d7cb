#include "kgaudit/metrics_rec.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kgaudit {

namespace {

bool contains(ProductSet s, ProductId p) { return std::binary_search(s.begin(), s.end(), p); }

std::size_t top(const RecommendedList& list, std::size_t k) { return std::min(k, list.entries.size()); }

void require_k(std::size_t k) {
    if (k == 0) throw UsageError("cutoff k must be at least 1");
}

}  // namespace

std::optional<double> ndcg_at_k(const RecommendedList& list, ProductSet relevant, std::size_t k) {
    require_k(k);
    if (relevant.empty()) return std::nullopt;
    double dcg = 0.0;
    for (std::size_t i = 0; i < top(list, k); ++i)
        if (contains(relevant, list.entries[i].product)) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    double idcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    return dcg / idcg;
}

std::optional<double> mrr(const RecommendedList& list, ProductSet relevant, std::size_t k) {
    require_k(k);
    if (relevant.empty()) return std::nullopt;
    for (std::size_t i = 0; i < top(list, k); ++i)
        if (contains(relevant, list.entries[i].product)) return 1.0 / static_cast<double>(i + 1);
    return 0.0;
}

double coverage(std::span<const RecommendedList> lists, ProductSet catalog, std::size_t k) {
    require_k(k);
    if (catalog.empty()) throw UsageError("coverage needs a non-empty catalog");
    std::vector<ProductId> seen;
    for (const auto& l : lists)
        for (std::size_t i = 0; i < top(l, k); ++i)
            if (contains(catalog, l.entries[i].product)) seen.push_back(l.entries[i].product);
    std::sort(seen.begin(), seen.end());
    auto distinct = static_cast<std::size_t>(std::unique(seen.begin(), seen.end()) - seen.begin());
    return static_cast<double>(distinct) / static_cast<double>(catalog.size());
}

double diversity(const RecommendedList& list, std::span<const std::vector<EntityId>> category_of, std::size_t k) {
    require_k(k);
    std::vector<EntityId> cats;
    for (std::size_t i = 0; i < top(list, k); ++i) {
        auto p = list.entries[i].product.index();
        if (p < category_of.size()) cats.insert(cats.end(), category_of[p].begin(), category_of[p].end());
    }
    std::sort(cats.begin(), cats.end());
    auto distinct = static_cast<std::size_t>(std::unique(cats.begin(), cats.end()) - cats.begin());
    return static_cast<double>(distinct) / static_cast<double>(k);
}

std::optional<double> novelty(const RecommendedList& list, const PopularityModel& popularity, std::size_t k) {
    require_k(k);
    const auto n = top(list, k);
    if (n == 0) return std::nullopt;
    const auto max = static_cast<double>(popularity.max_count());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto c = popularity.count(list.entries[i].product);
        sum += max > 0 ? 1.0 - static_cast<double>(c) / max : 1.0;
    }
    return sum / static_cast<double>(n);
}

double serendipity(const RecommendedList& list, const RecommendedList& baseline, std::size_t k) {
    require_k(k);
    if (list.user != baseline.user) throw UsageError("serendipity compares lists of different users");
    std::set<ProductId> base;
    for (std::size_t i = 0; i < top(baseline, k); ++i) base.insert(baseline.entries[i].product);
    std::size_t unexpected = 0;
    for (std::size_t i = 0; i < top(list, k); ++i)
        if (!base.contains(list.entries[i].product)) ++unexpected;
    return static_cast<double>(unexpected) / static_cast<double>(k);
}

std::optional<double> defined_mean(std::span<const std::optional<double>> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values)
        if (v) {
            sum += *v;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace kgaudit
