#include "kgaudit/metrics_expl.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace kgaudit {

std::optional<double> ExplanationWeights::recency(UserId user, ProductId product) const {
    if (!user.valid() || user.index() + 1 >= latest_offsets_.size()) return std::nullopt;
    auto b = latest_.begin() + static_cast<std::ptrdiff_t>(latest_offsets_[user.index()]);
    auto e = latest_.begin() + static_cast<std::ptrdiff_t>(latest_offsets_[user.index() + 1]);
    auto it = std::lower_bound(b, e, product, [](const Linked& l, ProductId p) { return l.product < p; });
    if (it == e || it->product != product) return std::nullopt;
    return it->weight;
}

std::span<const double> ExplanationWeights::chronological(UserId user) const {
    if (!user.valid() || user.index() + 1 >= chrono_offsets_.size()) return {};
    return std::span<const double>(chronological_)
        .subspan(chrono_offsets_[user.index()], chrono_offsets_[user.index() + 1] - chrono_offsets_[user.index()]);
}

ExplanationWeights precompute_weights(std::span<const Interaction> train, const KnowledgeGraph& kg, double beta) {
    if (!(beta > 0.0 && beta <= 1.0)) throw UsageError(fmt::format("beta must lie in (0,1], got {}", beta));
    ExplanationWeights w;
    w.beta_ = beta;

    std::size_t users = 0;
    for (const auto& x : train) users = std::max(users, x.user.index() + 1);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(train[a].user, train[a].timestamp) < std::tie(train[b].user, train[b].timestamp);
    });

    w.chrono_offsets_.assign(users + 1, 0);
    w.latest_offsets_.assign(users + 1, 0);
    w.chronological_.resize(train.size());
    for (std::size_t lo = 0; lo < order.size();) {
        auto hi = lo;
        const auto user = train[order[lo]].user;
        while (hi < order.size() && train[order[hi]].user == user) ++hi;
        const auto t_min = static_cast<double>(train[order[lo]].timestamp);
        const auto t_max = static_cast<double>(train[order[hi - 1]].timestamp);
        double prev = 0.0;
        // Later records overwrite earlier ones, so each product keeps the
        // weight of its most recent interaction.
        std::map<ProductId, double> latest;
        for (auto i = lo; i < hi; ++i) {
            const auto& x = train[order[i]];
            double v = t_max > t_min ? (static_cast<double>(x.timestamp) - t_min) / (t_max - t_min) : 0.5;
            double wi = i == lo ? v : (1.0 - beta) * prev + beta * v;
            w.chronological_[i] = wi;
            latest[x.product] = wi;
            prev = wi;
        }
        w.chrono_offsets_[user.index() + 1] = hi - lo;
        w.latest_offsets_[user.index() + 1] = latest.size();
        for (auto [p, wi] : latest) w.latest_.push_back({p, wi});
        lo = hi;
    }
    std::partial_sum(w.chrono_offsets_.begin(), w.chrono_offsets_.end(), w.chrono_offsets_.begin());
    std::partial_sum(w.latest_offsets_.begin(), w.latest_offsets_.end(), w.latest_offsets_.begin());

    std::map<EntityTypeId, std::size_t> type_max;
    for (std::size_t e = 0; e < kg.id_space(); ++e) {
        if (!kg.members()[e]) continue;
        auto id = EntityId(static_cast<std::int32_t>(e));
        auto& m = type_max[kg.type_of(id)];
        m = std::max(m, kg.degree(id));
    }
    w.popularity_.assign(kg.id_space(), 0.0);
    for (std::size_t e = 0; e < kg.id_space(); ++e) {
        if (!kg.members()[e]) continue;
        auto id = EntityId(static_cast<std::int32_t>(e));
        auto m = type_max[kg.type_of(id)];
        w.popularity_[e] = m > 0 ? std::log1p(static_cast<double>(kg.degree(id))) / std::log1p(static_cast<double>(m)) : 0.0;
    }
    return w;
}

namespace {

std::size_t top(const RecommendedList& list, std::size_t k) {
    if (k == 0) throw UsageError("cutoff k must be at least 1");
    return std::min(k, list.entries.size());
}

std::vector<const ReasoningPath*> explained(const RecommendedList& list, std::size_t k) {
    std::vector<const ReasoningPath*> out;
    for (std::size_t i = 0; i < top(list, k); ++i)
        if (list.entries[i].path) out.push_back(&*list.entries[i].path);
    return out;
}

template <class Key, class Fn>
std::optional<double> distinct_ratio(const RecommendedList& list, std::size_t k, Fn key) {
    auto paths = explained(list, k);
    if (paths.empty()) return std::nullopt;
    std::set<Key> keys;
    for (const auto* p : paths) keys.insert(key(*p));
    return static_cast<double>(keys.size()) / static_cast<double>(paths.size());
}

template <class Key, class Fn>
std::optional<double> concentration(const RecommendedList& list, std::size_t k, std::size_t categories, Fn key) {
    auto paths = explained(list, k);
    if (paths.empty()) return std::nullopt;
    std::map<Key, std::size_t> freq;
    for (const auto* p : paths) ++freq[key(*p)];
    std::vector<std::size_t> counts;
    for (const auto& [_, c] : freq) counts.push_back(c);
    return normalized_entropy(counts, categories);
}

}  // namespace

double normalized_entropy(std::span<const std::size_t> counts, std::size_t categories) {
    std::size_t total = 0, positive = 0;
    for (auto c : counts) {
        total += c;
        positive += c > 0;
    }
    if (categories <= 1 || positive <= 1) return 0.0;
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log2(p);
    }
    return std::clamp(h / std::log2(static_cast<double>(categories)), 0.0, 1.0);
}

std::optional<double> list_fidelity(const RecommendedList& list, std::size_t k) {
    auto n = top(list, k);
    if (n == 0) return std::nullopt;
    return static_cast<double>(explained(list, k).size()) / static_cast<double>(n);
}

std::optional<double> fidelity_at_k(std::span<const RecommendedList> lists, std::size_t k) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& l : lists)
        if (auto f = list_fidelity(l, k)) {
            sum += *f;
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::optional<double> lir(const RecommendedList& list, const ExplanationWeights& weights, std::size_t k) {
    auto paths = explained(list, k);
    if (paths.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto* p : paths) {
        auto w = weights.recency(p->user, p->linking_product());
        if (!w) throw ValidationError("explained entry links an interaction missing from training");
        sum += *w;
    }
    return sum / static_cast<double>(paths.size());
}

std::optional<double> lid(const RecommendedList& list, std::size_t k) {
    return distinct_ratio<ProductId>(list, k, [](const ReasoningPath& p) { return p.linking_product(); });
}

std::optional<double> sep(const RecommendedList& list, const ExplanationWeights& weights, std::size_t k) {
    auto paths = explained(list, k);
    if (paths.empty()) return std::nullopt;
    double sum = 0.0;
    for (const auto* p : paths) sum += weights.popularity(shared_entity_of(*p));
    return sum / static_cast<double>(paths.size());
}

std::optional<double> sed(const RecommendedList& list, std::size_t k) {
    return distinct_ratio<EntityId>(list, k, [](const ReasoningPath& p) { return shared_entity_of(p); });
}

std::optional<double> ptd(const RecommendedList& list, std::size_t k) {
    return distinct_ratio<PathType>(list, k, [](const ReasoningPath& p) { return path_type_of(p); });
}

std::optional<double> ptc(const RecommendedList& list, std::size_t k, std::size_t run_types) {
    return concentration<PathType>(list, k, run_types, [](const ReasoningPath& p) { return path_type_of(p); });
}

std::optional<double> ppc(const RecommendedList& list, const KnowledgeGraph& kg, std::size_t k,
                          std::size_t run_patterns) {
    return concentration<PathPattern>(list, k, run_patterns,
                                      [&](const ReasoningPath& p) { return path_pattern_of(p, kg); });
}

std::size_t run_path_types(std::span<const RecommendedList> lists, std::size_t k) {
    std::set<PathType> types;
    for (const auto& l : lists)
        for (const auto* p : explained(l, k)) types.insert(path_type_of(*p));
    return types.size();
}

std::size_t run_path_patterns(std::span<const RecommendedList> lists, const KnowledgeGraph& kg, std::size_t k) {
    std::set<PathPattern> patterns;
    for (const auto& l : lists)
        for (const auto* p : explained(l, k)) patterns.insert(path_pattern_of(*p, kg));
    return patterns.size();
}

}  // namespace kgaudit
