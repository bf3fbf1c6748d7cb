#include "kgaudit/rec_model.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace kgaudit {

void check_list(const RecommendedList& list) {
    std::set<ProductId> products;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const auto& e = list.entries[i];
        if (e.rank != i + 1) throw ValidationError("recommendation ranks must be contiguous from 1");
        if (!products.insert(e.product).second) throw ValidationError("product repeated within a recommendation list");
        if (i > 0 && e.score > list.entries[i - 1].score) throw ValidationError("scores must not increase with rank");
        if (e.path) {
            if (e.path->user != list.user) throw ValidationError("attached path starts at a different user");
            if (e.path->hops.empty() || e.path->end() != e.product)
                throw ValidationError("attached path does not end at the recommended product");
        }
    }
}

PopularityModel train_mostpop(std::span<const Interaction> train, std::span<const ProductId> catalog) {
    PopularityModel m;
    std::size_t size = 0;
    for (const auto& x : train) size = std::max(size, x.product.index() + 1);
    for (auto p : catalog) size = std::max(size, p.index() + 1);
    m.counts.assign(size, 0);
    std::vector<bool> listed(size, false);
    for (const auto& x : train) {
        ++m.counts[x.product.index()];
        listed[x.product.index()] = true;
    }
    for (auto p : catalog) listed[p.index()] = true;
    for (std::size_t p = 0; p < size; ++p)
        if (listed[p]) m.ranking.emplace_back(static_cast<std::int32_t>(p));
    std::stable_sort(m.ranking.begin(), m.ranking.end(),
                     [&](ProductId a, ProductId b) { return m.counts[a.index()] > m.counts[b.index()]; });
    return m;
}

RecommendedList recommend_mostpop(const PopularityModel& model, UserId user, std::size_t k,
                                  std::span<const ProductId> seen) {
    if (k == 0) throw UsageError("cutoff k must be at least 1");
    RecommendedList list{user, {}, false};
    for (auto p : model.ranking) {
        if (list.entries.size() == k) break;
        if (std::binary_search(seen.begin(), seen.end(), p)) continue;
        list.entries.push_back({list.entries.size() + 1, p, static_cast<double>(model.count(p)), std::nullopt});
    }
    list.short_list = list.entries.size() < k;
    return list;
}

namespace {

struct Candidate {
    std::size_t count = 0;
    ReasoningPath best;
    std::int64_t best_ts = 0;
    std::size_t best_shared_degree = 0;
};

class PathEnumerator {
public:
    PathEnumerator(const KnowledgeGraph& kg, std::span<const ProductId> catalog, std::span<const ProductId> seen,
                   const PathCountOptions& opts, std::map<ProductId, Candidate>& out)
        : kg_(kg), catalog_(catalog), seen_(seen), opts_(opts), out_(out) {}

    void run(UserId user, const Interaction& link) {
        link_ = &link;
        path_ = ReasoningPath{user, {Hop{opts_.interaction_relation, Direction::forward, link.product}}};
        visited_.assign(1, link.product);
        extend();
    }

private:
    void extend() {
        if (path_.hops.size() >= opts_.max_hops) return;
        const auto from = path_.hops.back().entity;
        for (auto dir : {Direction::forward, Direction::inverse}) {
            auto rels = kg_.edge_relations(from, dir);
            auto targets = kg_.edge_targets(from, dir);
            for (std::size_t i = 0; i < rels.size(); ++i) {
                auto to = targets[i];
                if (std::find(visited_.begin(), visited_.end(), to) != visited_.end()) continue;
                path_.hops.push_back({rels[i], dir, to});
                visited_.push_back(to);
                if (is_candidate(to)) record(to);
                extend();
                visited_.pop_back();
                path_.hops.pop_back();
            }
        }
    }

    bool is_candidate(ProductId p) const {
        return std::binary_search(catalog_.begin(), catalog_.end(), p) &&
               !std::binary_search(seen_.begin(), seen_.end(), p);
    }

    // Lower is better.
    bool better(std::int64_t ts, std::size_t deg, const ReasoningPath& p, const Candidate& c) const {
        if (ts != c.best_ts)
            return opts_.selection == PathSelection::recent_first ? ts > c.best_ts : ts < c.best_ts;
        if (deg != c.best_shared_degree)
            return opts_.selection == PathSelection::recent_first ? deg < c.best_shared_degree
                                                                  : deg > c.best_shared_degree;
        auto ta = path_type_of(p), tb = path_type_of(c.best);
        if (ta != tb) return ta < tb;
        return std::lexicographical_compare(p.hops.begin(), p.hops.end(), c.best.hops.begin(), c.best.hops.end(),
                                            [](const Hop& a, const Hop& b) { return a.entity < b.entity; });
    }

    void record(ProductId to) {
        auto shared = path_.hops[path_.hops.size() - 2].entity;
        auto deg = kg_.contains(shared) ? kg_.degree(shared) : 0;
        auto [it, fresh] = out_.try_emplace(to);
        auto& c = it->second;
        ++c.count;
        if (fresh || better(link_->timestamp, deg, path_, c)) {
            c.best = path_;
            c.best_ts = link_->timestamp;
            c.best_shared_degree = deg;
        }
    }

    const KnowledgeGraph& kg_;
    std::span<const ProductId> catalog_;
    std::span<const ProductId> seen_;
    const PathCountOptions& opts_;
    std::map<ProductId, Candidate>& out_;
    const Interaction* link_ = nullptr;
    ReasoningPath path_;
    std::vector<EntityId> visited_;
};

}  // namespace

RecommendedList recommend_pathcount(const KnowledgeGraph& kg, const InteractionIndex& train, UserId user,
                                    std::size_t k, std::span<const ProductId> catalog,
                                    std::span<const ProductId> seen, const PathCountOptions& opts) {
    if (k == 0) throw UsageError("cutoff k must be at least 1");
    if (opts.max_hops < 2) throw UsageError("max_hops must be at least 2");
    auto products = train.products_of(user);
    if (products.empty()) throw ValidationError("path-count recommendation needs at least one training interaction");

    std::map<ProductId, Candidate> candidates;
    PathEnumerator walk(kg, catalog, seen, opts, candidates);
    for (auto p : products) walk.run(user, *train.latest(user, p));

    std::vector<std::pair<ProductId, const Candidate*>> ranked;
    for (const auto& [p, c] : candidates) ranked.emplace_back(p, &c);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second->count > b.second->count; });

    RecommendedList list{user, {}, false};
    for (const auto& [p, c] : ranked) {
        if (list.entries.size() == k) break;
        list.entries.push_back({list.entries.size() + 1, p, static_cast<double>(c->count), c->best});
    }
    list.short_list = list.entries.size() < k;
    return list;
}

}  // namespace kgaudit
