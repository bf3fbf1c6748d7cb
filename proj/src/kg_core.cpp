#include "kgaudit/kg_core.hpp"

#include <algorithm>
#include <numeric>

namespace kgaudit {

namespace {

inline void hash_combine(std::size_t& seed, std::size_t v) noexcept {
    seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

std::size_t hash_steps(const std::vector<PathStep>& steps) noexcept {
    std::size_t h = steps.size();
    for (const auto& s : steps) {
        hash_combine(h, static_cast<std::size_t>(s.relation.value));
        hash_combine(h, static_cast<std::size_t>(s.direction));
    }
    return h;
}

}  // namespace

std::size_t PathTypeHash::operator()(const PathType& t) const noexcept { return hash_steps(t.steps); }

std::size_t PathPatternHash::operator()(const PathPattern& p) const noexcept {
    std::size_t h = hash_steps(p.steps);
    for (auto t : p.intermediate_types) hash_combine(h, static_cast<std::size_t>(t.value));
    return h;
}

// ---------------------------------------------------------------------------

KnowledgeGraph::KnowledgeGraph(std::vector<EntityTypeId> entity_types, std::vector<bool> members,
                               std::vector<Triple> triples)
    : entity_types_(std::move(entity_types)), members_(std::move(members)), triples_(std::move(triples)) {
    members_.resize(entity_types_.size(), false);
    std::sort(triples_.begin(), triples_.end());
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
    for (const auto& t : triples_) {
        if (!t.head.valid() || !t.tail.valid() || !t.relation.valid() || t.head.index() >= entity_types_.size() ||
            t.tail.index() >= entity_types_.size())
            throw ValidationError("triple references an entity outside the id space");
        members_[t.head.index()] = true;
        members_[t.tail.index()] = true;
    }
    build_indices();
}

KnowledgeGraph KnowledgeGraph::from_triples(std::vector<EntityTypeId> entity_types, std::vector<Triple> triples) {
    std::vector<bool> members(entity_types.size(), false);
    return KnowledgeGraph(std::move(entity_types), std::move(members), std::move(triples));
}

void KnowledgeGraph::build_indices() {
    const std::size_t n = entity_types_.size();
    entity_count_ = static_cast<std::size_t>(std::count(members_.begin(), members_.end(), true));

    degree_.assign(n, 0);
    for (const auto& t : triples_) {
        ++degree_[t.head.index()];
        ++degree_[t.tail.index()];
    }

    relation_types_.clear();
    for (const auto& t : triples_) relation_types_.push_back(t.relation);
    std::sort(relation_types_.begin(), relation_types_.end());
    relation_types_.erase(std::unique(relation_types_.begin(), relation_types_.end()), relation_types_.end());

    auto build = [&](Csr& csr, bool forward) {
        csr.offsets.assign(n + 1, 0);
        for (const auto& t : triples_) ++csr.offsets[(forward ? t.head : t.tail).index() + 1];
        std::partial_sum(csr.offsets.begin(), csr.offsets.end(), csr.offsets.begin());
        csr.relations.resize(triples_.size());
        csr.targets.resize(triples_.size());
        std::vector<std::size_t> cursor(csr.offsets.begin(), csr.offsets.end() - 1);
        for (const auto& t : triples_) {
            auto from = forward ? t.head : t.tail;
            auto slot = cursor[from.index()]++;
            csr.relations[slot] = t.relation;
            csr.targets[slot] = forward ? t.tail : t.head;
        }
        // Forward edges arrive sorted by (relation, tail) already; backward ones need sorting.
        if (!forward) {
            std::vector<std::pair<RelationId, EntityId>> buf;
            for (std::size_t e = 0; e < n; ++e) {
                auto b = csr.offsets[e], en = csr.offsets[e + 1];
                if (en - b < 2) continue;
                buf.clear();
                for (auto i = b; i < en; ++i) buf.emplace_back(csr.relations[i], csr.targets[i]);
                std::sort(buf.begin(), buf.end());
                for (auto i = b; i < en; ++i) std::tie(csr.relations[i], csr.targets[i]) = buf[i - b];
            }
        }
    };
    build(forward_, true);
    build(backward_, false);
}

EntityTypeId KnowledgeGraph::type_of(EntityId e) const {
    if (!e.valid() || e.index() >= entity_types_.size())
        throw ValidationError("unknown entity id " + std::to_string(e.value));
    return entity_types_[e.index()];
}

std::size_t KnowledgeGraph::degree(EntityId e) const {
    if (!contains(e)) throw ValidationError("entity " + std::to_string(e.value) + " is not in the knowledge graph");
    return degree_[e.index()];
}

std::span<const RelationId> KnowledgeGraph::edge_relations(EntityId e, Direction dir) const {
    if (!contains(e)) return {};
    const auto& c = csr(dir);
    return std::span<const RelationId>(c.relations).subspan(c.offsets[e.index()],
                                                            c.offsets[e.index() + 1] - c.offsets[e.index()]);
}

std::span<const EntityId> KnowledgeGraph::edge_targets(EntityId e, Direction dir) const {
    if (!contains(e)) return {};
    const auto& c = csr(dir);
    return std::span<const EntityId>(c.targets).subspan(c.offsets[e.index()],
                                                        c.offsets[e.index() + 1] - c.offsets[e.index()]);
}

std::span<const EntityId> KnowledgeGraph::neighbors(EntityId e, RelationId r, Direction dir) const {
    auto rels = edge_relations(e, dir);
    auto targets = edge_targets(e, dir);
    auto [lo, hi] = std::equal_range(rels.begin(), rels.end(), r);
    return targets.subspan(static_cast<std::size_t>(lo - rels.begin()), static_cast<std::size_t>(hi - lo));
}

bool KnowledgeGraph::has_step(EntityId from, RelationId r, Direction dir, EntityId to) const {
    auto nb = neighbors(from, r, dir);
    return std::binary_search(nb.begin(), nb.end(), to);
}

// ---------------------------------------------------------------------------

InteractionIndex::InteractionIndex(std::span<const Interaction> interactions) {
    std::int32_t max_user = -1;
    for (const auto& x : interactions) max_user = std::max(max_user, x.user.value);
    const auto users = static_cast<std::size_t>(max_user + 1);

    // Stable order by (user, product, timestamp); the last record of each
    // (user, product) run is the most recent one, later input winning ties.
    std::vector<std::size_t> order(interactions.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = interactions[a];
        const auto& y = interactions[b];
        return std::tie(x.user, x.product, x.timestamp) < std::tie(y.user, y.product, y.timestamp);
    });

    offsets_.assign(users + 1, 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& x = interactions[order[i]];
        bool last = i + 1 == order.size() || interactions[order[i + 1]].user != x.user ||
                    interactions[order[i + 1]].product != x.product;
        if (!last) continue;
        products_.push_back(x.product);
        latest_.push_back(x);
        ++offsets_[x.user.index() + 1];
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

std::span<const ProductId> InteractionIndex::products_of(UserId user) const {
    if (!user.valid() || user.index() + 1 >= offsets_.size()) return {};
    return std::span<const ProductId>(products_).subspan(offsets_[user.index()],
                                                         offsets_[user.index() + 1] - offsets_[user.index()]);
}

const Interaction* InteractionIndex::latest(UserId user, ProductId product) const {
    auto ps = products_of(user);
    auto it = std::lower_bound(ps.begin(), ps.end(), product);
    if (it == ps.end() || *it != product) return nullptr;
    return &latest_[offsets_[user.index()] + static_cast<std::size_t>(it - ps.begin())];
}

// ---------------------------------------------------------------------------

void check_path_structure(const ReasoningPath& path) {
    if (path.hops.size() < 2)
        throw ValidationError("reasoning path needs at least two hops, got " + std::to_string(path.hops.size()));
    if (!path.user.valid()) throw ValidationError("reasoning path has no user");
    for (const auto& h : path.hops)
        if (!h.entity.valid() || !h.relation.valid()) throw ValidationError("reasoning path has an invalid id");
}

PathType path_type_of(const ReasoningPath& path) {
    check_path_structure(path);
    PathType t;
    t.steps.reserve(path.hops.size());
    for (const auto& h : path.hops) t.steps.push_back({h.relation, h.direction});
    return t;
}

PathPattern path_pattern_of(const ReasoningPath& path, const KnowledgeGraph& kg) {
    PathPattern p{path_type_of(path).steps, {}};
    p.intermediate_types.reserve(path.hops.size() - 1);
    for (std::size_t i = 0; i + 1 < path.hops.size(); ++i) p.intermediate_types.push_back(kg.type_of(path.hops[i].entity));
    return p;
}

Interaction linking_interaction_of(const ReasoningPath& path, const InteractionIndex& train) {
    check_path_structure(path);
    const auto* x = train.latest(path.user, path.linking_product());
    if (x == nullptr) throw ValidationError("path links a product the user never interacted with in training");
    return *x;
}

EntityId shared_entity_of(const ReasoningPath& path) {
    check_path_structure(path);
    return path.hops[path.hops.size() - 2].entity;
}

std::size_t degree(const KnowledgeGraph& kg, EntityId e) { return kg.degree(e); }

std::string_view to_string(PathCheck c) noexcept {
    switch (c) {
    case PathCheck::ok: return "ok";
    case PathCheck::too_short: return "too_short";
    case PathCheck::wrong_user: return "wrong_user";
    case PathCheck::wrong_endpoint: return "wrong_endpoint";
    case PathCheck::no_linking_interaction: return "no_linking_interaction";
    case PathCheck::missing_edge: return "missing_edge";
    }
    return "unknown";
}

PathCheck validate_path(const ReasoningPath& path, UserId user, ProductId product, const KnowledgeGraph& kg,
                        const InteractionIndex& train) {
    if (path.hops.size() < 2) return PathCheck::too_short;
    if (path.user != user) return PathCheck::wrong_user;
    if (path.end() != product) return PathCheck::wrong_endpoint;
    if (train.latest(user, path.linking_product()) == nullptr) return PathCheck::no_linking_interaction;
    for (std::size_t i = 1; i < path.hops.size(); ++i) {
        const auto& h = path.hops[i];
        if (!kg.has_step(path.hops[i - 1].entity, h.relation, h.direction, h.entity)) return PathCheck::missing_edge;
    }
    return PathCheck::ok;
}

}  // namespace kgaudit
