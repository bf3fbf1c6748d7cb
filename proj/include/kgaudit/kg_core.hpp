#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgaudit/error.hpp"

namespace kgaudit {

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

/// Dense, non-negative identifier assigned at load time. The tag keeps the
/// entity, relation, user and entity-type namespaces from mixing.
template <class Tag>
struct StrongId {
    std::int32_t value = -1;

    constexpr StrongId() = default;
    constexpr explicit StrongId(std::int32_t v) : value(v) {}

    constexpr bool valid() const noexcept { return value >= 0; }
    constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(value); }

    friend constexpr auto operator<=>(StrongId, StrongId) = default;
};

struct EntityTag;
struct RelationTag;
struct UserTag;
struct EntityTypeTag;

using EntityId = StrongId<EntityTag>;
using RelationId = StrongId<RelationTag>;
using UserId = StrongId<UserTag>;
using EntityTypeId = StrongId<EntityTypeTag>;

/// Products are KG entities; a product id is the entity id of that product.
using ProductId = EntityId;

template <class Tag>
struct StrongIdHash {
    std::size_t operator()(StrongId<Tag> id) const noexcept { return std::hash<std::int32_t>{}(id.value); }
};

/// Bidirectional label <-> id map. Ids are handed out densely in first-seen order.
template <class Id>
class Vocabulary {
public:
    Id intern(std::string_view label) {
        auto it = index_.find(std::string(label));
        if (it != index_.end()) return Id(it->second);
        auto id = static_cast<std::int32_t>(labels_.size());
        labels_.emplace_back(label);
        index_.emplace(labels_.back(), id);
        return Id(id);
    }

    std::optional<Id> find(std::string_view label) const {
        auto it = index_.find(std::string(label));
        if (it == index_.end()) return std::nullopt;
        return Id(it->second);
    }

    const std::string& label(Id id) const {
        if (!id.valid() || id.index() >= labels_.size())
            throw ValidationError("id " + std::to_string(id.value) + " has no label");
        return labels_[id.index()];
    }

    std::size_t size() const noexcept { return labels_.size(); }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.labels_ == b.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, std::int32_t> index_;
};

/// Every label namespace of a dataset. Shared by the KG, the interaction log
/// and all method outputs so that ids line up across files.
struct Labels {
    Vocabulary<EntityId> entities;
    Vocabulary<RelationId> relations;
    Vocabulary<UserId> users;
    Vocabulary<EntityTypeId> entity_types;

    friend bool operator==(const Labels&, const Labels&) = default;
};

inline constexpr std::string_view kUnknownEntityType = "unknown";

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    friend constexpr auto operator<=>(const Triple&, const Triple&) = default;
};

struct Interaction {
    UserId user;
    ProductId product;
    double rating = 0.0;
    std::int64_t timestamp = 0;

    friend bool operator==(const Interaction&, const Interaction&) = default;
};

enum class Direction : std::uint8_t { forward, inverse };

/// One step of a reasoning path: the relation traversed and the entity reached.
struct Hop {
    RelationId relation;
    Direction direction = Direction::forward;
    EntityId entity;

    friend bool operator==(const Hop&, const Hop&) = default;
};

/// user -r1-> e1 -r2-> e2 ... -rn-> en. hops[i] holds (r_{i+1}, e_{i+1}).
/// e1 is the linking product; en is the recommended product.
struct ReasoningPath {
    UserId user;
    std::vector<Hop> hops;

    std::size_t length() const noexcept { return hops.size(); }
    EntityId linking_product() const { return hops.front().entity; }
    EntityId end() const { return hops.back().entity; }

    friend bool operator==(const ReasoningPath&, const ReasoningPath&) = default;
};

struct PathStep {
    RelationId relation;
    Direction direction = Direction::forward;

    friend constexpr auto operator<=>(const PathStep&, const PathStep&) = default;
};

/// Relation/direction sequence of a path, independent of the entities visited.
struct PathType {
    std::vector<PathStep> steps;

    friend auto operator<=>(const PathType&, const PathType&) = default;
};

/// PathType refined with the types of the intermediate entities e1..e(n-1).
struct PathPattern {
    std::vector<PathStep> steps;
    std::vector<EntityTypeId> intermediate_types;

    friend auto operator<=>(const PathPattern&, const PathPattern&) = default;
};

struct PathTypeHash {
    std::size_t operator()(const PathType& t) const noexcept;
};

struct PathPatternHash {
    std::size_t operator()(const PathPattern& p) const noexcept;
};

// ---------------------------------------------------------------------------
// Knowledge graph
// ---------------------------------------------------------------------------

/// Immutable typed graph with degree and two-way adjacency indices.
///
/// Entity ids are global (they index `Labels::entities`); the graph records
/// which of them are members. Triples are kept sorted and unique.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    /// `entity_types[e]` is the type tag of entity e; `members` flags the
    /// entities that belong to the graph. Entities referenced by triples are
    /// always members.
    KnowledgeGraph(std::vector<EntityTypeId> entity_types, std::vector<bool> members, std::vector<Triple> triples);

    /// Members are exactly the endpoints of `triples`.
    static KnowledgeGraph from_triples(std::vector<EntityTypeId> entity_types, std::vector<Triple> triples);

    std::size_t id_space() const noexcept { return entity_types_.size(); }
    std::size_t entity_count() const noexcept { return entity_count_; }
    std::size_t triple_count() const noexcept { return triples_.size(); }
    std::size_t relation_type_count() const noexcept { return relation_types_.size(); }

    bool contains(EntityId e) const noexcept {
        return e.valid() && e.index() < members_.size() && members_[e.index()];
    }

    std::span<const Triple> triples() const noexcept { return triples_; }
    const std::vector<RelationId>& relation_types() const noexcept { return relation_types_; }
    const std::vector<EntityTypeId>& entity_types() const noexcept { return entity_types_; }
    const std::vector<bool>& members() const noexcept { return members_; }

    EntityTypeId type_of(EntityId e) const;

    /// Number of triples incident to `e`. Throws ValidationError for non-members.
    std::size_t degree(EntityId e) const;

    /// Neighbours of `e` over relation `r`: tails of (e, r, *) when forward,
    /// heads of (*, r, e) when inverse. Sorted ascending.
    std::span<const EntityId> neighbors(EntityId e, RelationId r, Direction dir) const;

    /// All (relation, neighbour) edges leaving `e` in one direction, sorted.
    std::span<const RelationId> edge_relations(EntityId e, Direction dir) const;
    std::span<const EntityId> edge_targets(EntityId e, Direction dir) const;

    bool has_step(EntityId from, RelationId r, Direction dir, EntityId to) const;

    friend bool operator==(const KnowledgeGraph& a, const KnowledgeGraph& b) {
        return a.entity_types_ == b.entity_types_ && a.members_ == b.members_ && a.triples_ == b.triples_;
    }

private:
    struct Csr {
        std::vector<std::size_t> offsets;
        std::vector<RelationId> relations;
        std::vector<EntityId> targets;
    };

    const Csr& csr(Direction dir) const noexcept { return dir == Direction::forward ? forward_ : backward_; }
    void build_indices();

    std::vector<EntityTypeId> entity_types_;
    std::vector<bool> members_;
    std::vector<Triple> triples_;
    std::vector<RelationId> relation_types_;
    std::vector<std::size_t> degree_;
    std::size_t entity_count_ = 0;
    Csr forward_;
    Csr backward_;
};

// ---------------------------------------------------------------------------
// Interaction index
// ---------------------------------------------------------------------------

/// Per-user lookup of the most recent interaction with each product.
/// Equal timestamps resolve to the record that appears later in the input.
class InteractionIndex {
public:
    InteractionIndex() = default;
    explicit InteractionIndex(std::span<const Interaction> interactions);

    const Interaction* latest(UserId user, ProductId product) const;

    /// Products the user interacted with, ascending by id.
    std::span<const ProductId> products_of(UserId user) const;

    std::size_t user_space() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }

private:
    std::vector<std::size_t> offsets_;
    std::vector<ProductId> products_;
    std::vector<Interaction> latest_;
};

// ---------------------------------------------------------------------------
// Path accessors
// ---------------------------------------------------------------------------

/// Throws ValidationError if `path` has fewer than two hops or invalid ids.
void check_path_structure(const ReasoningPath& path);

PathType path_type_of(const ReasoningPath& path);

PathPattern path_pattern_of(const ReasoningPath& path, const KnowledgeGraph& kg);

/// Most recent training interaction of (path.user, e1). Throws ValidationError
/// when the user never interacted with e1.
Interaction linking_interaction_of(const ReasoningPath& path, const InteractionIndex& train);

/// Penultimate entity. For 2-hop paths this is the linking product itself.
EntityId shared_entity_of(const ReasoningPath& path);

std::size_t degree(const KnowledgeGraph& kg, EntityId e);

enum class PathCheck {
    ok,
    too_short,
    wrong_user,
    wrong_endpoint,
    no_linking_interaction,
    missing_edge,
};

std::string_view to_string(PathCheck c) noexcept;

/// Full validity check for a path attached to `user`'s recommendation of `product`.
PathCheck validate_path(const ReasoningPath& path, UserId user, ProductId product, const KnowledgeGraph& kg,
                        const InteractionIndex& train);

}  // namespace kgaudit
