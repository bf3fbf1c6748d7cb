#pragma once

// Builders for small hand-written graphs, interaction logs and lists.

#include <initializer_list>
#include <string>
#include <tuple>
#include <vector>

#include "kgaudit/io.hpp"
#include "kgaudit/kg_core.hpp"
#include "kgaudit/rec_model.hpp"

namespace toy {

using namespace kgaudit;

struct World {
    Labels labels;

    EntityId e(const std::string& s) { return labels.entities.intern(s); }
    RelationId r(const std::string& s) { return labels.relations.intern(s); }
    UserId u(const std::string& s) { return labels.users.intern(s); }

    /// Entities are typed by the first letter of their label.
    KnowledgeGraph graph(std::initializer_list<std::tuple<const char*, const char*, const char*>> rows) {
        std::vector<Triple> ts;
        for (auto [h, rel, t] : rows) ts.push_back({e(h), r(rel), e(t)});
        return KnowledgeGraph::from_triples(types(), std::move(ts));
    }

    std::vector<EntityTypeId> types() {
        std::vector<EntityTypeId> out;
        for (const auto& l : labels.entities.labels()) out.push_back(labels.entity_types.intern(l.substr(0, 1)));
        return out;
    }

    Interaction x(const std::string& user, const std::string& product, std::int64_t ts, double rating = 1.0) {
        return {u(user), e(product), rating, ts};
    }

    /// Path string; the user is interned on the fly.
    ReasoningPath path(const std::string& text) {
        if (text.size() > 1 && text[0] == 'U') u(text.substr(1, text.find(' ') - 1));
        return parse_path(text, labels);
    }

    /// Entries get scores len, len-1, ... so the list is well-formed.
    RecommendedList list(const std::string& user, std::initializer_list<const char*> products) {
        RecommendedList l{u(user), {}, false};
        std::size_t rank = 1;
        for (auto p : products)
            l.entries.push_back({rank++, e(p), static_cast<double>(products.size() - rank + 2), std::nullopt});
        return l;
    }
};

inline std::vector<ProductId> sorted(std::vector<ProductId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace toy
