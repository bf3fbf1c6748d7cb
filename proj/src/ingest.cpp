#include "kgaudit/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "text.hpp"

namespace kgaudit {

namespace fs = std::filesystem;

std::string_view to_string(Gender g) noexcept { return kGenderLabels[static_cast<std::size_t>(g)]; }
std::string_view to_string(AgeGroup a) noexcept { return kAgeLabels[static_cast<std::size_t>(a)]; }

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_missing_marker(std::string_view s) {
    auto l = lower(text::trim(s));
    return l.empty() || l == "na" || l == "n/a" || l == "nan" || l == "-" || l == "none" || l == "unknown" ||
           l == "null";
}

}  // namespace

std::optional<Gender> parse_gender(std::string_view s) {
    if (is_missing_marker(s)) return std::nullopt;
    auto l = lower(text::trim(s));
    if (l == "m" || l == "male") return Gender::male;
    if (l == "f" || l == "female") return Gender::female;
    throw ParseError("unrecognised gender label '" + std::string(s) + "'");
}

std::optional<AgeGroup> parse_age(std::string_view s) {
    if (is_missing_marker(s)) return std::nullopt;
    auto t = text::trim(s);
    for (std::size_t i = 0; i < kAgeLabels.size(); ++i)
        if (lower(t) == lower(kAgeLabels[i])) return static_cast<AgeGroup>(i);
    static const std::map<std::string, AgeGroup, std::less<>> codes = {
        {"1", AgeGroup::under_18},  {"18", AgeGroup::age_18_24}, {"25", AgeGroup::age_25_34},
        {"35", AgeGroup::age_35_44}, {"45", AgeGroup::age_45_49}, {"50", AgeGroup::age_50_55},
        {"56", AgeGroup::age_56_plus}};
    if (auto it = codes.find(t); it != codes.end()) return it->second;
    throw ParseError("unrecognised age bucket '" + std::string(s) + "'");
}

void PreprocessConfig::validate() const {
    if (!(min_relation_share >= 0.0 && min_relation_share < 1.0))
        throw UsageError(fmt::format("min_relation_share must lie in [0,1), got {}", min_relation_share));
}

const Demographics& DatasetBundle::attributes(UserId u) const {
    static const Demographics none{};
    return u.valid() && u.index() < user_attributes.size() ? user_attributes[u.index()] : none;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct InteractionKey {
    std::int32_t user, product;
    std::int64_t ts;
    bool operator==(const InteractionKey&) const = default;
};

struct InteractionKeyHash {
    std::size_t operator()(const InteractionKey& k) const noexcept {
        std::uint64_t h = static_cast<std::uint32_t>(k.user);
        h = h * 0x100000001b3ULL ^ static_cast<std::uint32_t>(k.product);
        h = h * 0x100000001b3ULL ^ static_cast<std::uint64_t>(k.ts);
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

}  // namespace

std::vector<Interaction> parse_interactions(std::istream& in, Labels& labels, const TextFormat& fmt,
                                            std::string_view source, std::size_t* duplicates) {
    std::vector<Interaction> out;
    std::unordered_set<InteractionKey, InteractionKeyHash> seen;
    std::size_t dups = 0;
    text::RowReader rows(in, fmt.delimiter, source);
    while (rows.next()) {
        rows.expect_arity(4);
        const auto& f = rows.fields();
        if (f[0].empty() || f[1].empty()) rows.fail("empty user or product label");
        Interaction x;
        x.rating = rows.to_double(2);
        x.timestamp = rows.to_int(3);
        if (x.timestamp < 0) rows.fail("negative timestamp");
        x.user = labels.users.intern(f[0]);
        x.product = labels.entities.intern(f[1]);
        if (!seen.insert({x.user.value, x.product.value, x.timestamp}).second) {
            ++dups;
            continue;
        }
        out.push_back(x);
    }
    if (duplicates != nullptr) *duplicates = dups;
    return out;
}

ParsedKg parse_kg(std::istream& triples, std::istream& entity_types, Labels& labels, const TextFormat& fmt) {
    std::vector<std::pair<EntityId, EntityTypeId>> typed;
    {
        text::RowReader rows(entity_types, fmt.delimiter, "entity_types");
        while (rows.next()) {
            rows.expect_arity(2);
            const auto& f = rows.fields();
            if (f[0].empty() || f[1].empty()) rows.fail("empty entity or type label");
            typed.emplace_back(labels.entities.intern(f[0]), labels.entity_types.intern(f[1]));
        }
    }
    std::vector<Triple> rows_out;
    {
        text::RowReader rows(triples, fmt.delimiter, "kg_triples");
        while (rows.next()) {
            rows.expect_arity(3);
            const auto& f = rows.fields();
            if (f[0].empty() || f[1].empty() || f[2].empty()) rows.fail("empty triple field");
            auto h = labels.entities.intern(f[0]);
            auto r = labels.relations.intern(f[1]);
            auto t = labels.entities.intern(f[2]);
            rows_out.push_back({h, r, t});
        }
    }
    const auto unknown = labels.entity_types.intern(kUnknownEntityType);
    std::vector<EntityTypeId> types(labels.entities.size(), unknown);
    std::vector<bool> members(labels.entities.size(), false);
    for (auto [e, t] : typed) {
        types[e.index()] = t;
        members[e.index()] = true;
    }
    ParsedKg out;
    const auto raw = rows_out.size();
    std::sort(rows_out.begin(), rows_out.end());
    rows_out.erase(std::unique(rows_out.begin(), rows_out.end()), rows_out.end());
    out.duplicate_triples = raw - rows_out.size();
    out.kg = KnowledgeGraph(std::move(types), std::move(members), std::move(rows_out));
    return out;
}

template <class Id>
std::vector<Demographics> parse_attributes(std::istream& in, Vocabulary<Id>& vocab, const TextFormat& fmt,
                                           std::string_view source) {
    std::vector<std::pair<Id, Demographics>> rows_out;
    text::RowReader rows(in, fmt.delimiter, source);
    while (rows.next()) {
        rows.expect_arity(3);
        const auto& f = rows.fields();
        if (f[0].empty()) rows.fail("empty subject label");
        Demographics d;
        try {
            d.gender = parse_gender(f[1]);
            d.age = parse_age(f[2]);
        } catch (const ParseError& e) {
            rows.fail(e.what());
        }
        rows_out.emplace_back(vocab.intern(f[0]), d);
    }
    std::vector<Demographics> out(vocab.size());
    for (const auto& [id, d] : rows_out) out[id.index()] = d;
    return out;
}

template std::vector<Demographics> parse_attributes<UserId>(std::istream&, Vocabulary<UserId>&, const TextFormat&,
                                                            std::string_view);
template std::vector<Demographics> parse_attributes<ProviderId>(std::istream&, Vocabulary<ProviderId>&,
                                                                const TextFormat&, std::string_view);

std::vector<std::optional<ProviderId>> parse_product_providers(std::istream& in, const Labels& labels,
                                                               Vocabulary<ProviderId>& providers,
                                                               const TextFormat& fmt) {
    std::vector<std::optional<ProviderId>> out(labels.entities.size());
    text::RowReader rows(in, fmt.delimiter, "product_providers");
    while (rows.next()) {
        rows.expect_arity(2);
        const auto& f = rows.fields();
        if (f[0].empty() || f[1].empty()) rows.fail("empty product or provider label");
        auto p = labels.entities.find(f[0]);
        if (!p) continue;
        out[p->index()] = providers.intern(f[1]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Preprocessing steps
// ---------------------------------------------------------------------------

namespace {

std::vector<bool> membership(std::span<const ProductId> catalog, std::size_t size) {
    for (auto p : catalog) size = std::max(size, p.index() + 1);
    std::vector<bool> in(size, false);
    for (auto p : catalog) in[p.index()] = true;
    return in;
}

std::vector<Triple> head_rule(const KnowledgeGraph& kg, std::span<const ProductId> catalog) {
    auto in = membership(catalog, kg.id_space());
    std::vector<Triple> kept;
    for (const auto& t : kg.triples())
        if (in[t.head.index()] && !in[t.tail.index()]) kept.push_back(t);
    return kept;
}

}  // namespace

KnowledgeGraph restrict_to_catalog(const KnowledgeGraph& kg, std::span<const ProductId> catalog) {
    return KnowledgeGraph::from_triples(kg.entity_types(), head_rule(kg, catalog));
}

KnowledgeGraph filter_kg(const KnowledgeGraph& kg, std::span<const ProductId> catalog, const PreprocessConfig& cfg) {
    cfg.validate();
    auto kept = head_rule(kg, catalog);
    std::map<RelationId, std::size_t> count;
    for (const auto& t : kept) ++count[t.relation];
    // An integral threshold computed in floating point is snapped back to the
    // integer so that "exactly share * total" survives the strict comparison.
    double threshold = cfg.min_relation_share * static_cast<double>(kept.size());
    if (double r = std::round(threshold); std::abs(threshold - r) <= 1e-9 * std::max(1.0, threshold)) threshold = r;
    std::erase_if(kept, [&](const Triple& t) { return static_cast<double>(count[t.relation]) < threshold; });
    return KnowledgeGraph::from_triples(kg.entity_types(), std::move(kept));
}

std::vector<Interaction> kcore_filter(std::span<const Interaction> interactions, const PreprocessConfig& cfg) {
    std::size_t users = 0, products = 0;
    for (const auto& x : interactions) {
        users = std::max(users, x.user.index() + 1);
        products = std::max(products, x.product.index() + 1);
    }
    std::vector<bool> alive(interactions.size(), true);
    std::vector<bool> user_ok(users, true), product_ok(products, true);
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<std::size_t> uc(users, 0), pc(products, 0);
        for (std::size_t i = 0; i < interactions.size(); ++i) {
            if (!alive[i]) continue;
            ++uc[interactions[i].user.index()];
            ++pc[interactions[i].product.index()];
        }
        for (std::size_t u = 0; u < users; ++u) user_ok[u] = uc[u] >= cfg.min_user_interactions;
        for (std::size_t p = 0; p < products; ++p) product_ok[p] = pc[p] >= cfg.min_product_interactions;
        for (std::size_t i = 0; i < interactions.size(); ++i) {
            if (alive[i] && !(user_ok[interactions[i].user.index()] && product_ok[interactions[i].product.index()])) {
                alive[i] = false;
                changed = true;
            }
        }
    }
    std::vector<Interaction> out;
    for (std::size_t i = 0; i < interactions.size(); ++i)
        if (alive[i]) out.push_back(interactions[i]);
    return out;
}

AlignedInteractions align_catalog(std::span<const Interaction> interactions, const KnowledgeGraph& kg) {
    AlignedInteractions out;
    for (const auto& x : interactions)
        if (kg.contains(x.product) && kg.degree(x.product) > 0) {
            out.interactions.push_back(x);
            out.catalog.push_back(x.product);
        }
    std::sort(out.catalog.begin(), out.catalog.end());
    out.catalog.erase(std::unique(out.catalog.begin(), out.catalog.end()), out.catalog.end());
    return out;
}

std::vector<Interaction> sample_users(std::span<const Interaction> interactions, std::size_t count,
                                      std::uint64_t seed) {
    std::vector<UserId> users;
    for (const auto& x : interactions) users.push_back(x.user);
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    if (count >= users.size()) return {interactions.begin(), interactions.end()};

    // Partial Fisher-Yates on raw engine output; std::shuffle and the standard
    // distributions are implementation-defined, this is not.
    std::mt19937_64 rng(seed);
    auto bounded = [&](std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        for (;;) {
            auto v = rng();
            if (v < limit) return v % n;
        }
    };
    for (std::size_t i = 0; i < count; ++i) {
        auto j = i + static_cast<std::size_t>(bounded(users.size() - i));
        std::swap(users[i], users[j]);
    }
    std::vector<bool> keep(users.back().index() + 1, false);
    for (std::size_t i = 0; i < count; ++i) keep[users[i].index()] = true;
    std::vector<Interaction> out;
    for (const auto& x : interactions)
        if (x.user.index() < keep.size() && keep[x.user.index()]) out.push_back(x);
    return out;
}

DatasetStats compute_stats(const DatasetBundle& b) {
    DatasetStats s;
    std::vector<UserId> users;
    for (const auto& x : b.interactions) users.push_back(x.user);
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
    s.users = users.size();
    s.products = b.catalog.size();
    s.interactions = b.interactions.size();
    s.density = s.users && s.products
                    ? static_cast<double>(s.interactions) / (static_cast<double>(s.users) * static_cast<double>(s.products))
                    : 0.0;

    const auto& kg = b.kg;
    s.entities = kg.entity_count();
    std::vector<EntityTypeId> types;
    for (std::size_t e = 0; e < kg.id_space(); ++e)
        if (kg.members()[e]) types.push_back(kg.entity_types()[e]);
    std::sort(types.begin(), types.end());
    s.entity_types = static_cast<std::size_t>(std::unique(types.begin(), types.end()) - types.begin());
    s.relations = kg.triple_count();
    s.relation_types = kg.relation_type_count();

    std::size_t products_in_kg = 0, product_degree = 0;
    for (auto p : b.catalog)
        if (kg.contains(p)) {
            ++products_in_kg;
            product_degree += kg.degree(p);
        }
    const auto externals = s.entities - products_in_kg;
    s.kg_sparsity = products_in_kg && externals ? static_cast<double>(s.relations) /
                                                      (static_cast<double>(products_in_kg) * static_cast<double>(externals))
                                                : 0.0;
    s.avg_degree_overall = s.entities ? 2.0 * static_cast<double>(s.relations) / static_cast<double>(s.entities) : 0.0;
    s.avg_degree_products =
        products_in_kg ? static_cast<double>(product_degree) / static_cast<double>(products_in_kg) : 0.0;

    std::vector<bool> genders(kGenderLabels.size(), false), ages(kAgeLabels.size(), false);
    for (auto u : users) {
        const auto& d = b.attributes(u);
        if (d.gender) genders[static_cast<std::size_t>(*d.gender)] = true;
        if (d.age) ages[static_cast<std::size_t>(*d.age)] = true;
    }
    s.gender_groups = static_cast<std::size_t>(std::count(genders.begin(), genders.end(), true));
    s.age_groups = static_cast<std::size_t>(std::count(ages.begin(), ages.end(), true));
    return s;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

RawDataset load_raw(const RawPaths& paths, const TextFormat& fmt) {
    RawDataset raw;
    if (paths.interactions.empty() || paths.kg_triples.empty())
        throw UsageError("the interactions and kg_triples inputs are required");
    {
        auto triples = text::open_input(paths.kg_triples);
        std::ifstream types;
        std::istringstream none;
        if (!paths.entity_types.empty()) types = text::open_input(paths.entity_types);
        auto parsed = paths.entity_types.empty() ? parse_kg(triples, none, raw.labels, fmt)
                                                 : parse_kg(triples, types, raw.labels, fmt);
        raw.kg = std::move(parsed.kg);
        raw.duplicate_triples = parsed.duplicate_triples;
    }
    {
        auto in = text::open_input(paths.interactions);
        raw.interactions = parse_interactions(in, raw.labels, fmt, "interactions", &raw.duplicate_interactions);
    }
    if (!paths.user_attributes.empty()) {
        auto in = text::open_input(paths.user_attributes);
        raw.user_attributes = parse_attributes(in, raw.labels.users, fmt, "user_attributes");
        raw.has_user_attributes = true;
    }
    if (!paths.provider_attributes.empty()) {
        auto in = text::open_input(paths.provider_attributes);
        raw.provider_attributes = parse_attributes(in, raw.providers, fmt, "provider_attributes");
    }
    if (!paths.product_providers.empty()) {
        auto in = text::open_input(paths.product_providers);
        raw.provider_of = parse_product_providers(in, raw.labels, raw.providers, fmt);
        raw.has_product_providers = true;
    }
    return raw;
}

namespace {

std::vector<ProductId> distinct_products(std::span<const Interaction> xs) {
    std::vector<ProductId> out;
    for (const auto& x : xs) out.push_back(x.product);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

template <class T>
void fit(std::vector<T>& v, std::size_t n) {
    v.resize(n);
}

KnowledgeGraph pad(const KnowledgeGraph& kg, std::size_t n, EntityTypeId unknown) {
    auto types = kg.entity_types();
    auto members = kg.members();
    types.resize(n, unknown);
    members.resize(n, false);
    return KnowledgeGraph(std::move(types), std::move(members), {kg.triples().begin(), kg.triples().end()});
}

void check_invariants(const DatasetBundle& b, const PreprocessConfig& cfg, bool kcored) {
    for (const auto& x : b.interactions) {
        if (!std::binary_search(b.catalog.begin(), b.catalog.end(), x.product) || !b.kg.contains(x.product))
            throw InvariantError("interacted product " + b.labels.entities.label(x.product) +
                                 " is missing from the catalog or the KG");
        if (cfg.require_attributes && !b.attributes(x.user).complete())
            throw InvariantError("user " + b.labels.users.label(x.user) + " lacks sensitive attributes");
    }
    for (const auto& t : b.kg.triples())
        if (!std::binary_search(b.catalog.begin(), b.catalog.end(), t.head) ||
            std::binary_search(b.catalog.begin(), b.catalog.end(), t.tail))
            throw InvariantError("KG triple violates the product-head rule");
    if (kcored) {
        std::map<UserId, std::size_t> uc;
        std::map<ProductId, std::size_t> pc;
        for (const auto& x : b.interactions) {
            ++uc[x.user];
            ++pc[x.product];
        }
        for (auto [u, n] : uc)
            if (n < cfg.min_user_interactions) throw InvariantError("k-core output violates the user threshold");
        for (auto [p, n] : pc)
            if (n < cfg.min_product_interactions) throw InvariantError("k-core output violates the product threshold");
    }
}

}  // namespace

PreprocessResult preprocess(RawDataset raw, const PreprocessConfig& cfg) {
    cfg.validate();
    PreprocessResult result;
    auto& log = result.log;
    log.duplicate_triples = raw.duplicate_triples;
    log.duplicate_interactions = raw.duplicate_interactions;

    auto interactions = std::move(raw.interactions);
    if (cfg.require_attributes) {
        if (!raw.has_user_attributes)
            throw UsageError("user attributes are required (--require-attributes) but no user_attributes file was given");
        fit(raw.user_attributes, raw.labels.users.size());
        std::vector<bool> dropped(raw.labels.users.size(), false);
        std::erase_if(interactions, [&](const Interaction& x) {
            if (raw.user_attributes[x.user.index()].complete()) return false;
            dropped[x.user.index()] = true;
            return true;
        });
        log.users_missing_attributes = static_cast<std::size_t>(std::count(dropped.begin(), dropped.end(), true));
    }
    if (cfg.sample_users > 0) interactions = sample_users(interactions, cfg.sample_users, cfg.seed);

    std::vector<ProductId> catalog0;
    for (auto p : distinct_products(interactions))
        if (raw.kg.contains(p)) catalog0.push_back(p);

    log.triples_before = raw.kg.triple_count();
    log.triples_after_head_rule = head_rule(raw.kg, catalog0).size();
    auto kg = filter_kg(raw.kg, catalog0, cfg);
    {
        auto before = restrict_to_catalog(raw.kg, catalog0).relation_types();
        for (auto r : before)
            if (!std::binary_search(kg.relation_types().begin(), kg.relation_types().end(), r))
                log.pruned_relations.push_back(raw.labels.relations.label(r));
    }

    auto aligned = align_catalog(interactions, kg);
    log.interactions_unaligned = interactions.size() - aligned.interactions.size();

    const auto unknown = raw.labels.entity_types.intern(kUnknownEntityType);
    const auto n_entities = raw.labels.entities.size();

    auto assemble = [&](std::vector<Interaction> xs, const KnowledgeGraph& graph) {
        DatasetBundle b;
        b.catalog = distinct_products(xs);
        b.interactions = std::move(xs);
        b.kg = pad(graph, n_entities, unknown);
        b.user_attributes = raw.user_attributes;
        fit(b.user_attributes, raw.labels.users.size());
        b.category_relation = cfg.category_relation;
        b.provider_relation = cfg.provider_relation;
        return b;
    };

    {
        auto before = assemble(aligned.interactions, restrict_to_catalog(kg, distinct_products(aligned.interactions)));
        result.stats_before_kcore = compute_stats(before);
    }

    auto kcored = kcore_filter(aligned.interactions, cfg);
    log.interactions_kcore_removed = aligned.interactions.size() - kcored.size();
    auto final_catalog = distinct_products(kcored);
    auto final_kg = restrict_to_catalog(kg, final_catalog);

    auto& b = result.bundle;
    b = assemble(std::move(kcored), final_kg);

    // Providers and categories are read from the unfiltered KG so that the
    // relation-share pruning cannot remove them.
    std::vector<std::optional<ProviderId>> provider_of(n_entities);
    auto provider_rel = cfg.provider_relation.empty() ? std::nullopt : raw.labels.relations.find(cfg.provider_relation);
    auto category_rel = cfg.category_relation.empty() ? std::nullopt : raw.labels.relations.find(cfg.category_relation);
    b.category_of.assign(n_entities, {});
    for (auto p : b.catalog) {
        if (raw.has_product_providers) {
            if (p.index() < raw.provider_of.size()) provider_of[p.index()] = raw.provider_of[p.index()];
        } else if (provider_rel) {
            auto nb = raw.kg.neighbors(p, *provider_rel, Direction::forward);
            if (!nb.empty()) provider_of[p.index()] = raw.providers.intern(raw.labels.entities.label(nb.front()));
        }
        if (category_rel) {
            auto nb = raw.kg.neighbors(p, *category_rel, Direction::forward);
            b.category_of[p.index()].assign(nb.begin(), nb.end());
        }
    }
    b.provider_of = std::move(provider_of);
    b.provider_attributes = std::move(raw.provider_attributes);
    fit(b.provider_attributes, raw.providers.size());
    b.providers = std::move(raw.providers);
    b.labels = std::move(raw.labels);

    check_invariants(b, cfg, true);
    result.stats = compute_stats(b);
    return result;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

template <class Id>
void write_labels(const Vocabulary<Id>& v, const fs::path& p) {
    auto out = text::open_output(p);
    for (const auto& l : v.labels()) out << l << '\n';
}

template <class Id>
void read_labels(Vocabulary<Id>& v, const fs::path& p) {
    auto in = text::open_input(p);
    text::RowReader rows(in, '\t', p.filename().string());
    while (rows.next()) {
        rows.expect_arity(1);
        auto before = v.size();
        v.intern(rows.fields()[0]);
        if (v.size() == before) rows.fail("duplicate label");
    }
}

std::string demo_field(const std::optional<Gender>& g) { return g ? std::string(to_string(*g)) : "NA"; }
std::string demo_field(const std::optional<AgeGroup>& a) { return a ? std::string(to_string(*a)) : "NA"; }

}  // namespace

void save_bundle(const DatasetBundle& b, const fs::path& dir) {
    fs::create_directories(dir);
    write_labels(b.labels.entities, dir / "labels_entities.tsv");
    write_labels(b.labels.relations, dir / "labels_relations.tsv");
    write_labels(b.labels.users, dir / "labels_users.tsv");
    write_labels(b.labels.entity_types, dir / "labels_entity_types.tsv");
    write_labels(b.providers, dir / "labels_providers.tsv");
    {
        auto out = text::open_output(dir / "entity_types.tsv");
        for (std::size_t e = 0; e < b.kg.id_space(); ++e) {
            EntityId id(static_cast<std::int32_t>(e));
            auto t = b.kg.entity_types()[e];
            if (b.kg.members()[e]) fmt::print(out, "{}\t{}\n", b.labels.entities.label(id), b.labels.entity_types.label(t));
        }
        auto unk = text::open_output(dir / "entity_type_tags.tsv");
        for (std::size_t e = 0; e < b.kg.id_space(); ++e)
            fmt::print(unk, "{}\n", b.labels.entity_types.label(b.kg.entity_types()[e]));
    }
    {
        auto out = text::open_output(dir / "kg_triples.tsv");
        for (const auto& t : b.kg.triples())
            fmt::print(out, "{}\t{}\t{}\n", b.labels.entities.label(t.head), b.labels.relations.label(t.relation),
                       b.labels.entities.label(t.tail));
    }
    {
        auto out = text::open_output(dir / "interactions.tsv");
        for (const auto& x : b.interactions)
            fmt::print(out, "{}\t{}\t{}\t{}\n", b.labels.users.label(x.user), b.labels.entities.label(x.product), x.rating,
                       x.timestamp);
    }
    {
        auto out = text::open_output(dir / "user_attributes.tsv");
        for (std::size_t u = 0; u < b.user_attributes.size(); ++u) {
            const auto& d = b.user_attributes[u];
            if (!d.gender && !d.age) continue;
            fmt::print(out, "{}\t{}\t{}\n", b.labels.users.label(UserId(static_cast<std::int32_t>(u))),
                       demo_field(d.gender), demo_field(d.age));
        }
    }
    {
        auto out = text::open_output(dir / "provider_attributes.tsv");
        for (std::size_t p = 0; p < b.provider_attributes.size(); ++p) {
            const auto& d = b.provider_attributes[p];
            if (!d.gender && !d.age) continue;
            fmt::print(out, "{}\t{}\t{}\n", b.providers.label(ProviderId(static_cast<std::int32_t>(p))),
                       demo_field(d.gender), demo_field(d.age));
        }
    }
    {
        auto out = text::open_output(dir / "product_providers.tsv");
        for (std::size_t e = 0; e < b.provider_of.size(); ++e)
            if (b.provider_of[e])
                fmt::print(out, "{}\t{}\n", b.labels.entities.label(EntityId(static_cast<std::int32_t>(e))),
                           b.providers.label(*b.provider_of[e]));
    }
    {
        auto out = text::open_output(dir / "product_categories.tsv");
        for (std::size_t e = 0; e < b.category_of.size(); ++e)
            for (auto c : b.category_of[e])
                fmt::print(out, "{}\t{}\n", b.labels.entities.label(EntityId(static_cast<std::int32_t>(e))),
                           b.labels.entities.label(c));
    }
    {
        auto out = text::open_output(dir / "bundle.cfg");
        fmt::print(out, "category_relation = {}\nprovider_relation = {}\n", b.category_relation, b.provider_relation);
    }
}

DatasetBundle load_bundle(const fs::path& dir) {
    if (!fs::exists(dir / "bundle.cfg")) throw UsageError("no preprocessed bundle in " + dir.string());
    DatasetBundle b;
    read_labels(b.labels.entities, dir / "labels_entities.tsv");
    read_labels(b.labels.relations, dir / "labels_relations.tsv");
    read_labels(b.labels.users, dir / "labels_users.tsv");
    read_labels(b.labels.entity_types, dir / "labels_entity_types.tsv");
    read_labels(b.providers, dir / "labels_providers.tsv");
    const auto n_entities = b.labels.entities.size();
    const auto n_users = b.labels.users.size();
    const auto n_providers = b.providers.size();

    auto frozen = [](const auto& vocab, std::size_t n, const char* what) {
        if (vocab.size() != n) throw ValidationError(std::string("bundle references a ") + what + " missing from its label file");
    };

    {
        std::vector<EntityTypeId> tags;
        {
            auto in = text::open_input(dir / "entity_type_tags.tsv");
            text::RowReader rows(in, '\t', "entity_type_tags.tsv");
            while (rows.next()) {
                auto t = b.labels.entity_types.find(rows.fields()[0]);
                if (!t) rows.fail("unknown entity type");
                tags.push_back(*t);
            }
        }
        if (tags.size() != n_entities) throw ValidationError("entity_type_tags.tsv does not cover the entity labels");
        auto types_in = text::open_input(dir / "entity_types.tsv");
        auto triples_in = text::open_input(dir / "kg_triples.tsv");
        Labels scratch = b.labels;
        auto parsed = parse_kg(triples_in, types_in, scratch, {});
        frozen(scratch.entities, n_entities, "entity");
        frozen(scratch.relations, b.labels.relations.size(), "relation");
        auto members = parsed.kg.members();
        members.resize(n_entities, false);
        b.kg = KnowledgeGraph(std::move(tags), std::move(members),
                              {parsed.kg.triples().begin(), parsed.kg.triples().end()});
    }
    {
        auto in = text::open_input(dir / "interactions.tsv");
        Labels scratch = b.labels;
        b.interactions = parse_interactions(in, scratch, {}, "interactions.tsv");
        frozen(scratch.users, n_users, "user");
        frozen(scratch.entities, n_entities, "product");
        b.catalog = distinct_products(b.interactions);
    }
    {
        auto in = text::open_input(dir / "user_attributes.tsv");
        auto users = b.labels.users;
        b.user_attributes = parse_attributes(in, users, {}, "user_attributes.tsv");
        frozen(users, n_users, "user");
    }
    {
        auto in = text::open_input(dir / "provider_attributes.tsv");
        auto providers = b.providers;
        b.provider_attributes = parse_attributes(in, providers, {}, "provider_attributes.tsv");
        frozen(providers, n_providers, "provider");
    }
    {
        auto in = text::open_input(dir / "product_providers.tsv");
        auto providers = b.providers;
        b.provider_of = parse_product_providers(in, b.labels, providers, {});
        frozen(providers, n_providers, "provider");
    }
    {
        b.category_of.assign(n_entities, {});
        auto in = text::open_input(dir / "product_categories.tsv");
        text::RowReader rows(in, '\t', "product_categories.tsv");
        while (rows.next()) {
            rows.expect_arity(2);
            auto p = b.labels.entities.find(rows.fields()[0]);
            auto c = b.labels.entities.find(rows.fields()[1]);
            if (!p || !c) rows.fail("unknown product or category label");
            b.category_of[p->index()].push_back(*c);
        }
    }
    {
        auto in = text::open_input(dir / "bundle.cfg");
        std::string line;
        while (std::getline(in, line)) {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto key = text::trim(std::string_view(line).substr(0, eq));
            auto value = std::string(text::trim(std::string_view(line).substr(eq + 1)));
            if (key == "category_relation") b.category_relation = value;
            if (key == "provider_relation") b.provider_relation = value;
        }
    }
    return b;
}

}  // namespace kgaudit
