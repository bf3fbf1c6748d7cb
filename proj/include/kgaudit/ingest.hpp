#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgaudit/kg_core.hpp"

namespace kgaudit {

enum class Gender : std::uint8_t { male, female };

/// The seven age buckets used for consumers and providers.
enum class AgeGroup : std::uint8_t { under_18, age_18_24, age_25_34, age_35_44, age_45_49, age_50_55, age_56_plus };

inline constexpr std::array<std::string_view, 2> kGenderLabels = {"Male", "Female"};
inline constexpr std::array<std::string_view, 7> kAgeLabels = {"Under 18", "18-24", "25-34", "35-44",
                                                               "45-49",    "50-55", "56+"};

std::string_view to_string(Gender g) noexcept;
std::string_view to_string(AgeGroup a) noexcept;

/// Accepts "Male"/"Female"/"M"/"F" (any case). nullopt for missing markers.
std::optional<Gender> parse_gender(std::string_view s);
/// Accepts the bucket labels above or the MovieLens codes 1,18,25,35,45,50,56.
std::optional<AgeGroup> parse_age(std::string_view s);

struct Demographics {
    std::optional<Gender> gender;
    std::optional<AgeGroup> age;

    bool complete() const noexcept { return gender.has_value() && age.has_value(); }
    friend bool operator==(const Demographics&, const Demographics&) = default;
};

struct ProviderTag;
using ProviderId = StrongId<ProviderTag>;

struct PreprocessConfig {
    std::size_t min_user_interactions = 20;
    std::size_t min_product_interactions = 10;
    double min_relation_share = 0.03;
    /// Relation labels; empty means "not available".
    std::string category_relation;
    std::string provider_relation;
    bool require_attributes = true;
    /// Keep this many users chosen by seeded uniform sampling; 0 keeps all.
    std::size_t sample_users = 0;
    std::uint64_t seed = 42;

    void validate() const;
};

struct TextFormat {
    char delimiter = '\t';
};

/// Canonical preprocessed dataset.
struct DatasetBundle {
    Labels labels;
    KnowledgeGraph kg;
    std::vector<Interaction> interactions;
    /// Sorted ascending.
    std::vector<ProductId> catalog;
    /// Indexed by UserId.
    std::vector<Demographics> user_attributes;
    Vocabulary<ProviderId> providers;
    /// Indexed by EntityId.
    std::vector<std::optional<ProviderId>> provider_of;
    /// Indexed by ProviderId.
    std::vector<Demographics> provider_attributes;
    /// Indexed by EntityId; sorted category entity ids.
    std::vector<std::vector<EntityId>> category_of;
    std::string category_relation;
    std::string provider_relation;

    std::optional<ProviderId> provider(ProductId p) const {
        return p.index() < provider_of.size() ? provider_of[p.index()] : std::nullopt;
    }
    const Demographics& attributes(UserId u) const;

    friend bool operator==(const DatasetBundle&, const DatasetBundle&) = default;
};

struct DatasetStats {
    std::size_t users = 0;
    std::size_t products = 0;
    std::size_t interactions = 0;
    double density = 0.0;
    std::size_t entities = 0;
    std::size_t entity_types = 0;
    std::size_t relations = 0;
    std::size_t relation_types = 0;
    double kg_sparsity = 0.0;
    double avg_degree_overall = 0.0;
    double avg_degree_products = 0.0;
    std::size_t gender_groups = 0;
    std::size_t age_groups = 0;
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// `user, product, rating, timestamp` rows. Exact (user, product, timestamp)
/// repeats are dropped and counted in `duplicates` when given.
std::vector<Interaction> parse_interactions(std::istream& in, Labels& labels, const TextFormat& fmt = {},
                                            std::string_view source = "interactions",
                                            std::size_t* duplicates = nullptr);

struct ParsedKg {
    KnowledgeGraph kg;
    std::size_t duplicate_triples = 0;
};

/// `head, relation, tail` rows plus `entity, type` rows. Entities listed in
/// the type file are members even without triples; entities seen only in
/// triples get the type "unknown".
ParsedKg parse_kg(std::istream& triples, std::istream& entity_types, Labels& labels, const TextFormat& fmt = {});

/// `subject, gender, age_bucket` rows; used for users and providers alike.
template <class Id>
std::vector<Demographics> parse_attributes(std::istream& in, Vocabulary<Id>& vocab, const TextFormat& fmt = {},
                                           std::string_view source = "attributes");

/// `product, provider` rows. Unknown product labels are ignored.
std::vector<std::optional<ProviderId>> parse_product_providers(std::istream& in, const Labels& labels,
                                                               Vocabulary<ProviderId>& providers,
                                                               const TextFormat& fmt = {});

// ---------------------------------------------------------------------------
// Preprocessing steps
// ---------------------------------------------------------------------------

/// Head/tail rule followed by one relation-share pruning pass (strict <).
KnowledgeGraph filter_kg(const KnowledgeGraph& kg, std::span<const ProductId> catalog, const PreprocessConfig& cfg);

/// Head/tail rule only.
KnowledgeGraph restrict_to_catalog(const KnowledgeGraph& kg, std::span<const ProductId> catalog);

/// Iterated user/product threshold filter to a fixed point; order preserved.
std::vector<Interaction> kcore_filter(std::span<const Interaction> interactions, const PreprocessConfig& cfg);

struct AlignedInteractions {
    std::vector<Interaction> interactions;
    std::vector<ProductId> catalog;
};

/// Drops interactions whose product has no KG triple.
AlignedInteractions align_catalog(std::span<const Interaction> interactions, const KnowledgeGraph& kg);

/// Deterministic uniform sample of `count` users; returns their interactions in input order.
std::vector<Interaction> sample_users(std::span<const Interaction> interactions, std::size_t count, std::uint64_t seed);

DatasetStats compute_stats(const DatasetBundle& bundle);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct RawDataset {
    Labels labels;
    KnowledgeGraph kg;
    std::vector<Interaction> interactions;
    std::vector<Demographics> user_attributes;
    Vocabulary<ProviderId> providers;
    std::vector<std::optional<ProviderId>> provider_of;
    bool has_user_attributes = false;
    bool has_product_providers = false;
    std::vector<Demographics> provider_attributes;
    std::size_t duplicate_triples = 0;
    std::size_t duplicate_interactions = 0;
};

struct RawPaths {
    std::filesystem::path interactions;
    std::filesystem::path kg_triples;
    std::filesystem::path entity_types;
    std::filesystem::path user_attributes;
    std::filesystem::path product_providers;
    std::filesystem::path provider_attributes;
};

/// Reads every raw input. Optional paths may be empty. Throws ParseError or
/// UsageError (missing file).
RawDataset load_raw(const RawPaths& paths, const TextFormat& fmt = {});

struct PreprocessLog {
    std::size_t users_missing_attributes = 0;
    std::size_t triples_before = 0;
    std::size_t triples_after_head_rule = 0;
    std::vector<std::string> pruned_relations;
    std::size_t interactions_unaligned = 0;
    std::size_t interactions_kcore_removed = 0;
    std::size_t duplicate_triples = 0;
    std::size_t duplicate_interactions = 0;
};

struct PreprocessResult {
    DatasetBundle bundle;
    /// Statistics of the aligned data before k-core filtering.
    DatasetStats stats_before_kcore;
    DatasetStats stats;
    PreprocessLog log;
};

PreprocessResult preprocess(RawDataset raw, const PreprocessConfig& cfg);

/// Canonical on-disk bundle (tab-separated files plus bundle.cfg).
void save_bundle(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle load_bundle(const std::filesystem::path& dir);

}  // namespace kgaudit
