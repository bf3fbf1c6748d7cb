#pragma once

// Random small instances and naive recomputations of every metric. The
// oracles below work on the raw triple list and plain containers and share
// no code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>

#include "kgaudit/fairness_stats.hpp"
#include "kgaudit/metrics_expl.hpp"
#include "kgaudit/metrics_rec.hpp"

namespace oracle {

using namespace kgaudit;

inline constexpr double kTolerance = 1e-9;

struct Instance {
    std::uint64_t seed = 0;
    Labels labels;
    /// As generated, with repeats.
    std::vector<Triple> raw_triples;
    KnowledgeGraph kg;
    std::vector<ProductId> catalog;
    std::vector<Interaction> train;
    /// Per user, sorted.
    std::vector<std::vector<ProductId>> relevant;
    std::vector<RecommendedList> lists;
    std::vector<RecommendedList> baselines;
    RelationId category_relation;
    std::vector<std::vector<EntityId>> category_of;
    PopularityModel popularity;
    GroupAssignment gender, age, provider_groups;
    std::vector<std::optional<ProviderId>> provider_of;
    std::size_t k = 10;
    double beta = 0.3;
};

/// Up to 100 users over 50 products; k <= 10.
inline Instance make_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
    auto chance = [&](double p) { return std::bernoulli_distribution(p)(rng); };

    Instance in;
    in.seed = seed;
    const auto n_users = uniform(2, 100), n_products = uniform(5, 50), n_rel = uniform(1, 5), n_other = uniform(1, 20);
    std::vector<EntityId> products, others;
    for (std::size_t i = 0; i < n_products; ++i) products.push_back(in.labels.entities.intern(fmt::format("P{}", i)));
    for (std::size_t i = 0; i < n_other; ++i)
        others.push_back(in.labels.entities.intern(fmt::format("{}{}", "ABC"[i % 3], i)));
    const auto interacted = in.labels.relations.intern("i");
    std::vector<RelationId> rels;
    for (std::size_t r = 0; r < n_rel; ++r) rels.push_back(in.labels.relations.intern(fmt::format("r{}", r)));
    in.category_relation = rels[0];
    auto any_product = [&] { return products[uniform(0, n_products - 1)]; };
    auto any_other = [&] { return others[uniform(0, n_other - 1)]; };
    auto any_rel = [&] { return rels[uniform(0, n_rel - 1)]; };

    auto& triples = in.raw_triples;
    for (auto p : products) triples.push_back({p, rels[0], any_other()});
    for (std::size_t t = uniform(0, 3 * n_products); t > 0; --t) {
        auto head = any_product();
        auto tail = chance(0.2) ? any_product() : any_other();
        if (head != tail) triples.push_back({head, any_rel(), tail});
    }

    in.relevant.resize(n_users);
    std::vector<std::vector<ProductId>> seen(n_users);
    for (std::size_t u = 0; u < n_users; ++u) {
        auto user = in.labels.users.intern(fmt::format("U{}", u));
        for (std::size_t j = uniform(1, 8); j > 0; --j) {
            auto p = any_product();
            in.train.push_back({user, p, 1.0, static_cast<std::int64_t>(uniform(0, 20))});
            seen[u].push_back(p);
        }
        std::sort(seen[u].begin(), seen[u].end());
        seen[u].erase(std::unique(seen[u].begin(), seen[u].end()), seen[u].end());
        for (std::size_t j = uniform(0, 5); j > 0; --j) in.relevant[u].push_back(any_product());
        std::sort(in.relevant[u].begin(), in.relevant[u].end());
        in.relevant[u].erase(std::unique(in.relevant[u].begin(), in.relevant[u].end()), in.relevant[u].end());
    }

    in.k = uniform(1, 10);
    for (std::size_t u = 0; u < n_users; ++u) {
        RecommendedList l{UserId(static_cast<std::int32_t>(u)), {}, false};
        auto pool = products;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(std::min(pool.size(), uniform(0, 12)));
        for (std::size_t i = 0; i < pool.size(); ++i) {
            RecEntry e{i + 1, pool[i], static_cast<double>(pool.size() - i), std::nullopt};
            if (chance(0.6)) {
                ReasoningPath path{l.user, {}};
                auto p1 = seen[u][uniform(0, seen[u].size() - 1)];
                path.hops.push_back({interacted, Direction::forward, p1});
                std::vector<Triple> added;
                auto step = [&](EntityId from, EntityId to) {
                    auto r = any_rel();
                    auto dir = chance(0.5) ? Direction::forward : Direction::inverse;
                    added.push_back(dir == Direction::forward ? Triple{from, r, to} : Triple{to, r, from});
                    path.hops.push_back({r, dir, to});
                };
                auto hops = uniform(2, 4);
                if (hops == 2 && p1 != pool[i]) {
                    step(p1, pool[i]);
                } else if (hops == 3) {
                    auto mid = any_other();
                    step(p1, mid);
                    step(mid, pool[i]);
                } else if (hops == 4) {
                    auto mid = any_other();
                    auto via = any_product();
                    step(p1, mid);
                    step(mid, via);
                    if (via != pool[i]) step(via, pool[i]);
                }
                if (path.hops.size() == hops) {
                    e.path = std::move(path);
                    triples.insert(triples.end(), added.begin(), added.end());
                }
            }
            l.entries.push_back(std::move(e));
        }
        in.lists.push_back(std::move(l));
    }

    std::vector<EntityTypeId> types;
    for (const auto& label : in.labels.entities.labels()) types.push_back(in.labels.entity_types.intern(label.substr(0, 1)));
    in.kg = KnowledgeGraph::from_triples(types, triples);
    in.catalog = products;
    std::sort(in.catalog.begin(), in.catalog.end());

    in.category_of.resize(in.labels.entities.size());
    for (const auto& t : in.kg.triples())
        if (t.relation == in.category_relation) in.category_of[t.head.index()].push_back(t.tail);
    for (auto& c : in.category_of) std::sort(c.begin(), c.end());

    in.popularity = train_mostpop(in.train, in.catalog);
    for (std::size_t u = 0; u < n_users; ++u)
        in.baselines.push_back(recommend_mostpop(in.popularity, UserId(static_cast<std::int32_t>(u)), 12, seen[u]));

    in.gender = {Dimension::gender, Side::consumer, {"M", "F"}, {}};
    in.age = {Dimension::age, Side::consumer, {"a1", "a2", "a3", "a4", "a5", "a6", "a7"}, {}};
    for (std::size_t u = 0; u < n_users; ++u) {
        in.gender.group_of.push_back(uniform(0, 1));
        in.age.group_of.push_back(uniform(0, 6));
    }
    const auto n_providers = uniform(1, 8);
    in.provider_groups = {Dimension::gender, Side::provider, {"M", "F"}, {}};
    for (std::size_t p = 0; p < n_providers; ++p)
        in.provider_groups.group_of.push_back(chance(0.85) ? std::optional<std::size_t>(uniform(0, 1)) : std::nullopt);
    in.provider_of.resize(in.labels.entities.size());
    for (auto p : products)
        if (chance(0.9)) in.provider_of[p.index()] = ProviderId(static_cast<std::int32_t>(uniform(0, n_providers - 1)));
    in.beta = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    return in;
}

// ---------------------------------------------------------------------------
// Naive recomputations
// ---------------------------------------------------------------------------

using Key = std::vector<std::pair<int, int>>;

inline std::vector<const ReasoningPath*> explained(const RecommendedList& l, std::size_t k) {
    std::vector<const ReasoningPath*> out;
    for (std::size_t i = 0; i < l.entries.size() && i < k; ++i)
        if (l.entries[i].path) out.push_back(&*l.entries[i].path);
    return out;
}

inline Key type_key(const ReasoningPath& p) {
    Key key;
    for (const auto& h : p.hops) key.emplace_back(h.relation.value, h.direction == Direction::forward ? 0 : 1);
    return key;
}

inline Key pattern_key(const ReasoningPath& p, const Labels& labels) {
    auto key = type_key(p);
    for (std::size_t i = 0; i + 1 < p.hops.size(); ++i) key.emplace_back(labels.entities.label(p.hops[i].entity)[0], -1);
    return key;
}

inline EntityId shared(const ReasoningPath& p) { return p.hops[p.hops.size() - 2].entity; }

inline double entropy(const std::map<Key, int>& counts, std::size_t categories) {
    if (categories <= 1 || counts.size() <= 1) return 0.0;
    double total = 0, h = 0;
    for (const auto& [_, c] : counts) total += c;
    for (const auto& [_, c] : counts) h -= c / total * std::log2(c / total);
    return h / std::log2(static_cast<double>(categories));
}

/// Recency weight of the user's latest training interaction with each product.
inline std::map<ProductId, double> recency(const std::vector<Interaction>& train, UserId user, double beta) {
    std::vector<Interaction> mine;
    for (const auto& x : train)
        if (x.user == user) mine.push_back(x);
    std::stable_sort(mine.begin(), mine.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    std::map<ProductId, double> out;
    if (mine.empty()) return out;
    double lo = static_cast<double>(mine.front().timestamp), hi = static_cast<double>(mine.back().timestamp);
    double w = 0;
    for (std::size_t i = 0; i < mine.size(); ++i) {
        double v = hi > lo ? (static_cast<double>(mine[i].timestamp) - lo) / (hi - lo) : 0.5;
        w = i == 0 ? v : (1 - beta) * w + beta * v;
        out[mine[i].product] = w;
    }
    return out;
}

inline std::map<EntityId, double> popularity(const Instance& in) {
    std::set<std::tuple<int, int, int>> unique;
    for (const auto& t : in.raw_triples) unique.insert({t.head.value, t.relation.value, t.tail.value});
    std::map<EntityId, int> degree;
    for (auto [h, r, t] : unique) {
        ++degree[EntityId(h)];
        ++degree[EntityId(t)];
    }
    std::map<char, int> max_of;
    for (auto [e, d] : degree) max_of[in.labels.entities.label(e)[0]] = std::max(max_of[in.labels.entities.label(e)[0]], d);
    std::map<EntityId, double> out;
    for (auto [e, d] : degree) out[e] = std::log(1.0 + d) / std::log(1.0 + max_of[in.labels.entities.label(e)[0]]);
    return out;
}

inline double mean_abs_pairwise(const std::vector<double>& means) {
    double sum = 0;
    int pairs = 0;
    for (std::size_t i = 0; i < means.size(); ++i)
        for (std::size_t j = i + 1; j < means.size(); ++j) {
            sum += std::abs(means[i] - means[j]);
            ++pairs;
        }
    return pairs ? sum / pairs : 0.0;
}

inline double group_delta_naive(const std::vector<std::optional<double>>& values, const GroupAssignment& a) {
    std::vector<double> means;
    for (std::size_t g = 0; g < a.labels.size(); ++g) {
        double sum = 0;
        int n = 0;
        for (std::size_t u = 0; u < values.size(); ++u)
            if (a.group_of[u] == g && values[u]) {
                sum += *values[u];
                ++n;
            }
        if (n) means.push_back(sum / n);
    }
    return mean_abs_pairwise(means);
}

/// Two-sided Student t tail by Simpson's rule after x = sqrt(dof) tan(theta).
inline double t_two_sided(double t, double dof) {
    auto integral = [&](double a, double b) {
        const int n = 100000;
        const double h = (b - a) / n;
        auto f = [&](double th) { return std::pow(std::cos(th), dof - 1.0); };
        double s = f(a) + f(b);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
        return s * h / 3.0;
    };
    const double half_pi = std::acos(0.0);
    return integral(std::atan(std::abs(t) / std::sqrt(dof)), half_pi) / integral(0.0, half_pi);
}

/// Chi-squared upper tail for integer degrees of freedom, in closed form.
inline double chi2_upper(double x, int dof) {
    const double y = x / 2.0;
    double sum = 0;
    if (dof % 2 == 0) {
        double term = 1;
        for (int i = 0; i < dof / 2; ++i) {
            sum += term;
            term *= y / (i + 1);
        }
        return std::exp(-y) * sum;
    }
    for (int i = 1; i <= dof / 2; ++i) sum += std::exp((i - 0.5) * std::log(y) - y - std::lgamma(i + 0.5));
    return std::erfc(std::sqrt(y)) + sum;
}

struct Failures {
    std::uint64_t seed = 0;
    std::vector<std::string> items;

    void expect(const std::string& what, std::optional<double> got, std::optional<double> want) {
        if (got.has_value() != want.has_value())
            items.push_back(fmt::format("seed {}: {} defined mismatch", seed, what));
        else if (got && !(std::abs(*got - *want) <= kTolerance * std::max(1.0, std::abs(*want))))
            items.push_back(fmt::format("seed {}: {} = {} but oracle gives {}", seed, what, *got, *want));
    }
};

/// Compares every metric on one instance against the naive versions.
inline std::vector<std::string> check(const Instance& in) {
    Failures f{in.seed, {}};
    const auto k = in.k;
    const auto n_users = in.lists.size();

    std::map<ProductId, int> counts;
    for (const auto& x : in.train) ++counts[x.product];
    int max_count = 0;
    for (auto [_, c] : counts) max_count = std::max(max_count, c);

    // Baseline ranking: unseen products by (count desc, id asc).
    for (std::size_t u = 0; u < n_users; ++u) {
        std::set<ProductId> seen;
        for (const auto& x : in.train)
            if (x.user.index() == u) seen.insert(x.product);
        std::vector<ProductId> order;
        for (auto p : in.catalog)
            if (!seen.contains(p)) order.push_back(p);
        std::stable_sort(order.begin(), order.end(), [&](ProductId a, ProductId b) { return counts[a] > counts[b]; });
        order.resize(std::min<std::size_t>(order.size(), 12));
        std::vector<ProductId> got;
        for (const auto& e : in.baselines[u].entries) got.push_back(e.product);
        if (got != order) f.items.push_back(fmt::format("seed {}: mostpop list of user {} differs", in.seed, u));
    }

    auto pop = popularity(in);
    std::set<Key> run_types, run_patterns;
    for (const auto& l : in.lists)
        for (const auto* p : explained(l, k)) {
            run_types.insert(type_key(*p));
            run_patterns.insert(pattern_key(*p, in.labels));
        }
    if (run_path_types(in.lists, k) != run_types.size())
        f.items.push_back(fmt::format("seed {}: run path types differ", in.seed));
    if (run_path_patterns(in.lists, in.kg, k) != run_patterns.size())
        f.items.push_back(fmt::format("seed {}: run path patterns differ", in.seed));

    const auto weights = precompute_weights(in.train, in.kg, in.beta);
    std::vector<std::optional<double>> ndcg_values;
    double fid_sum = 0;
    int fid_lists = 0;
    std::set<ProductId> covered;
    std::vector<double> exposure_sum(in.provider_groups.labels.size(), 0.0);
    int exposure_lists = 0;

    for (std::size_t u = 0; u < n_users; ++u) {
        const auto& l = in.lists[u];
        const auto& rel = in.relevant[u];
        const auto n = std::min(k, l.entries.size());
        auto is_relevant = [&](ProductId p) { return std::find(rel.begin(), rel.end(), p) != rel.end(); };
        auto tag = [&](const char* m) { return fmt::format("{} user {} k {}", m, u, k); };

        std::optional<double> ndcg, rr;
        if (!rel.empty()) {
            double dcg = 0, idcg = 0;
            rr = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (is_relevant(l.entries[i].product)) {
                    dcg += 1 / std::log2(i + 2.0);
                    if (*rr == 0.0) rr = 1.0 / static_cast<double>(i + 1);
                }
            for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) idcg += 1 / std::log2(i + 2.0);
            ndcg = dcg / idcg;
        }
        f.expect(tag("NDCG"), ndcg_at_k(l, rel, k), ndcg);
        f.expect(tag("MRR"), mrr(l, rel, k), rr);
        ndcg_values.push_back(ndcg);

        std::optional<double> nov;
        std::set<EntityId> cats;
        std::set<ProductId> base;
        for (std::size_t i = 0; i < std::min(k, in.baselines[u].entries.size()); ++i) base.insert(in.baselines[u].entries[i].product);
        double unexpected = 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto p = l.entries[i].product;
            nov = nov.value_or(0.0) + (max_count ? 1.0 - static_cast<double>(counts[p]) / max_count : 1.0);
            for (const auto& t : in.raw_triples)
                if (t.head == p && t.relation == in.category_relation) cats.insert(t.tail);
            if (!base.contains(p)) ++unexpected;
            covered.insert(p);
        }
        if (nov) *nov /= static_cast<double>(n);
        f.expect(tag("NOV"), novelty(l, in.popularity, k), nov);
        f.expect(tag("DIV"), diversity(l, in.category_of, k), static_cast<double>(cats.size()) / static_cast<double>(k));
        f.expect(tag("SER"), serendipity(l, in.baselines[u], k), unexpected / static_cast<double>(k));

        auto paths = explained(l, k);
        std::optional<double> fid;
        if (n) {
            fid = static_cast<double>(paths.size()) / static_cast<double>(n);
            fid_sum += *fid;
            ++fid_lists;
        }
        f.expect(tag("FID"), list_fidelity(l, k), fid);

        std::optional<double> lir_v, lid_v, sep_v, sed_v, ptd_v, ptc_v, ppc_v;
        if (!paths.empty()) {
            auto rec = recency(in.train, l.user, in.beta);
            const double m = static_cast<double>(paths.size());
            double rsum = 0, psum = 0;
            std::set<ProductId> linking;
            std::set<EntityId> shared_set;
            std::map<Key, int> types, patterns;
            for (const auto* p : paths) {
                rsum += rec.at(p->hops[0].entity);
                psum += pop.at(shared(*p));
                linking.insert(p->hops[0].entity);
                shared_set.insert(shared(*p));
                ++types[type_key(*p)];
                ++patterns[pattern_key(*p, in.labels)];
            }
            lir_v = rsum / m;
            sep_v = psum / m;
            lid_v = static_cast<double>(linking.size()) / m;
            sed_v = static_cast<double>(shared_set.size()) / m;
            ptd_v = static_cast<double>(types.size()) / m;
            ptc_v = entropy(types, run_types.size());
            ppc_v = entropy(patterns, run_patterns.size());
        }
        f.expect(tag("LIR"), lir(l, weights, k), lir_v);
        f.expect(tag("LID"), lid(l, k), lid_v);
        f.expect(tag("SEP"), sep(l, weights, k), sep_v);
        f.expect(tag("SED"), sed(l, k), sed_v);
        f.expect(tag("PTD"), ptd(l, k), ptd_v);
        f.expect(tag("PTC"), ptc(l, k, run_types.size()), ptc_v);
        f.expect(tag("PPC"), ppc(l, in.kg, k, run_patterns.size()), ppc_v);

        std::vector<double> share(in.provider_groups.labels.size() + 1, 0.0);
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double w = 1 / std::log2(i + 2.0);
            auto prov = in.provider_of[l.entries[i].product.index()];
            auto g = prov ? in.provider_groups.group_of[prov->index()] : std::nullopt;
            share[g ? *g : share.size() - 1] += w;
            total += w;
        }
        if (total > 0)
            for (auto& s : share) s /= total;
        auto got = exposure_share(l, in.provider_of, in.provider_groups, k);
        for (std::size_t g = 0; g < share.size(); ++g) f.expect(tag("EXP share"), got[g], share[g]);
        if (n) {
            ++exposure_lists;
            for (std::size_t g = 0; g < exposure_sum.size(); ++g) exposure_sum[g] += share[g];
        }
    }

    f.expect("COV", coverage(in.lists, in.catalog, k), static_cast<double>(covered.size()) / static_cast<double>(in.catalog.size()));
    f.expect("FID@k", fidelity_at_k(in.lists, k),
             fid_lists ? std::optional<double>(fid_sum / fid_lists) : std::nullopt);

    std::vector<std::size_t> subjects(n_users);
    for (std::size_t u = 0; u < n_users; ++u) subjects[u] = u;
    f.expect("NDCG gender delta", group_delta(ndcg_values, subjects, in.gender).delta, group_delta_naive(ndcg_values, in.gender));
    f.expect("NDCG age delta", group_delta(ndcg_values, subjects, in.age).delta, group_delta_naive(ndcg_values, in.age));

    std::vector<double> exposure_means;
    for (std::size_t g = 0; g < exposure_sum.size(); ++g) {
        bool owns = false;
        for (auto p : in.catalog) {
            auto prov = in.provider_of[p.index()];
            owns = owns || (prov && in.provider_groups.group_of[prov->index()] == g);
        }
        if (owns && exposure_lists) exposure_means.push_back(exposure_sum[g] / exposure_lists);
    }
    f.expect("EXP delta", provider_exposure(in.lists, in.provider_of, in.provider_groups, in.catalog, k).delta,
             mean_abs_pairwise(exposure_means));

    // Welch t between the gender groups on NDCG.
    std::vector<std::vector<double>> by_gender(2), by_age(7);
    for (std::size_t u = 0; u < n_users; ++u)
        if (ndcg_values[u]) {
            by_gender[*in.gender.group_of[u]].push_back(*ndcg_values[u]);
            by_age[*in.age.group_of[u]].push_back(*ndcg_values[u]);
        }
    const auto& a = by_gender[0];
    const auto& b = by_gender[1];
    if (a.size() >= 3 && b.size() >= 3) {
        auto mean_var = [](const std::vector<double>& x) {
            double m = 0, v = 0;
            for (double y : x) m += y;
            m /= static_cast<double>(x.size());
            for (double y : x) v += (y - m) * (y - m);
            return std::pair{m, v / static_cast<double>(x.size() - 1)};
        };
        auto [ma, va] = mean_var(a);
        auto [mb, vb] = mean_var(b);
        const double se_a = va / static_cast<double>(a.size()), se_b = vb / static_cast<double>(b.size());
        if (se_a + se_b > 0) {
            const double t = (ma - mb) / std::sqrt(se_a + se_b);
            const double dof = (se_a + se_b) * (se_a + se_b) /
                               (se_a * se_a / static_cast<double>(a.size() - 1) + se_b * se_b / static_cast<double>(b.size() - 1));
            auto r = welch_ttest(a, b);
            f.expect("Welch t", r.statistic, t);
            f.expect("Welch dof", r.dof, dof);
            f.expect("Welch p", r.p_value, t_two_sided(t, dof));
        }
    }

    // Kruskal-Wallis across the non-empty age groups.
    std::vector<std::vector<double>> groups;
    std::vector<double> pooled;
    for (const auto& g : by_age)
        if (!g.empty()) {
            groups.push_back(g);
            pooled.insert(pooled.end(), g.begin(), g.end());
        }
    if (groups.size() >= 2 && pooled.size() >= 3) {
        const double N = static_cast<double>(pooled.size());
        double h = 0;
        for (const auto& g : groups) {
            double rank_sum = 0;
            for (double v : g) {
                double less = 0, equal = 0;
                for (double w : pooled) {
                    less += w < v;
                    equal += w == v;
                }
                rank_sum += less + (equal + 1) / 2;
            }
            h += rank_sum * rank_sum / static_cast<double>(g.size());
        }
        h = 12 / (N * (N + 1)) * h - 3 * (N + 1);
        std::map<double, double> ties;
        for (double v : pooled) ++ties[v];
        double tie_term = 0;
        for (auto [_, t] : ties) tie_term += t * t * t - t;
        const double correction = 1 - tie_term / (N * N * N - N);
        const int dof = static_cast<int>(groups.size()) - 1;
        double stat = 0, p = 1;
        if (correction > 0) {
            stat = std::max(0.0, h / correction);
            p = chi2_upper(stat, dof);
        }
        auto r = kruskal_h(groups);
        f.expect("Kruskal H", r.statistic, stat);
        f.expect("Kruskal p", r.p_value, p);
    }
    return f.items;
}

}  // namespace oracle
