#include <doctest.h>

#include <cmath>

#include "kgaudit/error.hpp"
#include "kgaudit/metrics_rec.hpp"
#include "support/toy.hpp"

using namespace kgaudit;

TEST_CASE("ndcg_at_k") {
    toy::World w;
    auto l = w.list("u", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    auto all = toy::sorted({w.e("a"), w.e("b"), w.e("c"), w.e("d"), w.e("e"), w.e("f"), w.e("g"), w.e("h"), w.e("i"),
                            w.e("j")});
    CHECK(*ndcg_at_k(l, all, 10) == doctest::Approx(1.0));
    auto second = toy::sorted({w.e("b")});
    CHECK(*ndcg_at_k(l, second, 10) == doctest::Approx(1.0 / std::log2(3.0)));
    CHECK(*ndcg_at_k(l, second, 10) == doctest::Approx(0.63093).epsilon(1e-5));
    auto missing = toy::sorted({w.e("zz")});
    CHECK(*ndcg_at_k(l, missing, 10) == 0.0);
    CHECK_FALSE(ndcg_at_k(l, {}, 10));
}

TEST_CASE("mrr") {
    toy::World w;
    auto l = w.list("u", {"a", "b", "c", "d", "e"});
    CHECK(*mrr(l, toy::sorted({w.e("a")}), 5) == 1.0);
    CHECK(*mrr(l, toy::sorted({w.e("d"), w.e("e")}), 5) == 0.25);
    CHECK(*mrr(l, toy::sorted({w.e("zz")}), 5) == 0.0);
    CHECK(*mrr(l, toy::sorted({w.e("e")}), 3) == 0.0);
    CHECK_FALSE(mrr(l, {}, 5));
}

TEST_CASE("coverage") {
    toy::World w;
    std::vector<ProductId> catalog;
    for (int i = 0; i < 100; ++i) catalog.push_back(w.e("p" + std::to_string(i)));
    catalog = toy::sorted(catalog);
    std::vector<RecommendedList> lists;
    for (int i = 0; i < 75; i += 3) {
        RecommendedList l{w.u("u" + std::to_string(i)), {}, false};
        for (int j = 0; j < 3; ++j) l.entries.push_back({static_cast<std::size_t>(j + 1), w.e("p" + std::to_string(i + j)), 1.0, {}});
        lists.push_back(l);
    }
    CHECK(coverage(lists, catalog, 10) == doctest::Approx(0.75));
    CHECK(coverage({}, catalog, 10) == 0.0);
    CHECK_THROWS_AS(coverage(lists, {}, 10), UsageError);
    CHECK(coverage(lists, catalog, 1) == doctest::Approx(0.25));
}

TEST_CASE("diversity") {
    toy::World w;
    std::vector<std::vector<EntityId>> cat_of;
    auto l = w.list("u", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    cat_of.resize(w.labels.entities.size() + 20);
    auto action = w.e("action"), drama = w.e("drama");
    for (const auto& e : l.entries) cat_of[e.product.index()] = {action};
    CHECK(diversity(l, cat_of, 10) == doctest::Approx(0.1));
    for (std::size_t i = 0; i < l.entries.size(); ++i)
        cat_of[l.entries[i].product.index()] = {w.e("genre" + std::to_string(i))};
    CHECK(diversity(l, cat_of, 10) == doctest::Approx(1.0));

    auto two = w.list("v", {"x", "y"});
    cat_of.resize(w.labels.entities.size());
    cat_of[w.e("x").index()] = {action};
    cat_of[w.e("y").index()] = toy::sorted({action, drama});
    CHECK(diversity(two, cat_of, 2) == doctest::Approx(1.0));
}

TEST_CASE("novelty") {
    toy::World w;
    std::vector<Interaction> train;
    for (int i = 0; i < 4; ++i) train.push_back(w.x("u" + std::to_string(i), "A", 1));
    for (int i = 0; i < 2; ++i) train.push_back(w.x("u" + std::to_string(i), "B", 1));
    train.push_back(w.x("u0", "C", 1));
    auto pop = train_mostpop(train);
    CHECK(*novelty(w.list("q", {"A"}), pop, 10) == 0.0);
    CHECK(*novelty(w.list("q", {"B", "C"}), pop, 10) == doctest::Approx(0.625));
    CHECK(*novelty(w.list("q", {"Z"}), pop, 10) == 1.0);
    CHECK_FALSE(novelty(w.list("q", {}), pop, 10));
}

TEST_CASE("serendipity") {
    toy::World w;
    auto base = w.list("u", {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    auto four = w.list("u", {"a", "b", "c", "d", "k", "l", "m", "n", "o", "p"});
    CHECK(serendipity(four, base, 10) == doctest::Approx(0.6));
    CHECK(serendipity(base, base, 10) == 0.0);
    auto disjoint = w.list("u", {"k", "l", "m", "n", "o", "p", "q", "r", "s", "t"});
    CHECK(serendipity(disjoint, base, 10) == 1.0);
    auto other = w.list("v", {"a"});
    CHECK_THROWS_AS(serendipity(other, base, 10), UsageError);
}

TEST_CASE("defined_mean skips undefined values") {
    std::vector<std::optional<double>> v = {0.5, std::nullopt, 1.0};
    CHECK(*defined_mean(v) == doctest::Approx(0.75));
    std::vector<std::optional<double>> none = {std::nullopt};
    CHECK_FALSE(defined_mean(none));
}
