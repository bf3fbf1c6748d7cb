#include <doctest.h>

#include "kgaudit/error.hpp"
#include "support/toy.hpp"

using namespace kgaudit;

TEST_CASE("path_type_of keeps relations and directions") {
    toy::World w;
    auto kg = w.graph({{"P1", "directed_by", "D1"}, {"P2", "directed_by", "D1"}});
    auto p = w.path("UU watched PP1 directed_by ED1 directed_by~inv PP2");
    auto t = path_type_of(p);
    REQUIRE(t.steps.size() == 3);
    CHECK(t.steps[0] == PathStep{w.r("watched"), Direction::forward});
    CHECK(t.steps[1] == PathStep{w.r("directed_by"), Direction::forward});
    CHECK(t.steps[2] == PathStep{w.r("directed_by"), Direction::inverse});
}

TEST_CASE("path types ignore the entities visited") {
    toy::World w;
    w.graph({{"P1", "directed_by", "D1"}, {"P1", "directed_by", "D2"}, {"P2", "directed_by", "D1"}, {"P1", "genre", "G"},
             {"P1", "artist", "A"}});
    auto a = w.path("UU watched PP1 directed_by ED1 directed_by~inv PP2");
    auto b = w.path("UU watched PP2 directed_by ED2 directed_by~inv PP1");
    CHECK(path_type_of(a) == path_type_of(b));
    auto c = w.path("UU listened PP1 genre EG directed_by~inv PP2");
    auto d = w.path("UU listened PP1 artist EA directed_by~inv PP2");
    CHECK(path_type_of(c) != path_type_of(d));
}

TEST_CASE("path structure errors") {
    toy::World w;
    w.graph({{"P1", "r", "E1"}});
    ReasoningPath one_hop{w.u("U"), {{w.r("r"), Direction::forward, w.e("P1")}}};
    CHECK_THROWS_AS(path_type_of(one_hop), ValidationError);
    CHECK_THROWS_AS(w.path("UU r PP1 r"), ValidationError);
    CHECK_THROWS_AS(w.path("UU r PP1 r EE1"), ValidationError);
    CHECK_THROWS_AS(w.path("PP1 r PP1 r PP1"), ValidationError);
}

TEST_CASE("linking interaction is the most recent one") {
    toy::World w;
    w.graph({{"P1", "r", "E1"}, {"P2", "r", "E1"}});
    std::vector<Interaction> train = {w.x("U", "P1", 100), w.x("U", "P1", 200), w.x("V", "P2", 50)};
    InteractionIndex idx(train);
    auto p = w.path("UU i PP1 r EE1 r~inv PP2");
    CHECK(linking_interaction_of(p, idx).timestamp == 200);
    auto q = w.path("UV i PP1 r EE1 r~inv PP2");
    CHECK_THROWS_AS(linking_interaction_of(q, idx), ValidationError);
}

TEST_CASE("shared entity is the penultimate entity") {
    toy::World w;
    w.graph({{"P1", "r", "D"}, {"P2", "r", "D"}, {"P1", "s", "P2"}, {"P2", "q", "E4"}, {"P3", "q", "E4"}});
    CHECK(shared_entity_of(w.path("UU i PP1 r ED r~inv PP2")) == w.e("D"));
    CHECK(shared_entity_of(w.path("UU i PP1 r ED r~inv PP2 q EE4 q~inv PP3")) == w.e("E4"));
    auto two = w.path("UU i PP1 s PP2");
    CHECK(shared_entity_of(two) == w.e("P1"));
    CHECK(shared_entity_of(two) == two.linking_product());
}

TEST_CASE("degree counts incident triples") {
    toy::World w;
    auto kg = w.graph({{"P1", "r", "T"}, {"P2", "r", "T"}, {"P3", "s", "T"}, {"P1", "s", "X"}});
    CHECK(degree(kg, w.e("T")) == 3);
    CHECK(degree(kg, w.e("P1")) == 2);
    auto lonely = w.e("P9");
    std::vector<bool> members(w.labels.entities.size(), true);
    KnowledgeGraph with_isolated(w.types(), members, {kg.triples().begin(), kg.triples().end()});
    CHECK(degree(with_isolated, lonely) == 0);
    CHECK_THROWS_AS(degree(kg, lonely), ValidationError);

    std::size_t sum = 0;
    for (std::size_t e = 0; e < kg.id_space(); ++e)
        if (kg.contains(EntityId(static_cast<std::int32_t>(e)))) sum += kg.degree(EntityId(static_cast<std::int32_t>(e)));
    CHECK(sum == 2 * kg.triple_count());
}

TEST_CASE("adjacency is consistent in both directions") {
    toy::World w;
    auto kg = w.graph({{"P1", "r", "T"}, {"P2", "r", "T"}, {"P2", "s", "U"}, {"P2", "r", "T"}});
    CHECK(kg.triple_count() == 3);
    for (const auto& t : kg.triples()) {
        auto fw = kg.neighbors(t.head, t.relation, Direction::forward);
        auto bw = kg.neighbors(t.tail, t.relation, Direction::inverse);
        CHECK(std::find(fw.begin(), fw.end(), t.tail) != fw.end());
        CHECK(std::find(bw.begin(), bw.end(), t.head) != bw.end());
        CHECK(kg.has_step(t.head, t.relation, Direction::forward, t.tail));
        CHECK(kg.has_step(t.tail, t.relation, Direction::inverse, t.head));
    }
    CHECK_FALSE(kg.has_step(w.e("P1"), w.r("s"), Direction::forward, w.e("T")));
}

TEST_CASE("path patterns refine path types") {
    toy::World w;
    auto kg = w.graph({{"P1", "r", "D1"}, {"P2", "r", "D1"}, {"P1", "r", "G1"}, {"P3", "r", "G1"}});
    auto a = w.path("UU i PP1 r ED1 r~inv PP2");
    auto b = w.path("UU i PP1 r EG1 r~inv PP3");
    CHECK(path_type_of(a) == path_type_of(b));
    CHECK(path_pattern_of(a, kg) != path_pattern_of(b, kg));
}

TEST_CASE("validate_path reasons") {
    toy::World w;
    auto kg = w.graph({{"P1", "r", "D"}, {"P2", "r", "D"}});
    std::vector<Interaction> train = {w.x("U", "P1", 1)};
    InteractionIndex idx(train);
    auto ok = w.path("UU i PP1 r ED r~inv PP2");
    CHECK(validate_path(ok, w.u("U"), w.e("P2"), kg, idx) == PathCheck::ok);
    CHECK(validate_path(ok, w.u("V"), w.e("P2"), kg, idx) == PathCheck::wrong_user);
    CHECK(validate_path(ok, w.u("U"), w.e("P1"), kg, idx) == PathCheck::wrong_endpoint);
    auto no_link = w.path("UU i PP2 r ED r~inv PP1");
    CHECK(validate_path(no_link, w.u("U"), w.e("P1"), kg, idx) == PathCheck::no_linking_interaction);
    auto bad_dir = w.path("UU i PP1 r ED r PP2");
    CHECK(validate_path(bad_dir, w.u("U"), w.e("P2"), kg, idx) == PathCheck::missing_edge);
}

TEST_CASE("vocabulary interning is stable") {
    Vocabulary<EntityId> v;
    auto a = v.intern("a");
    auto b = v.intern("b");
    CHECK(v.intern("a") == a);
    CHECK(a.value == 0);
    CHECK(b.value == 1);
    CHECK(v.label(b) == "b");
    CHECK_FALSE(v.find("c"));
    CHECK_THROWS_AS(v.label(EntityId(7)), ValidationError);
}
