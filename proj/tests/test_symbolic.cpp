#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "nesycl/errors.hpp"
#include "nesycl/scenegen.hpp"
#include "nesycl/symbolic.hpp"
#include "support.hpp"

using namespace nesycl;
using testsupport::brute_force_ged;
using testsupport::random_graph;

namespace {

ConceptGraph two_node(ShapeKind s1, ColorKind c1, ShapeKind s2, ColorKind c2, double dx, double dy) {
    return make_canonical({{s1, c1}, {s2, c2}}, {{32, 32}, {32 + dx, 32 + dy}});
}

}  // namespace

TEST_CASE("direction bins are antisymmetric and centered on +x") {
    CHECK(direction_bin(1, 0) == 0);
    CHECK(direction_bin(0, -1) == 2);  // up on screen
    CHECK(direction_bin(-1, 0) == 4);
    CHECK(direction_bin(0, 1) == 6);
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double dx = uniform(rng, -10, 10), dy = uniform(rng, -10, 10);
        CHECK(direction_bin(-dx, -dy) == (direction_bin(dx, dy) + 4) % 8);
    }
    // exact sector boundaries
    for (int k = 0; k < 8; ++k) {
        const double a = (22.5 + 45.0 * k) * std::numbers::pi / 180.0;
        const double dx = std::cos(a), dy = -std::sin(a);
        CHECK(direction_bin(-dx, -dy) == (direction_bin(dx, dy) + 4) % 8);
    }
}

TEST_CASE("near-boundary directions are ties that round down") {
    auto at = [](double deg) {
        const double a = deg * std::numbers::pi / 180.0;
        return direction_bin(std::cos(a), -std::sin(a));
    };
    CHECK(at(22.5) == 0);
    CHECK(at(24.0) == 0);
    CHECK(at(21.0) == 0);
    CHECK(at(26.0) == 1);
    CHECK(at(45.0) == 1);
    CHECK(at(337.5) == 7);
    CHECK(at(339.0) == 7);
    CHECK(at(0.0) == 0);
}

TEST_CASE("canonical form is invariant to node order") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(uniform_index(rng, 4));
        std::vector<ConceptNode> nodes;
        std::vector<Point> pts;
        for (int i = 0; i < n; ++i) {
            nodes.push_back({static_cast<ShapeKind>(uniform_index(rng, 2)), static_cast<ColorKind>(uniform_index(rng, 2))});
            pts.push_back({uniform(rng, 0, 64), uniform(rng, 0, 64)});
        }
        const auto g = make_canonical(nodes, pts);
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        shuffle(perm.begin(), perm.end(), rng);
        std::vector<ConceptNode> pn;
        std::vector<Point> pp;
        for (int k : perm) {
            pn.push_back(nodes[k]);
            pp.push_back(pts[k]);
        }
        CHECK(make_canonical(pn, pp) == g);
        CHECK(graph_from_json(to_json(g)) == g);
    }
}

TEST_CASE("ged matches hand-computed values") {
    const auto a = two_node(ShapeKind::Square, ColorKind::Red, ShapeKind::Circle, ColorKind::Blue, 10, 0);
    CHECK(ged(a, a) == 0.0);
    const auto recolor = two_node(ShapeKind::Square, ColorKind::Green, ShapeKind::Circle, ColorKind::Blue, 10, 0);
    CHECK(ged(a, recolor) == 1.0);
    const auto moved = two_node(ShapeKind::Square, ColorKind::Red, ShapeKind::Circle, ColorKind::Blue, 0, 10);
    CHECK(ged(a, moved) == 1.0);
    const auto single = make_canonical({{ShapeKind::Square, ColorKind::Red}}, {{32, 32}});
    CHECK(ged(a, single) == 3.0);  // one node deletion plus its edge
    CHECK(ged(single, ConceptGraph{}) == 2.0);
    CHECK(sim(a, single) == doctest::Approx(0.25));
}

TEST_CASE("ged equals the exhaustive oracle on small graphs") {
    Rng rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto a = random_graph(rng, 4), b = random_graph(rng, 4);
        CHECK(ged(a, b) == brute_force_ged(a, b));
    }
}

TEST_CASE("ged is a metric on random graphs") {
    Rng rng(77);
    for (int i = 0; i < 300; ++i) {
        const auto a = random_graph(rng, 5), b = random_graph(rng, 5), c = random_graph(rng, 5);
        const double ab = ged(a, b), ba = ged(b, a), bc = ged(b, c), ac = ged(a, c);
        CHECK(ab == ba);
        CHECK(ac <= ab + bc + 1e-12);
        CHECK((ab == 0.0) == (a == b));
    }
}

TEST_CASE("ged rejects oversized graphs") {
    Rng rng(1);
    const auto big = random_graph(rng, 7, 7);
    CHECK_THROWS_AS(ged(big, big), GraphTooLarge);
}

TEST_CASE("prototype is the medoid") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ConceptGraph> members;
        for (int i = 0; i < 7; ++i) members.push_back(random_graph(rng, 3));
        const auto proto = select_prototype(members);
        CHECK(std::find(members.begin(), members.end(), proto) != members.end());
        auto total = [&](const ConceptGraph& g) {
            double s = 0;
            for (const auto& m : members) s += ged(g, m);
            return s;
        };
        for (const auto& m : members) CHECK(total(proto) <= total(m));
    }
    CHECK_THROWS_AS(select_prototype(std::span<const ConceptGraph>{}), EmptyClass);
}

TEST_CASE("knowledge base is append-only and order invariant") {
    Rng rng(5);
    std::map<int, std::vector<ConceptGraph>> per_class;
    for (int c = 0; c < 6; ++c)
        for (int i = 0; i < 5; ++i) per_class[c].push_back(random_graph(rng, 4));
    auto task = [&](std::initializer_list<int> classes) {
        std::map<int, std::vector<ConceptGraph>> m;
        for (int c : classes) m[c] = per_class[c];
        return m;
    };

    const KnowledgeBase empty;
    const auto kb1 = empty.updated(task({0, 1, 2}));
    const auto kb2 = kb1.updated(task({3, 4, 5}));
    CHECK(empty.size() == 0);
    CHECK(kb1.size() == 3);
    CHECK(kb2.timestep() == 2);
    for (int c = 0; c < 3; ++c) CHECK(kb2.prototype(c) == kb1.prototype(c));
    CHECK_THROWS_AS(kb2.updated(task({1})), DuplicateClass);

    const auto reversed = KnowledgeBase{}.updated(task({3, 4, 5})).updated(task({0, 1, 2}));
    CHECK(reversed.entries() == kb2.entries());
    CHECK(KnowledgeBase::from_json(kb2.to_json()) == kb2);
    CHECK(kb_update(kb1, task({3, 4, 5})) == kb2);
}

TEST_CASE("classify scopes the softmax and breaks ties low") {
    const auto a = two_node(ShapeKind::Square, ColorKind::Red, ShapeKind::Circle, ColorKind::Blue, 10, 0);
    const auto b = two_node(ShapeKind::Triangle, ColorKind::Red, ShapeKind::Circle, ColorKind::Blue, 10, 0);
    const auto kb = KnowledgeBase{}.updated({{4, {a}}, {7, {b}}, {9, {a}}});
    const auto full = classify(kb, a);
    REQUIRE(full.size() == 3);
    double sum = 0;
    for (auto [c, p] : full) sum += p;
    CHECK(sum == doctest::Approx(1.0));
    CHECK(argmax(full) == 4);  // tie between 4 and 9

    const std::vector<int> scope{9, 7};
    const auto scoped = classify(kb, a, scope);
    REQUIRE(scoped.size() == 2);
    CHECK(scoped[0].first == 7);
    CHECK(argmax(scoped) == 9);
    CHECK(scoped[1].second > scoped[0].second);
    CHECK_THROWS_AS(classify(KnowledgeBase{}, a), EmptyKnowledgeBase);
}
