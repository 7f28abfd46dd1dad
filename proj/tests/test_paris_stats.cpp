#include <doctest.h>

#include "emea/kg.hpp"
#include "emea/paris_stats.hpp"

using namespace emea;

namespace {

KnowledgeGraph make_kg(const std::vector<std::array<std::string, 3>>& triples) {
    KnowledgeGraphBuilder b;
    for (const auto& [h, r, t] : triples) {
        const EntityId hid = b.entity(h);
        const RelationId rid = b.relation(r);
        const EntityId tid = b.entity(t);
        b.add(hid, rid, tid);
    }
    return std::move(b).build();
}

}  // namespace

TEST_CASE("functionality of a relation with all-distinct endpoints is 1") {
    const KnowledgeGraph kg = make_kg({{"a", "r", "b"}, {"c", "r", "d"}});
    const FunctionalityTable t = functionality(kg);
    CHECK(t.fun[0] == doctest::Approx(1.0));
    CHECK(t.inv_fun[0] == doctest::Approx(1.0));
}

TEST_CASE("functionality counts distinct heads over triples") {
    const KnowledgeGraph kg = make_kg({{"a", "r", "b"}, {"a", "r", "c"}});
    const FunctionalityTable t = functionality(kg);
    CHECK(t.fun[0] == doctest::Approx(0.5));  // 1 head / 2 triples
    CHECK(t.inv_fun[0] == doctest::Approx(1.0));
}

TEST_CASE("inverse functionality counts distinct tails") {
    const KnowledgeGraph kg = make_kg({{"a", "r", "b"}, {"c", "r", "b"}, {"d", "r", "b"}});
    const FunctionalityTable t = functionality(kg);
    CHECK(t.inv_fun[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("functionality ignores triple order and duplicate lines") {
    const KnowledgeGraph a = make_kg({{"a", "r", "b"}, {"a", "r", "c"}, {"d", "s", "e"}});
    const KnowledgeGraph b = make_kg({{"d", "s", "e"}, {"a", "r", "c"}, {"a", "r", "b"}, {"a", "r", "b"}});
    const FunctionalityTable ta = functionality(a);
    const FunctionalityTable tb = functionality(b);
    CHECK(ta.fun[a.find_relation("r")] == doctest::Approx(tb.fun[b.find_relation("r")]));
    CHECK(ta.inv_fun[a.find_relation("s")] == doctest::Approx(tb.inv_fun[b.find_relation("s")]));
}

namespace {

// Four r-triples, all endpoints assigned by the identity correspondence.
struct SubFixture {
    KnowledgeGraph kg1 = make_kg(
        {{"a", "r", "b"}, {"c", "r", "d"}, {"e", "r", "f"}, {"g", "r", "h"}});
    AlignmentState identity(const KnowledgeGraph& kg2) const {
        AlignmentState state;
        for (std::size_t e = 0; e < kg1.num_entities(); ++e) {
            const EntityId y = kg2.find_entity(kg1.entity_label(static_cast<EntityId>(e)) + "'");
            if (y >= 0) state.labelled[static_cast<EntityId>(e)] = y;
        }
        return state;
    }
};

}  // namespace

TEST_CASE("subrelation probability with every triple mirrored is (m+p0)/(n+1)") {
    SubFixture fx;
    const KnowledgeGraph kg2 = make_kg(
        {{"a'", "r'", "b'"}, {"c'", "r'", "d'"}, {"e'", "r'", "f'"}, {"g'", "r'", "h'"}});
    const SubrelationTable sub = subrelation_probs(fx.kg1, kg2, fx.identity(kg2));
    // n = 4, m = 4 -> (4 + 0.01) / 5
    CHECK(sub.forward(0, 0) == doctest::Approx(0.802).epsilon(1e-12));
    CHECK(sub.backward(0, 0) == doctest::Approx(0.802).epsilon(1e-12));
}

TEST_CASE("subrelation probability with no mirrors keeps only the smoothing mass") {
    SubFixture fx;
    const KnowledgeGraph kg2 = make_kg(
        {{"a'", "r'", "d'"}, {"c'", "r'", "b'"}, {"e'", "r'", "h'"}, {"g'", "r'", "f'"}});
    const SubrelationTable sub = subrelation_probs(fx.kg1, kg2, fx.identity(kg2));
    // n = 4, m = 0 -> 0.01 / 5
    CHECK(sub.forward(0, 0) == doctest::Approx(0.002).epsilon(1e-12));
}

TEST_CASE("relations with no assigned endpoints evaluate to zero") {
    SubFixture fx;
    const KnowledgeGraph kg2 = make_kg({{"x", "r'", "y"}});
    AlignmentState empty_state;  // nothing assigned
    const SubrelationTable sub = subrelation_probs(fx.kg1, kg2, empty_state);
    CHECK(sub.forward(0, 0) == 0.0);
    CHECK(sub.backward(0, 0) == 0.0);
    CHECK(sub.forward_entries().empty());
}

TEST_CASE("stored subrelation entries all lie strictly inside (0, 1)") {
    SubFixture fx;
    const KnowledgeGraph kg2 = make_kg(
        {{"a'", "r'", "b'"}, {"c'", "r'", "d'"}, {"e'", "s'", "f'"}, {"g'", "s'", "h'"}});
    const SubrelationTable sub = subrelation_probs(fx.kg1, kg2, fx.identity(kg2));
    for (const auto& [r, rp, v] : sub.forward_entries()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    for (const auto& [rp, r, v] : sub.backward_entries()) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("subrelation estimation is deterministic and idempotent") {
    SubFixture fx;
    const KnowledgeGraph kg2 = make_kg(
        {{"a'", "r'", "b'"}, {"c'", "r'", "d'"}, {"e'", "r'", "f'"}, {"g'", "t'", "h'"}});
    const AlignmentState state = fx.identity(kg2);
    const SubrelationTable s1 = subrelation_probs(fx.kg1, kg2, state);
    const SubrelationTable s2 = subrelation_probs(fx.kg1, kg2, state);
    CHECK(s1.forward_entries() == s2.forward_entries());
    CHECK(s1.backward_entries() == s2.backward_entries());
}

TEST_CASE("partial assignments only count covered triples") {
    const KnowledgeGraph kg1 = make_kg({{"a", "r", "b"}, {"c", "r", "d"}});
    const KnowledgeGraph kg2 = make_kg({{"a'", "r'", "b'"}, {"c'", "r'", "d'"}});
    AlignmentState state;
    state.labelled[kg1.find_entity("a")] = kg2.find_entity("a'");
    state.labelled[kg1.find_entity("b")] = kg2.find_entity("b'");
    // c, d unassigned -> n = 1, m = 1
    const SubrelationTable sub = subrelation_probs(kg1, kg2, state);
    CHECK(sub.forward(0, 0) == doctest::Approx((1.0 + 0.01) / 2.0));
}
