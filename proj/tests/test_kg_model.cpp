#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emea/errors.hpp"
#include "emea/kg.hpp"

using namespace emea;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Central interval of Binomial(n, p) holding >= `mass` probability, from the
// exact log-space pmf.
std::pair<std::size_t, std::size_t> binomial_band(std::size_t n, double p, double mass) {
    std::vector<double> lf(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) lf[i] = lf[i - 1] + std::log(static_cast<double>(i));
    const double tail = (1.0 - mass) / 2.0;
    std::size_t lo = 0, hi = n;
    double cum = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double logp = lf[n] - lf[k] - lf[n - k] + static_cast<double>(k) * std::log(p) +
                            static_cast<double>(n - k) * std::log(1.0 - p);
        cum += std::exp(logp);
        if (cum < tail) lo = k + 1;
        if (cum < 1.0 - tail) hi = k + 1;
    }
    return {lo, hi};
}

}  // namespace

TEST_CASE("load_kg deduplicates identical lines") {
    const auto path = write_temp("kg_dedup.tsv", "a\tr\tb\na\tr\tb\n");
    const KnowledgeGraph kg = load_kg(path);
    CHECK(kg.num_entities() == 2);
    CHECK(kg.num_relations() == 1);
    CHECK(kg.triples().size() == 1);
}

TEST_CASE("load_kg counts vocabularies in first-appearance order") {
    const auto path = write_temp("kg_order.tsv", "a\tr\tb\nb\ts\tc\n");
    const KnowledgeGraph kg = load_kg(path);
    CHECK(kg.num_entities() == 3);
    CHECK(kg.num_relations() == 2);
    CHECK(kg.triples().size() == 2);
    CHECK(kg.entity_label(0) == "a");
    CHECK(kg.entity_label(1) == "b");
    CHECK(kg.entity_label(2) == "c");
    CHECK(kg.find_entity("c") == 2);
    CHECK(kg.find_entity("zz") == -1);
}

TEST_CASE("load_kg rejects malformed lines with the line number") {
    const auto path = write_temp("kg_bad.tsv", "a\tr\tb\nbroken\tline\n");
    try {
        load_kg(path);
        FAIL("expected ParseError");
    } catch (const ParseError& ex) {
        CHECK(ex.line_number == 2);
        CHECK(std::string(ex.what()).find("broken") != std::string::npos);
    }
}

TEST_CASE("load_kg rejects an empty file") {
    const auto path = write_temp("kg_empty.tsv", "");
    CHECK_THROWS_AS(load_kg(path), DataError);
}

TEST_CASE("kg round trips through serialization") {
    const auto path = write_temp("kg_rt.tsv", "a\tr\tb\nb\ts\tc\nc\tr\ta\n");
    const KnowledgeGraph kg = load_kg(path);
    const auto out = fs::temp_directory_path() / "kg_rt_out.tsv";
    save_kg(kg, out);
    const KnowledgeGraph again = load_kg(out);
    REQUIRE(again.num_entities() == kg.num_entities());
    REQUIRE(again.num_relations() == kg.num_relations());
    REQUIRE(again.triples().size() == kg.triples().size());
    for (std::size_t i = 0; i < kg.triples().size(); ++i)
        CHECK(again.triples()[i] == kg.triples()[i]);
}

TEST_CASE("adjacency covers each triple exactly twice across entities") {
    const auto path = write_temp("kg_adj.tsv", "a\tr\tb\nb\ts\tc\nc\tr\ta\nd\tr\td\n");
    const KnowledgeGraph kg = load_kg(path);
    std::size_t total = 0;
    for (std::size_t e = 0; e < kg.num_entities(); ++e) {
        for (const Incidence& inc : kg.incident(static_cast<EntityId>(e))) {
            const Triple& t = kg.triples()[inc.triple];
            CHECK((inc.as_head ? t.head : t.tail) == static_cast<EntityId>(e));
            ++total;
        }
    }
    CHECK(total == 2 * kg.triples().size());  // self loop counted in both roles
}

TEST_CASE("load_links resolves labels and keeps file order") {
    const auto kgp = write_temp("kgl1.tsv", "a\tr\tb\n");
    const auto kgq = write_temp("kgl2.tsv", "a'\tr\tb'\n");
    const KnowledgeGraph kg1 = load_kg(kgp);
    const KnowledgeGraph kg2 = load_kg(kgq);
    const auto links_path = write_temp("links_ok.tsv", "a\ta'\nb\tb'\n");
    const LinkList links = load_links(links_path, kg1, kg2);
    REQUIRE(links.size() == 2);
    CHECK(links[0] == std::make_pair(kg1.find_entity("a"), kg2.find_entity("a'")));

    const auto unknown = write_temp("links_unknown.tsv", "zz\ta'\n");
    CHECK_THROWS_AS(load_links(unknown, kg1, kg2), DataError);

    const auto dup = write_temp("links_dup.tsv", "a\ta'\na\tb'\n");
    CHECK_THROWS_AS(load_links(dup, kg1, kg2), DataError);
}

TEST_CASE("alignment state validates its partition") {
    AlignmentState state;
    state.labelled[0] = 0;
    state.assigned[1] = 1;
    CHECK_NOTHROW(state.validate(2, 2));
    state.assigned[0] = 1;  // entity both labelled and assigned
    CHECK_THROWS_AS(state.validate(2, 2), DataError);
}

TEST_CASE("synthetic pair with zero dropout copies the base structure") {
    SyntheticPairConfig cfg;
    cfg.entity_count = 50;
    cfg.relation_count = 3;
    cfg.mean_degree = 4.0;
    cfg.edge_dropout = 0.0;
    cfg.rng_seed = 7;
    const SyntheticPair pair = generate_synthetic_pair(cfg);
    CHECK(pair.kg1.triples().size() == pair.kg2.triples().size());
    CHECK(pair.truth.size() == 50);
    auto strip = [](const std::string& s) { return s.substr(0, s.size() - 2); };
    for (std::size_t i = 0; i < pair.kg1.triples().size(); ++i) {
        const Triple& t1 = pair.kg1.triples()[i];
        const Triple& t2 = pair.kg2.triples()[i];
        CHECK(strip(pair.kg1.entity_label(t1.head)) == strip(pair.kg2.entity_label(t2.head)));
        CHECK(strip(pair.kg1.entity_label(t1.tail)) == strip(pair.kg2.entity_label(t2.tail)));
    }
    // ground-truth wiring: the label-matching oracle is exact
    for (const auto& [a, b] : pair.truth)
        CHECK(strip(pair.kg1.entity_label(a)) == strip(pair.kg2.entity_label(b)));
}

TEST_CASE("synthetic pair is deterministic under a fixed seed") {
    SyntheticPairConfig cfg;
    cfg.entity_count = 40;
    cfg.relation_count = 4;
    cfg.mean_degree = 3.0;
    cfg.edge_dropout = 0.3;
    cfg.rng_seed = 99;
    const SyntheticPair a = generate_synthetic_pair(cfg);
    const SyntheticPair b = generate_synthetic_pair(cfg);
    const auto pa = fs::temp_directory_path() / "synth_a.tsv";
    const auto pb = fs::temp_directory_path() / "synth_b.tsv";
    save_kg(a.kg1, pa);
    save_kg(b.kg1, pb);
    CHECK(slurp(pa) == slurp(pb));
    CHECK(a.truth == b.truth);
}

TEST_CASE("dropout keeps each copy inside the central 99.9% binomial band") {
    SyntheticPairConfig cfg;
    cfg.entity_count = 100;
    cfg.relation_count = 5;
    cfg.mean_degree = 4.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.rng_seed = 1234 + seed;
        cfg.edge_dropout = 0.0;
        const std::size_t base = generate_synthetic_pair(cfg).kg1.triples().size();
        const auto [lo, hi] = binomial_band(base, 0.8, 0.999);

        cfg.edge_dropout = 0.2;
        const SyntheticPair pair = generate_synthetic_pair(cfg);
        CHECK(pair.kg1.triples().size() >= lo);
        CHECK(pair.kg1.triples().size() <= hi);
        CHECK(pair.kg2.triples().size() >= lo);
        CHECK(pair.kg2.triples().size() <= hi);
    }
}

TEST_CASE("degenerate synthetic config raises a generation error") {
    SyntheticPairConfig cfg;
    cfg.entity_count = 10;
    cfg.mean_degree = 0.4;  // a couple of base triples at most
    cfg.edge_dropout = 1.0;
    CHECK_THROWS_AS(generate_synthetic_pair(cfg), ConfigError);
}
