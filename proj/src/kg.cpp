#include "emea/kg.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "emea/errors.hpp"
#include "emea/rng.hpp"

namespace emea {

namespace {

std::uint64_t pair_key(EntityId a, EntityId b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

std::uint64_t triple_key(EntityId h, RelationId r, EntityId t) {
    // collision-free while ids stay below 2^21; Builder enforces the bound
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(h)) << 42) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(r)) << 21) |
           static_cast<std::uint32_t>(t);
}

constexpr std::size_t kMaxVocab = 1u << 21;

}  // namespace

EntityId KnowledgeGraphBuilder::entity(const std::string& label) {
    auto [it, inserted] = kg_.entity_ids_.try_emplace(
        label, static_cast<EntityId>(kg_.entity_labels_.size()));
    if (inserted) {
        if (kg_.entity_labels_.size() >= kMaxVocab) throw DataError("entity vocabulary too large");
        kg_.entity_labels_.push_back(label);
    }
    return it->second;
}

RelationId KnowledgeGraphBuilder::relation(const std::string& label) {
    auto [it, inserted] = kg_.relation_ids_.try_emplace(
        label, static_cast<RelationId>(kg_.relation_labels_.size()));
    if (inserted) {
        if (kg_.relation_labels_.size() >= kMaxVocab) throw DataError("relation vocabulary too large");
        kg_.relation_labels_.push_back(label);
    }
    return it->second;
}

bool KnowledgeGraphBuilder::add(EntityId h, RelationId r, EntityId t) {
    if (!seen_.insert(triple_key(h, r, t)).second) return false;
    kg_.triples_.push_back({h, r, t});
    return true;
}

KnowledgeGraph KnowledgeGraphBuilder::build() && {
    kg_.finalize();
    return std::move(kg_);
}

void KnowledgeGraph::finalize() {
    adjacency_.assign(entity_labels_.size(), {});
    for (std::uint32_t i = 0; i < triples_.size(); ++i) {
        const Triple& t = triples_[i];
        adjacency_[t.head].push_back({i, true});
        adjacency_[t.tail].push_back({i, false});
        pair_rels_[pair_key(t.head, t.tail)].push_back(t.rel);
        triple_set_.insert(triple_key(t.head, t.rel, t.tail));
    }
}

EntityId KnowledgeGraph::find_entity(const std::string& label) const {
    auto it = entity_ids_.find(label);
    return it == entity_ids_.end() ? -1 : it->second;
}

RelationId KnowledgeGraph::find_relation(const std::string& label) const {
    auto it = relation_ids_.find(label);
    return it == relation_ids_.end() ? -1 : it->second;
}

const std::vector<RelationId>& KnowledgeGraph::relations_between(EntityId h, EntityId t) const {
    static const std::vector<RelationId> kEmpty;
    auto it = pair_rels_.find(pair_key(h, t));
    return it == pair_rels_.end() ? kEmpty : it->second;
}

bool KnowledgeGraph::has_triple(EntityId h, RelationId r, EntityId t) const {
    return triple_set_.count(triple_key(h, r, t)) > 0;
}

void AlignmentState::validate(std::size_t num_source_entities,
                              std::size_t num_target_entities) const {
    if (labelled.size() + assigned.size() > num_source_entities)
        throw DataError("alignment state covers more entities than the source KG has");
    for (const auto& [e, y] : labelled) {
        if (assigned.count(e))
            throw DataError("entity " + std::to_string(e) + " is both labelled and assigned");
        if (e < 0 || static_cast<std::size_t>(e) >= num_source_entities || y < 0 ||
            static_cast<std::size_t>(y) >= num_target_entities)
            throw DataError("labelled pair out of vocabulary bounds");
    }
    for (const auto& [e, y] : assigned) {
        if (e < 0 || static_cast<std::size_t>(e) >= num_source_entities || y < 0 ||
            static_cast<std::size_t>(y) >= num_target_entities)
            throw DataError("assigned pair out of vocabulary bounds");
    }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

KnowledgeGraph load_kg(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open triples file: " + path.string());
    KnowledgeGraphBuilder builder;
    std::string line;
    std::size_t lineno = 0;
    std::size_t triples = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
            throw ParseError("expected 'head<TAB>relation<TAB>tail', got \"" + line + "\"", lineno);
        const EntityId h = builder.entity(fields[0]);
        const RelationId r = builder.relation(fields[1]);
        const EntityId t = builder.entity(fields[2]);
        builder.add(h, r, t);
        ++triples;
    }
    if (triples == 0) throw DataError("triples file is empty: " + path.string());
    return std::move(builder).build();
}

LinkList load_links(const std::filesystem::path& path, const KnowledgeGraph& source,
                    const KnowledgeGraph& target) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open links file: " + path.string());
    LinkList links;
    std::unordered_set<EntityId> seen_sources;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto fields = split_tabs(line);
        if (fields.size() != 2)
            throw ParseError("expected 'source<TAB>target', got \"" + line + "\"", lineno);
        const EntityId s = source.find_entity(fields[0]);
        if (s < 0) throw DataError("unknown source entity '" + fields[0] + "' in " + path.string());
        const EntityId t = target.find_entity(fields[1]);
        if (t < 0) throw DataError("unknown target entity '" + fields[1] + "' in " + path.string());
        if (!seen_sources.insert(s).second)
            throw DataError("source entity '" + fields[0] + "' linked more than once (one counterpart per entity)");
        links.emplace_back(s, t);
    }
    return links;
}

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write triples file: " + path.string());
    for (const Triple& t : kg.triples()) {
        out << kg.entity_label(t.head) << '\t' << kg.relation_label(t.rel) << '\t'
            << kg.entity_label(t.tail) << '\n';
    }
}

void save_links(const LinkList& links, const KnowledgeGraph& source, const KnowledgeGraph& target,
                const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write links file: " + path.string());
    for (const auto& [s, t] : links)
        out << source.entity_label(s) << '\t' << target.entity_label(t) << '\n';
}

SyntheticPair generate_synthetic_pair(const SyntheticPairConfig& config) {
    if (config.entity_count < 2) throw ConfigError("entity_count must be at least 2");
    if (config.relation_count < 1) throw ConfigError("relation_count must be at least 1");
    if (config.mean_degree <= 0) throw ConfigError("mean_degree must be positive");
    if (config.edge_dropout < 0.0 || config.edge_dropout > 1.0)
        throw ConfigError("edge_dropout must lie in [0, 1]");

    const int n = config.entity_count;
    const auto target_triples =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * config.mean_degree / 2.0)));

    Rng root(config.rng_seed);
    Rng rng = root.fork(0);

    // Base graph: a random attachment tree keeps every entity connected, the
    // remainder is uniform random edges. Self-loops and duplicates rejected.
    std::vector<Triple> base;
    std::unordered_set<std::uint64_t> seen;
    auto try_add = [&](EntityId h, RelationId r, EntityId t) {
        if (h == t) return false;
        if (!seen.insert(triple_key(h, r, t)).second) return false;
        base.push_back({h, r, t});
        return true;
    };
    for (int v = 1; v < n && base.size() < target_triples; ++v) {
        const auto anchor = static_cast<EntityId>(rng.uniform(v));
        const auto rel = static_cast<RelationId>(rng.uniform(config.relation_count));
        if (rng.uniform(2) == 0)
            try_add(anchor, rel, v);
        else
            try_add(v, rel, anchor);
    }
    std::size_t attempts = 0;
    const std::size_t max_attempts = 64 * target_triples + 1024;
    while (base.size() < target_triples && attempts++ < max_attempts) {
        const auto h = static_cast<EntityId>(rng.uniform(n));
        const auto t = static_cast<EntityId>(rng.uniform(n));
        const auto r = static_cast<RelationId>(rng.uniform(config.relation_count));
        try_add(h, r, t);
    }

    SyntheticPair pair;
    for (int copy = 0; copy < 2; ++copy) {
        Rng drop_rng = root.fork(1 + copy);
        KnowledgeGraphBuilder builder;
        const std::string suffix = copy == 0 ? "_1" : "_2";
        std::size_t kept = 0;
        for (const Triple& t : base) {
            if (drop_rng.uniform_real() < config.edge_dropout) continue;
            const EntityId h = builder.entity("e" + std::to_string(t.head) + suffix);
            std::string rel_label = "r" + std::to_string(t.rel);
            if (config.relation_rename) rel_label += suffix;
            const RelationId r = builder.relation(rel_label);
            const EntityId tail = builder.entity("e" + std::to_string(t.tail) + suffix);
            builder.add(h, r, tail);
            ++kept;
        }
        if (kept == 0)
            throw ConfigError("degenerate synthetic config: a copy kept zero triples");
        KnowledgeGraph kg = std::move(builder).build();
        if (copy == 0)
            pair.kg1 = std::move(kg);
        else
            pair.kg2 = std::move(kg);
    }

    // Identity ground truth over entities that survived dropout in both copies.
    for (int v = 0; v < n; ++v) {
        const EntityId a = pair.kg1.find_entity("e" + std::to_string(v) + "_1");
        const EntityId b = pair.kg2.find_entity("e" + std::to_string(v) + "_2");
        if (a >= 0 && b >= 0) pair.truth.emplace_back(a, b);
    }
    return pair;
}

}  // namespace emea
