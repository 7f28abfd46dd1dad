#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace emea {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
    EntityId head;
    RelationId rel;
    EntityId tail;
    bool operator==(const Triple&) const = default;
};

// Adjacency entry: which triple touches the entity and in what role.
struct Incidence {
    std::uint32_t triple;  // index into KnowledgeGraph::triples
    bool as_head;          // true: entity is the head, false: the tail
};

// Immutable relation-triple store with dense ids assigned in first-appearance
// order. Construct through KnowledgeGraphBuilder or the loaders below; safe
// for shared concurrent reads afterwards.
class KnowledgeGraph {
public:
    std::size_t num_entities() const { return entity_labels_.size(); }
    std::size_t num_relations() const { return relation_labels_.size(); }
    const std::vector<Triple>& triples() const { return triples_; }

    const std::string& entity_label(EntityId e) const { return entity_labels_[e]; }
    const std::string& relation_label(RelationId r) const { return relation_labels_[r]; }
    // -1 when the label is unknown.
    EntityId find_entity(const std::string& label) const;
    RelationId find_relation(const std::string& label) const;

    const std::vector<Incidence>& incident(EntityId e) const { return adjacency_[e]; }

    // Relations holding between (h, t), split by direction. Empty vector when none.
    const std::vector<RelationId>& relations_between(EntityId h, EntityId t) const;

    bool has_triple(EntityId h, RelationId r, EntityId t) const;

private:
    friend class KnowledgeGraphBuilder;
    void finalize();

    std::vector<std::string> entity_labels_;
    std::vector<std::string> relation_labels_;
    std::unordered_map<std::string, EntityId> entity_ids_;
    std::unordered_map<std::string, RelationId> relation_ids_;
    std::vector<Triple> triples_;
    std::vector<std::vector<Incidence>> adjacency_;
    std::unordered_map<std::uint64_t, std::vector<RelationId>> pair_rels_;
    std::unordered_set<std::uint64_t> triple_set_;
};

class KnowledgeGraphBuilder {
public:
    EntityId entity(const std::string& label);
    RelationId relation(const std::string& label);
    // Deduplicates; returns false if the triple was already present.
    bool add(EntityId h, RelationId r, EntityId t);
    KnowledgeGraph build() &&;

private:
    KnowledgeGraph kg_;
    std::unordered_set<std::uint64_t> seen_;
};

// Labelled seeds over L, current point assignments over U. L and U partition
// the source entity set.
struct AlignmentState {
    std::unordered_map<EntityId, EntityId> labelled;  // over L
    std::unordered_map<EntityId, EntityId> assigned;  // over U

    // Point assignment of e, or -1 when e in U has no assignment yet.
    EntityId lookup(EntityId e) const {
        if (auto it = labelled.find(e); it != labelled.end()) return it->second;
        if (auto it = assigned.find(e); it != assigned.end()) return it->second;
        return -1;
    }
    bool is_labelled(EntityId e) const { return labelled.count(e) > 0; }

    // Throws DataError when the L/U partition or target ids are inconsistent.
    void validate(std::size_t num_source_entities, std::size_t num_target_entities) const;
};

using LinkList = std::vector<std::pair<EntityId, EntityId>>;

struct SyntheticPairConfig {
    int entity_count = 100;
    int relation_count = 5;
    double mean_degree = 4.0;      // average number of incident triples per entity
    double edge_dropout = 0.0;     // applied independently per copy
    bool relation_rename = false;  // disjoint relation labels across the two copies
    std::uint64_t rng_seed = 0;
};

struct SyntheticPair {
    KnowledgeGraph kg1;
    KnowledgeGraph kg2;
    LinkList truth;  // identity correspondence over entities present in both copies
};

// TSV loaders (head TAB rel TAB tail / src TAB tgt), one record per line.
KnowledgeGraph load_kg(const std::filesystem::path& path);
LinkList load_links(const std::filesystem::path& path, const KnowledgeGraph& source,
                    const KnowledgeGraph& target);

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& path);
void save_links(const LinkList& links, const KnowledgeGraph& source,
                const KnowledgeGraph& target, const std::filesystem::path& path);

SyntheticPair generate_synthetic_pair(const SyntheticPairConfig& config);

}  // namespace emea
