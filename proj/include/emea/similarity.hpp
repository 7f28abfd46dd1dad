#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "emea/kg.hpp"

namespace emea {

// Unit-L2-normalized entity embeddings for both KGs, row-major.
struct EmbeddingTable {
    int dim = 0;
    std::vector<double> source;  // num_source x dim
    std::vector<double> target;  // num_target x dim

    std::size_t num_source() const { return dim ? source.size() / dim : 0; }
    std::size_t num_target() const { return dim ? target.size() / dim : 0; }
    std::span<const double> source_vec(EntityId e) const {
        return {source.data() + static_cast<std::size_t>(e) * dim, static_cast<std::size_t>(dim)};
    }
    std::span<const double> target_vec(EntityId e) const {
        return {target.data() + static_cast<std::size_t>(e) * dim, static_cast<std::size_t>(dim)};
    }
};

struct EncoderConfig {
    int dim = 64;
    double margin = 1.0;
    int negatives = 5;  // per positive triple
    int epochs = 200;
    double learning_rate = 0.01;
    std::uint64_t rng_seed = 0;
};

struct Candidate {
    EntityId target;
    double similarity;
};

// Per source entity: top-K targets sorted by (similarity desc, id asc).
struct CandidateTable {
    int k = 0;
    std::vector<std::vector<Candidate>> rows;  // indexed by source entity id

    const std::vector<Candidate>& row(EntityId e) const { return rows[e]; }
    // Best candidate under the canonical order; -1 on an empty row.
    EntityId top1(EntityId e) const {
        return rows[e].empty() ? -1 : rows[e].front().target;
    }
};

// Translational baseline encoder: margin-ranking loss over the triples of both
// KGs with uniform negative corruption, plus a squared-distance alignment loss
// over seed (and pseudo-labelled) pairs. Relations shared across KGs when
// their labels match, so structure evidence flows between the graphs.
// Kept as a class so the EM loop can fine-tune across iterations.
class BaselineEncoder {
public:
    BaselineEncoder(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, EncoderConfig config);

    // Runs `epochs` epochs (config default when negative). Seeds must be
    // non-empty; extra pairs are pseudo-labels and must not repeat seed sources.
    void train(const LinkList& seeds, const LinkList& extra_pairs = {}, int epochs = -1);

    void reinitialize();  // fresh random init from the configured seed

    EmbeddingTable embeddings() const;
    const std::vector<double>& epoch_losses() const { return epoch_losses_; }

private:
    void apply_triple_step(const std::vector<Triple>& triples, std::vector<double>& entities,
                           std::size_t entity_count, class Rng& rng);

    const KnowledgeGraph& kg1_;
    const KnowledgeGraph& kg2_;
    EncoderConfig config_;
    std::vector<double> emb1_, emb2_;   // entity embeddings
    std::vector<double> rel_;           // joint relation vocabulary, keyed by label
    std::vector<RelationId> rel_map1_, rel_map2_;  // per-KG relation -> joint id
    std::size_t joint_relations_ = 0;
    std::vector<double> epoch_losses_;
    std::uint64_t epoch_counter_ = 0;  // distinct negative-sampling stream per epoch
};

// One-shot convenience wrapper over BaselineEncoder.
EmbeddingTable train_baseline_encoder(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                      const LinkList& seeds, const EncoderConfig& config,
                                      const LinkList& extra_pairs = {});

// Cosine similarity of a source entity against every target (embeddings are
// unit vectors, so this is a dot product).
std::vector<double> similarity_row(const EmbeddingTable& emb, EntityId source);

CandidateTable build_candidate_table(const EmbeddingTable& emb, int k);

// Reads a 'source TAB target TAB similarity' dump, groups by source, sorts
// canonically. max_k = 0 keeps all imported candidates.
CandidateTable import_candidate_table(const std::filesystem::path& path,
                                      const KnowledgeGraph& source, const KnowledgeGraph& target,
                                      int max_k = 0);

void save_embeddings(const EmbeddingTable& emb, const KnowledgeGraph& kg1,
                     const KnowledgeGraph& kg2, const std::filesystem::path& dir);
EmbeddingTable load_embeddings(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                               const std::filesystem::path& dir);

}  // namespace emea
