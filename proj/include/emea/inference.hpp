#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "emea/compatibility.hpp"
#include "emea/evalkit.hpp"
#include "emea/kg.hpp"
#include "emea/normalizer.hpp"
#include "emea/paris_stats.hpp"
#include "emea/similarity.hpp"

namespace emea {

enum class PlScope { All, Labelled };
enum class RuleSelect { Paris, AvoidConf };

struct EmConfig {
    int k = 10;  // candidates per entity
    int n = 5;   // AvoidConf neighbourhood size
    int iterations = 5;
    PlScope pl_scope = PlScope::All;
    int m_step_steps = 100;
    double m_step_lr = 0.1;
    int patience = 2;                   // validation Hit@1 non-improving iterations
    bool sample_pseudo_labels = false;  // default: argmax of q*
    bool soft_paris = false;            // soft neighbour beliefs inside the PARIS indicator
    bool retrain_from_scratch = false;  // default: fine-tune the encoder each iteration
    std::uint64_t rng_seed = 0;
};

// Point assignment: argmax of each unlabelled belief row (ties to the lower
// target id), ground truth for labelled entities.
AlignmentState map_assignment(const BeliefTable& beliefs, const LinkList& labelled);

// Dense view of an AlignmentState, -1 for unassigned entities.
std::vector<EntityId> flatten_assignment(const AlignmentState& state, std::size_t num_entities);

// Rule features per (entity, candidate), frozen for one sampled assignment.
// Built once per M-step: the features do not depend on the weights.
struct FeatureRow {
    EntityId entity;
    std::vector<EntityId> candidates;
    std::vector<double> features;  // |candidates| x rule_count, row-major
    std::size_t observed;          // position of the assigned target in candidates
    double gamma;
};

struct FeatureTable {
    std::size_t rule_count = 0;
    std::vector<FeatureRow> rows;
};

FeatureTable build_feature_table(const FactorGraph& fg, const RuleSet& rules,
                                 const BeliefTable& beliefs, const AlignmentState& assignment,
                                 PlScope scope);

// Single-sample pseudo-likelihood objective and its analytic gradient over phi.
double pl_objective(const RuleWeights& weights, const FeatureTable& table);
std::vector<double> pl_gradient(const RuleWeights& weights, const FeatureTable& table);

// Gradient ascent on the pseudo-likelihood with step rejection: the returned
// weights never score below the starting point.
RuleWeights m_step(const RuleWeights& start, const FeatureTable& table, int steps,
                   double learning_rate);

// Single-block coordinate-ascent update: every unlabelled row is replaced by
// the truncated conditional under the one sampled assignment, reading only the
// old beliefs. Labelled rows pass through unchanged.
BeliefTable e_step(const BeliefTable& beliefs, const RuleWeights& weights, const FactorGraph& fg,
                   const RuleSet& rules, const LinkList& labelled);

// Training links for the encoder update: argmax of q* per unlabelled entity
// (or a sample when rng is provided), concatenated with the seeds.
LinkList pseudo_label(const BeliefTable& qstar, const LinkList& labelled,
                      class Rng* sampler = nullptr);

struct IterationRecord {
    int iteration = 0;  // 0 is the plain encoder pipeline
    MetricReport neural_valid;
    MetricReport neural_test;                 // n == 0 when no test links supplied
    double compat_hit1_valid = -1.0;          // argmax-q* accuracy; -1 before the first E-step
    double compat_hit1_test = -1.0;
    double conflict = 0.0;                    // of the current point assignment
    double mean_compatibility = 0.0;          // PARIS profile mean of the assignment
    double pl_objective_value = 0.0;          // after the M-step
    RuleWeights phi;
    NormalizerParams omega;
    double seconds_encoder = 0.0;
    double seconds_normalizer = 0.0;
    double seconds_m_step = 0.0;
    double seconds_e_step = 0.0;
};

struct EmRunState {
    std::vector<IterationRecord> history;
    EmbeddingTable embeddings;
    CandidateTable candidates;
    BeliefTable beliefs;
    RuleWeights weights;
    NormalizerParams normalizer;
    AlignmentState assignment;
    bool early_stopped = false;
};

struct NormalizerFitConfig {
    NormalizerParams init;
    int steps = 200;
    double learning_rate = 0.05;
};

// Full Alg-1 driver: initial encoder training on the seeds, then EM iterations
// of {M-step, E-step, pseudo-label, encoder update, re-normalize} with early
// stopping on validation Hit@1.
EmRunState run_emea(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, const LinkList& seeds,
                    const LinkList& validation, const LinkList& test,
                    const EncoderConfig& encoder_config, const NormalizerFitConfig& norm_config,
                    const EmConfig& em_config, RuleSelect rules);

// Compatibility-only driver for imported similarity dumps: no encoder, the
// beliefs are refreshed from q* between iterations.
EmRunState run_emea_imported(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                             const CandidateTable& imported, const LinkList& seeds,
                             const LinkList& validation, const LinkList& test,
                             const NormalizerFitConfig& norm_config, const EmConfig& em_config,
                             RuleSelect rules);

}  // namespace emea
