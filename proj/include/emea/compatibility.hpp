#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emea/kg.hpp"
#include "emea/paris_stats.hpp"
#include "emea/similarity.hpp"

namespace emea {

// A small set of source entities whose labels one local function constrains.
struct FactorSubset {
    EntityId anchor = -1;
    std::vector<EntityId> members;  // ascending, always contains the anchor
};

struct RuleWeights {
    std::vector<double> phi;  // one weight per rule
    double phi0 = 0.0;        // shared bias; cancels in every conditional
};

// Factor collection with the reverse index and Markov blankets derived from it.
struct FactorGraph {
    std::vector<FactorSubset> factors;
    std::vector<std::vector<std::uint32_t>> containing;  // entity -> factors that include it
    std::vector<std::vector<EntityId>> blankets;         // MB^e, ascending, excludes e

    std::size_t num_entities() const { return containing.size(); }
};

FactorGraph build_factor_graph(std::vector<FactorSubset> factors, std::size_t num_entities);

// One factor per entity: the entity plus its one-hop KG neighbours.
std::vector<FactorSubset> build_paris_factors(const KnowledgeGraph& kg);

// One factor per entity: the entity plus its top-N nearest source entities in
// embedding space (cosine, ties broken by ascending id).
std::vector<FactorSubset> build_avoidconf_factors(const EmbeddingTable& emb, int n);

struct BeliefTable;  // defined in normalizer.hpp

// Rule indicators evaluated on one factor's label assignment. labels[i] holds
// the target id assigned to factor.members[i], -1 when unassigned.
class RuleSet {
public:
    virtual ~RuleSet() = default;
    virtual std::size_t rule_count() const = 0;
    virtual std::vector<std::string> rule_names() const = 0;
    virtual void features(const FactorSubset& factor, std::span<const EntityId> labels,
                          std::span<double> out) const = 0;
};

// PARIS rule: the anchor's mapping is supported by mappings between its KG
// neighbours and the neighbours of its assigned counterpart.
class ParisRuleSet : public RuleSet {
public:
    ParisRuleSet(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, const RelationStats& stats,
                 const BeliefTable* soft_beliefs = nullptr);

    std::size_t rule_count() const override { return 1; }
    std::vector<std::string> rule_names() const override { return {"paris"}; }
    void features(const FactorSubset& factor, std::span<const EntityId> labels,
                  std::span<double> out) const override;

private:
    const KnowledgeGraph& kg1_;
    const KnowledgeGraph& kg2_;
    const RelationStats& stats_;
    const BeliefTable* soft_beliefs_;  // when set, neighbour labels are soft q rows
};

// Conflict-avoidance rules: EqNeu keeps the anchor on the neural prediction,
// One2one penalizes sharing a target with any other factor member.
class AvoidConfRuleSet : public RuleSet {
public:
    explicit AvoidConfRuleSet(const CandidateTable& candidates) : candidates_(candidates) {}

    std::size_t rule_count() const override { return 2; }
    std::vector<std::string> rule_names() const override { return {"eq_neu", "one2one"}; }
    void features(const FactorSubset& factor, std::span<const EntityId> labels,
                  std::span<double> out) const override;

private:
    const CandidateTable& candidates_;
};

// Probabilistic PARIS indicator for a single (entity, candidate) pair under a
// point assignment of the neighbours. In [0, 1 - 1e-12].
double paris_indicator(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                       const RelationStats& stats, EntityId e, EntityId candidate,
                       std::span<const EntityId> assignment);

// AvoidConf indicators (g1, g2) for a candidate given the factor anchored at e.
std::pair<double, double> avoidconf_indicators(const FactorSubset& factor,
                                               const CandidateTable& candidates, EntityId e,
                                               EntityId candidate,
                                               std::span<const EntityId> assignment);

// l(y_F) = exp(sum_k phi_k g_k + phi0)
double local_compatibility(const RuleWeights& weights, std::span<const double> indicators);

// Per-rule feature totals over every factor containing e, with y_e := candidate
// and the other labels read from `assignment`.
void feature_totals(const FactorGraph& fg, const RuleSet& rules, EntityId e, EntityId candidate,
                    std::span<const EntityId> assignment, std::span<double> out);

// phi . G(e, candidate) for each candidate; phi0 deliberately excluded (it
// cancels in the conditional, and excluding it keeps the invariance exact).
std::vector<double> conditional_scores(const FactorGraph& fg, const RuleSet& rules,
                                       const RuleWeights& weights, EntityId e,
                                       std::span<const EntityId> candidates,
                                       std::span<const EntityId> assignment);

// Truncated conditional over the candidate list: gamma * softmax(scores),
// computed in log space.
std::vector<double> conditional_distribution(const FactorGraph& fg, const RuleSet& rules,
                                             const RuleWeights& weights, EntityId e,
                                             std::span<const EntityId> candidates, double gamma,
                                             std::span<const EntityId> assignment);

// Exact conditional over the whole target set by enumerating every joint
// assignment of the unlabelled block (the desk-scale home of the partition
// function). Guarded to num_targets^|unlabelled| <= 1e6.
struct BruteForceResult {
    std::vector<double> conditional;  // over all target entities
    double z;                         // partition function of the instance
};

BruteForceResult brute_force_conditional(const FactorGraph& fg, const RuleSet& rules,
                                         const RuleWeights& weights, std::size_t num_targets,
                                         std::span<const EntityId> assignment,
                                         std::span<const EntityId> unlabelled, EntityId e);

}  // namespace emea
