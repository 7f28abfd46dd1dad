#pragma once

#include <functional>
#include <vector>

#include "emea/kg.hpp"
#include "emea/paris_stats.hpp"
#include "emea/similarity.hpp"

namespace emea {

struct MetricReport {
    double hit1 = 0.0;
    double mrr = 0.0;
    double mr = 0.0;
    std::size_t n = 0;
};

// Supplies the full similarity row of a source entity. Rows must cover the
// whole target set; ranking over a truncated row is not meaningful.
using RowProvider = std::function<std::vector<double>(EntityId)>;

// Rank of the true counterpart within the full target ranking, ties broken by
// ascending target id.
MetricReport ranking_metrics(const RowProvider& rows, std::size_t num_targets,
                             const LinkList& test_links);
MetricReport ranking_metrics(const EmbeddingTable& emb, const LinkList& test_links);

// Per-entity ranks (same order as test_links), for external significance tooling.
std::vector<std::size_t> ranking_ranks(const RowProvider& rows, std::size_t num_targets,
                                       const LinkList& test_links);

// Fraction of entities in L ∪ U whose assigned target is shared with at least
// one other source entity.
double conflict_rate(const AlignmentState& state);

struct CompatibilityProfile {
    std::vector<double> scores;       // PARIS indicator at each entity's assigned label
    double mean = 0.0;
    std::vector<std::size_t> histogram;  // 10 decile buckets over [0, 1]
    double conflict = 0.0;
};

CompatibilityProfile compatibility_profile(const AlignmentState& state, const RelationStats& stats,
                                           const KnowledgeGraph& kg1, const KnowledgeGraph& kg2);

}  // namespace emea
