#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "emea/kg.hpp"

namespace emea {

// fun(r) = |distinct heads of r| / |triples of r|, inv_fun(r) the same over
// tails. Relations without triples get 0.
struct FunctionalityTable {
    std::vector<double> fun;
    std::vector<double> inv_fun;
};

FunctionalityTable functionality(const KnowledgeGraph& kg);

// Subsumption evidence between the two relation vocabularies, estimated from
// the current point assignment with add-lambda smoothing:
//   Pr(r <= r') = (m + lambda * p0) / (n + lambda)
// where n counts r-triples whose endpoints are both assigned and m counts
// those mirrored by an r'-triple between the assigned counterparts. Pairs with
// n = 0 evaluate to 0.
class SubrelationTable {
public:
    static constexpr double kLambda = 1.0;
    static constexpr double kPrior = 0.01;

    // Pr(r <= r') for r in kg1, r' in kg2.
    double forward(RelationId r, RelationId rp) const {
        return value(n_fwd_, m_fwd_, r, rp);
    }
    // Pr(r' <= r) for r' in kg2, r in kg1.
    double backward(RelationId rp, RelationId r) const {
        return value(n_bwd_, m_bwd_, rp, r);
    }

    // Pairs with mirrored evidence (m > 0), for serialization.
    std::vector<std::tuple<RelationId, RelationId, double>> forward_entries() const;
    std::vector<std::tuple<RelationId, RelationId, double>> backward_entries() const;

private:
    friend SubrelationTable subrelation_probs(const KnowledgeGraph&, const KnowledgeGraph&,
                                              const AlignmentState&);
    double value(const std::vector<std::int64_t>& n,
                 const std::unordered_map<std::uint64_t, std::int64_t>& m, RelationId a,
                 RelationId b) const;

    std::vector<std::int64_t> n_fwd_;  // per kg1 relation
    std::vector<std::int64_t> n_bwd_;  // per kg2 relation
    std::unordered_map<std::uint64_t, std::int64_t> m_fwd_;
    std::unordered_map<std::uint64_t, std::int64_t> m_bwd_;
};

SubrelationTable subrelation_probs(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                   const AlignmentState& state);

// Everything the PARIS indicator consumes, recomputed at the start of each
// M-step from the freshest assignment.
struct RelationStats {
    FunctionalityTable kg1;
    FunctionalityTable kg2;
    SubrelationTable sub;
};

RelationStats compute_relation_stats(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                     const AlignmentState& state);

}  // namespace emea
