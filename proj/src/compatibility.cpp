#include "emea/compatibility.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "emea/errors.hpp"
#include "emea/normalizer.hpp"

namespace emea {

FactorGraph build_factor_graph(std::vector<FactorSubset> factors, std::size_t num_entities) {
    FactorGraph fg;
    fg.factors = std::move(factors);
    fg.containing.resize(num_entities);
    for (std::uint32_t i = 0; i < fg.factors.size(); ++i) {
        FactorSubset& f = fg.factors[i];
        std::sort(f.members.begin(), f.members.end());
        f.members.erase(std::unique(f.members.begin(), f.members.end()), f.members.end());
        if (!std::binary_search(f.members.begin(), f.members.end(), f.anchor))
            throw DataError("factor subset does not contain its anchor");
        for (EntityId m : f.members) {
            if (m < 0 || static_cast<std::size_t>(m) >= num_entities)
                throw DataError("factor member out of entity bounds");
            fg.containing[m].push_back(i);
        }
    }
    fg.blankets.resize(num_entities);
    for (std::size_t e = 0; e < num_entities; ++e) {
        auto& mb = fg.blankets[e];
        for (std::uint32_t fi : fg.containing[e])
            for (EntityId m : fg.factors[fi].members)
                if (m != static_cast<EntityId>(e)) mb.push_back(m);
        std::sort(mb.begin(), mb.end());
        mb.erase(std::unique(mb.begin(), mb.end()), mb.end());
    }
    return fg;
}

std::vector<FactorSubset> build_paris_factors(const KnowledgeGraph& kg) {
    std::vector<FactorSubset> factors(kg.num_entities());
    for (std::size_t e = 0; e < kg.num_entities(); ++e) {
        FactorSubset& f = factors[e];
        f.anchor = static_cast<EntityId>(e);
        f.members.push_back(f.anchor);
        for (const Incidence& inc : kg.incident(f.anchor)) {
            const Triple& t = kg.triples()[inc.triple];
            f.members.push_back(inc.as_head ? t.tail : t.head);
        }
    }
    return factors;
}

std::vector<FactorSubset> build_avoidconf_factors(const EmbeddingTable& emb, int n) {
    if (n < 1) throw ConfigError("AvoidConf neighbourhood N must be at least 1");
    const std::size_t ns = emb.num_source();
    std::vector<FactorSubset> factors(ns);
    for (std::size_t e = 0; e < ns; ++e) {
        const auto self = emb.source_vec(static_cast<EntityId>(e));
        std::vector<Candidate> others;
        others.reserve(ns - 1);
        for (std::size_t j = 0; j < ns; ++j) {
            if (j == e) continue;
            const double* v = emb.source.data() + j * emb.dim;
            double dot = 0.0;
            for (int d = 0; d < emb.dim; ++d) dot += self[d] * v[d];
            others.push_back({static_cast<EntityId>(j), dot});
        }
        const std::size_t keep = std::min<std::size_t>(n, others.size());
        std::partial_sort(others.begin(), others.begin() + keep, others.end(),
                          [](const Candidate& a, const Candidate& b) {
                              if (a.similarity != b.similarity) return a.similarity > b.similarity;
                              return a.target < b.target;
                          });
        FactorSubset& f = factors[e];
        f.anchor = static_cast<EntityId>(e);
        f.members.push_back(f.anchor);
        for (std::size_t i = 0; i < keep; ++i) f.members.push_back(others[i].target);
    }
    return factors;
}

namespace {

constexpr double kIndicatorCeiling = 1.0 - 1e-12;

// Shared core of the PARIS probability. Neighbour evidence arrives through a
// callback so the hard (point assignment) and soft (belief rows) modes share
// the statement matching.
template <typename NeighbourEvidence>
double paris_probability(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                         const RelationStats& stats, EntityId e, EntityId y_e,
                         NeighbourEvidence&& evidence) {
    if (y_e < 0) return 0.0;
    double product = 1.0;
    for (const Incidence& inc : kg1.incident(e)) {
        const Triple& t = kg1.triples()[inc.triple];
        const RelationId r = t.rel;
        const EntityId n = inc.as_head ? t.tail : t.head;
        evidence(n, [&](EntityId n_prime, double q) {
            if (n_prime < 0 || q <= 0.0) return;
            const auto& rels2 = inc.as_head ? kg2.relations_between(y_e, n_prime)
                                            : kg2.relations_between(n_prime, y_e);
            // Statement orientation decides which functionality applies: the
            // inverse functionality of a reversed statement is fun of the
            // forward relation.
            const double f1 = inc.as_head ? stats.kg1.inv_fun[r] : stats.kg1.fun[r];
            for (RelationId rp : rels2) {
                const double f2 = inc.as_head ? stats.kg2.inv_fun[rp] : stats.kg2.fun[rp];
                product *= (1.0 - stats.sub.backward(rp, r) * f1 * q) *
                           (1.0 - stats.sub.forward(r, rp) * f2 * q);
            }
        });
    }
    const double g = 1.0 - product;
    return std::clamp(g, 0.0, kIndicatorCeiling);
}

}  // namespace

double paris_indicator(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                       const RelationStats& stats, EntityId e, EntityId candidate,
                       std::span<const EntityId> assignment) {
    return paris_probability(kg1, kg2, stats, e, candidate, [&](EntityId n, auto&& emit) {
        if (n == e) {
            emit(candidate, 1.0);  // self loop: the neighbour is the entity itself
            return;
        }
        emit(static_cast<std::size_t>(n) < assignment.size() ? assignment[n] : -1, 1.0);
    });
}

ParisRuleSet::ParisRuleSet(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                           const RelationStats& stats, const BeliefTable* soft_beliefs)
    : kg1_(kg1), kg2_(kg2), stats_(stats), soft_beliefs_(soft_beliefs) {}

void ParisRuleSet::features(const FactorSubset& factor, std::span<const EntityId> labels,
                            std::span<double> out) const {
    const EntityId anchor = factor.anchor;
    EntityId y_anchor = -1;
    for (std::size_t i = 0; i < factor.members.size(); ++i)
        if (factor.members[i] == anchor) y_anchor = labels[i];
    if (y_anchor < 0) {
        out[0] = 0.0;
        return;
    }
    auto member_label = [&](EntityId n) -> EntityId {
        for (std::size_t i = 0; i < factor.members.size(); ++i)
            if (factor.members[i] == n) return labels[i];
        return -1;
    };
    if (soft_beliefs_ != nullptr) {
        out[0] = paris_probability(kg1_, kg2_, stats_, anchor, y_anchor,
                                   [&](EntityId n, auto&& emit) {
                                       if (n == anchor) {
                                           emit(y_anchor, 1.0);
                                           return;
                                       }
                                       if (static_cast<std::size_t>(n) < soft_beliefs_->rows.size())
                                           for (const BeliefEntry& b : soft_beliefs_->rows[n])
                                               emit(b.target, b.prob);
                                   });
        return;
    }
    out[0] = paris_probability(kg1_, kg2_, stats_, anchor, y_anchor,
                               [&](EntityId n, auto&& emit) {
                                   emit(n == anchor ? y_anchor : member_label(n), 1.0);
                               });
}

void AvoidConfRuleSet::features(const FactorSubset& factor, std::span<const EntityId> labels,
                                std::span<double> out) const {
    EntityId y_anchor = -1;
    std::size_t anchor_pos = 0;
    for (std::size_t i = 0; i < factor.members.size(); ++i)
        if (factor.members[i] == factor.anchor) {
            y_anchor = labels[i];
            anchor_pos = i;
        }
    if (y_anchor < 0) {
        out[0] = out[1] = 0.0;
        return;
    }
    out[0] = candidates_.top1(factor.anchor) == y_anchor ? 1.0 : 0.0;
    double unique = 1.0;
    for (std::size_t i = 0; i < factor.members.size(); ++i) {
        if (i == anchor_pos) continue;
        if (labels[i] == y_anchor) {
            unique = 0.0;
            break;
        }
    }
    out[1] = unique;
}

std::pair<double, double> avoidconf_indicators(const FactorSubset& factor,
                                               const CandidateTable& candidates, EntityId e,
                                               EntityId candidate,
                                               std::span<const EntityId> assignment) {
    AvoidConfRuleSet rules(candidates);
    std::vector<EntityId> labels(factor.members.size());
    for (std::size_t i = 0; i < factor.members.size(); ++i) {
        const EntityId m = factor.members[i];
        labels[i] = m == e ? candidate
                           : (static_cast<std::size_t>(m) < assignment.size() ? assignment[m] : -1);
    }
    double out[2];
    rules.features(factor, labels, out);
    return {out[0], out[1]};
}

double local_compatibility(const RuleWeights& weights, std::span<const double> indicators) {
    double score = weights.phi0;
    for (std::size_t k = 0; k < indicators.size(); ++k) score += weights.phi[k] * indicators[k];
    return std::exp(score);
}

void feature_totals(const FactorGraph& fg, const RuleSet& rules, EntityId e, EntityId candidate,
                    std::span<const EntityId> assignment, std::span<double> out) {
    const std::size_t nk = rules.rule_count();
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<EntityId> labels;
    std::vector<double> g(nk);
    for (std::uint32_t fi : fg.containing[e]) {
        const FactorSubset& f = fg.factors[fi];
        labels.resize(f.members.size());
        for (std::size_t i = 0; i < f.members.size(); ++i) {
            const EntityId m = f.members[i];
            labels[i] = m == e
                            ? candidate
                            : (static_cast<std::size_t>(m) < assignment.size() ? assignment[m] : -1);
        }
        rules.features(f, labels, g);
        for (std::size_t k = 0; k < nk; ++k) out[k] += g[k];
    }
}

std::vector<double> conditional_scores(const FactorGraph& fg, const RuleSet& rules,
                                       const RuleWeights& weights, EntityId e,
                                       std::span<const EntityId> candidates,
                                       std::span<const EntityId> assignment) {
    const std::size_t nk = rules.rule_count();
    std::vector<double> g(nk);
    std::vector<double> scores(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        feature_totals(fg, rules, e, candidates[c], assignment, g);
        double s = 0.0;
        for (std::size_t k = 0; k < nk; ++k) s += weights.phi[k] * g[k];
        scores[c] = s;
    }
    return scores;
}

namespace {

double log_sum_exp(std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += std::exp(x - m);
    return m + std::log(sum);
}

}  // namespace

std::vector<double> conditional_distribution(const FactorGraph& fg, const RuleSet& rules,
                                             const RuleWeights& weights, EntityId e,
                                             std::span<const EntityId> candidates, double gamma,
                                             std::span<const EntityId> assignment) {
    if (candidates.empty()) throw DataError("conditional over an empty candidate list");
    std::vector<double> scores = conditional_scores(fg, rules, weights, e, candidates, assignment);
    const double lse = log_sum_exp(scores);
    for (double& s : scores) s = gamma * std::exp(s - lse);
    return scores;
}

BruteForceResult brute_force_conditional(const FactorGraph& fg, const RuleSet& rules,
                                         const RuleWeights& weights, std::size_t num_targets,
                                         std::span<const EntityId> assignment,
                                         std::span<const EntityId> unlabelled, EntityId e) {
    double states = 1.0;
    for (std::size_t i = 0; i < unlabelled.size(); ++i) {
        states *= static_cast<double>(num_targets);
        if (states > 1e6) throw Error("brute-force oracle state space exceeds 1e6");
    }

    const std::size_t nk = rules.rule_count();
    std::vector<double> g(nk);
    std::vector<EntityId> labels;
    auto joint_weight = [&](std::span<const EntityId> y) {
        double total = 0.0;
        for (const FactorSubset& f : fg.factors) {
            labels.resize(f.members.size());
            for (std::size_t i = 0; i < f.members.size(); ++i) labels[i] = y[f.members[i]];
            rules.features(f, labels, g);
            total += weights.phi0;
            for (std::size_t k = 0; k < nk; ++k) total += weights.phi[k] * g[k];
        }
        return std::exp(total);
    };

    std::vector<EntityId> y(assignment.begin(), assignment.end());

    // Partition function: sum over every joint assignment of the unlabelled block.
    double z = 0.0;
    std::vector<std::size_t> odo(unlabelled.size(), 0);
    while (true) {
        for (std::size_t i = 0; i < unlabelled.size(); ++i)
            y[unlabelled[i]] = static_cast<EntityId>(odo[i]);
        z += joint_weight(y);
        std::size_t pos = 0;
        while (pos < odo.size() && ++odo[pos] == num_targets) odo[pos++] = 0;
        if (pos == odo.size()) break;
        if (odo.empty()) break;
    }

    // Conditional of y_e with every other label pinned to `assignment`.
    y.assign(assignment.begin(), assignment.end());
    BruteForceResult result;
    result.z = z;
    result.conditional.resize(num_targets);
    double total = 0.0;
    for (std::size_t v = 0; v < num_targets; ++v) {
        y[e] = static_cast<EntityId>(v);
        result.conditional[v] = joint_weight(y);
        total += result.conditional[v];
    }
    for (double& p : result.conditional) p /= total;
    return result;
}

}  // namespace emea
