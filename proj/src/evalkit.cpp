#include "emea/evalkit.hpp"

#include <unordered_map>

#include "emea/compatibility.hpp"
#include "emea/errors.hpp"
#include "emea/parallel.hpp"

namespace emea {

std::vector<std::size_t> ranking_ranks(const RowProvider& rows, std::size_t num_targets,
                                       const LinkList& test_links) {
    if (test_links.empty()) throw EvalError("no test links to evaluate");
    for (const auto& [e, truth] : test_links)
        if (truth < 0 || static_cast<std::size_t>(truth) >= num_targets)
            throw EvalError("test entity maps outside the target set");
    // Validate coverage on one row up front; workers must not throw.
    if (rows(test_links.front().first).size() != num_targets)
        throw EvalError("similarity rows do not cover the full target set");

    std::vector<std::size_t> ranks(test_links.size(), 0);
    parallel_for(test_links.size(), [&](std::size_t i) {
        const auto [e, truth] = test_links[i];
        const std::vector<double> row = rows(e);
        if (row.size() != num_targets) return;  // flagged below via rank 0
        const double s_true = row[truth];
        std::size_t rank = 1;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] > s_true) ++rank;
            else if (row[j] == s_true && static_cast<EntityId>(j) < truth) ++rank;
        }
        ranks[i] = rank;
    });
    for (std::size_t r : ranks)
        if (r == 0) throw EvalError("similarity rows do not cover the full target set");
    return ranks;
}

MetricReport ranking_metrics(const RowProvider& rows, std::size_t num_targets,
                             const LinkList& test_links) {
    const auto ranks = ranking_ranks(rows, num_targets, test_links);
    MetricReport report;
    report.n = ranks.size();
    for (std::size_t r : ranks) {
        if (r == 1) report.hit1 += 1.0;
        report.mrr += 1.0 / static_cast<double>(r);
        report.mr += static_cast<double>(r);
    }
    report.hit1 /= static_cast<double>(report.n);
    report.mrr /= static_cast<double>(report.n);
    report.mr /= static_cast<double>(report.n);
    return report;
}

MetricReport ranking_metrics(const EmbeddingTable& emb, const LinkList& test_links) {
    return ranking_metrics([&](EntityId e) { return similarity_row(emb, e); }, emb.num_target(),
                           test_links);
}

double conflict_rate(const AlignmentState& state) {
    std::unordered_map<EntityId, int> uses;
    std::size_t total = 0;
    for (const auto& [e, y] : state.labelled) {
        ++uses[y];
        ++total;
    }
    for (const auto& [e, y] : state.assigned) {
        ++uses[y];
        ++total;
    }
    if (total == 0) return 0.0;
    std::size_t conflicted = 0;
    for (const auto& [e, y] : state.labelled)
        if (uses[y] > 1) ++conflicted;
    for (const auto& [e, y] : state.assigned)
        if (uses[y] > 1) ++conflicted;
    return static_cast<double>(conflicted) / static_cast<double>(total);
}

CompatibilityProfile compatibility_profile(const AlignmentState& state, const RelationStats& stats,
                                           const KnowledgeGraph& kg1, const KnowledgeGraph& kg2) {
    std::vector<EntityId> assignment(kg1.num_entities(), -1);
    std::vector<EntityId> entities;
    for (const auto& [e, y] : state.labelled) assignment[e] = y;
    for (const auto& [e, y] : state.assigned) assignment[e] = y;
    for (const auto& [e, y] : state.labelled) entities.push_back(e);
    for (const auto& [e, y] : state.assigned) entities.push_back(e);
    std::sort(entities.begin(), entities.end());

    CompatibilityProfile profile;
    profile.scores.resize(entities.size());
    parallel_for(entities.size(), [&](std::size_t i) {
        const EntityId e = entities[i];
        profile.scores[i] = paris_indicator(kg1, kg2, stats, e, assignment[e], assignment);
    });
    profile.histogram.assign(10, 0);
    for (double s : profile.scores) {
        profile.mean += s;
        auto bucket = static_cast<std::size_t>(s * 10.0);
        if (bucket > 9) bucket = 9;
        ++profile.histogram[bucket];
    }
    if (!profile.scores.empty()) profile.mean /= static_cast<double>(profile.scores.size());
    profile.conflict = conflict_rate(state);
    return profile;
}

}  // namespace emea
