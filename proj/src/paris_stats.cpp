#include "emea/paris_stats.hpp"

#include <algorithm>
#include <unordered_set>

namespace emea {

namespace {

std::uint64_t rel_pair_key(RelationId a, RelationId b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

}  // namespace

FunctionalityTable functionality(const KnowledgeGraph& kg) {
    const std::size_t nr = kg.num_relations();
    std::vector<std::int64_t> count(nr, 0);
    std::vector<std::unordered_set<EntityId>> heads(nr), tails(nr);
    for (const Triple& t : kg.triples()) {
        ++count[t.rel];
        heads[t.rel].insert(t.head);
        tails[t.rel].insert(t.tail);
    }
    FunctionalityTable table;
    table.fun.resize(nr, 0.0);
    table.inv_fun.resize(nr, 0.0);
    for (std::size_t r = 0; r < nr; ++r) {
        if (count[r] == 0) continue;
        table.fun[r] = static_cast<double>(heads[r].size()) / static_cast<double>(count[r]);
        table.inv_fun[r] = static_cast<double>(tails[r].size()) / static_cast<double>(count[r]);
    }
    return table;
}

double SubrelationTable::value(const std::vector<std::int64_t>& n,
                               const std::unordered_map<std::uint64_t, std::int64_t>& m,
                               RelationId a, RelationId b) const {
    if (a < 0 || static_cast<std::size_t>(a) >= n.size() || n[a] == 0) return 0.0;
    auto it = m.find(rel_pair_key(a, b));
    const double mirrored = it == m.end() ? 0.0 : static_cast<double>(it->second);
    return (mirrored + kLambda * kPrior) / (static_cast<double>(n[a]) + kLambda);
}

std::vector<std::tuple<RelationId, RelationId, double>> SubrelationTable::forward_entries() const {
    std::vector<std::tuple<RelationId, RelationId, double>> out;
    out.reserve(m_fwd_.size());
    for (const auto& [key, _] : m_fwd_) {
        const auto a = static_cast<RelationId>(key >> 32);
        const auto b = static_cast<RelationId>(key & 0xffffffffu);
        out.emplace_back(a, b, forward(a, b));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::tuple<RelationId, RelationId, double>> SubrelationTable::backward_entries() const {
    std::vector<std::tuple<RelationId, RelationId, double>> out;
    out.reserve(m_bwd_.size());
    for (const auto& [key, _] : m_bwd_) {
        const auto a = static_cast<RelationId>(key >> 32);
        const auto b = static_cast<RelationId>(key & 0xffffffffu);
        out.emplace_back(a, b, backward(a, b));
    }
    std::sort(out.begin(), out.end());
    return out;
}

SubrelationTable subrelation_probs(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                   const AlignmentState& state) {
    SubrelationTable table;
    table.n_fwd_.assign(kg1.num_relations(), 0);
    table.n_bwd_.assign(kg2.num_relations(), 0);

    // Point assignment as a flat array, plus its preimage for the backward pass.
    std::vector<EntityId> image(kg1.num_entities(), -1);
    std::vector<std::vector<EntityId>> preimage(kg2.num_entities());
    auto record = [&](EntityId e, EntityId y) {
        if (e < 0 || static_cast<std::size_t>(e) >= image.size()) return;
        if (y < 0 || static_cast<std::size_t>(y) >= preimage.size()) return;
        image[e] = y;
        preimage[y].push_back(e);
    };
    for (const auto& [e, y] : state.labelled) record(e, y);
    for (const auto& [e, y] : state.assigned) record(e, y);

    for (const Triple& t : kg1.triples()) {
        const EntityId yh = image[t.head];
        const EntityId yt = image[t.tail];
        if (yh < 0 || yt < 0) continue;
        ++table.n_fwd_[t.rel];
        for (RelationId rp : kg2.relations_between(yh, yt))
            ++table.m_fwd_[rel_pair_key(t.rel, rp)];
    }

    for (const Triple& t : kg2.triples()) {
        const auto& hs = preimage[t.head];
        const auto& ts = preimage[t.tail];
        if (hs.empty() || ts.empty()) continue;
        ++table.n_bwd_[t.rel];
        std::unordered_set<RelationId> mirrored;
        for (EntityId h : hs)
            for (EntityId tl : ts)
                for (RelationId r : kg1.relations_between(h, tl)) mirrored.insert(r);
        for (RelationId r : mirrored) ++table.m_bwd_[rel_pair_key(t.rel, r)];
    }
    return table;
}

RelationStats compute_relation_stats(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                     const AlignmentState& state) {
    return {functionality(kg1), functionality(kg2), subrelation_probs(kg1, kg2, state)};
}

}  // namespace emea
