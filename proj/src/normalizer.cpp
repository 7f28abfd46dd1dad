#include "emea/normalizer.hpp"

#include <algorithm>
#include <cmath>

#include "emea/errors.hpp"
#include "emea/parallel.hpp"

namespace emea {

EntityId BeliefTable::argmax(EntityId e) const {
    const auto& row = rows[e];
    EntityId best = -1;
    double best_p = -1.0;
    for (const BeliefEntry& b : row) {
        if (b.prob > best_p || (b.prob == best_p && best >= 0 && b.target < best)) {
            best_p = b.prob;
            best = b.target;
        }
    }
    return best;
}

double BeliefTable::prob_of(EntityId e, EntityId target) const {
    for (const BeliefEntry& b : rows[e])
        if (b.target == target) return b.prob;
    return 0.0;
}

namespace {

// Features and temperature-scaled logits for one row.
void row_logits(const NormalizerParams& params, std::span<const double> sims,
                std::vector<double>& logits) {
    double max_sim = -INFINITY;
    for (double s : sims) {
        if (!std::isfinite(s)) throw DataError("non-finite similarity in normalizer input");
        max_sim = std::max(max_sim, s);
    }
    const double inv_tau = std::exp(-params.rho);
    logits.resize(sims.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
        const double d = max_sim - sims[i];
        logits[i] = (params.omega1 * sims[i] + params.omega2 * d + params.omega0) * inv_tau;
    }
}

void softmax_inplace(std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) {
        x = std::exp(x - m);
        sum += x;
    }
    for (double& x : v) x /= sum;
}

}  // namespace

std::vector<double> normalize_row(const NormalizerParams& params, std::span<const double> sims) {
    if (sims.empty()) throw DataError("normalizer input row is empty");
    std::vector<double> out;
    row_logits(params, sims, out);
    softmax_inplace(out);
    return out;
}

BeliefTable build_beliefs(const NormalizerParams& params, const EmbeddingTable& emb,
                          const CandidateTable& candidates) {
    const std::size_t ns = emb.num_source();
    BeliefTable table;
    table.rows.resize(ns);
    table.gamma.assign(ns, 0.0);
    parallel_for(ns, [&](std::size_t e) {
        const auto sims = similarity_row(emb, static_cast<EntityId>(e));
        const auto probs = normalize_row(params, sims);
        const auto& row = candidates.row(static_cast<EntityId>(e));
        auto& beliefs = table.rows[e];
        beliefs.reserve(row.size());
        double gamma = 0.0;
        for (const Candidate& c : row) {
            beliefs.push_back({c.target, probs[c.target]});
            gamma += probs[c.target];
        }
        table.gamma[e] = gamma;
    });
    return table;
}

BeliefTable build_beliefs_from_rows(const NormalizerParams& params, const CandidateTable& imported,
                                    int k) {
    BeliefTable table;
    table.rows.resize(imported.rows.size());
    table.gamma.assign(imported.rows.size(), 0.0);
    for (std::size_t e = 0; e < imported.rows.size(); ++e) {
        const auto& row = imported.rows[e];
        if (row.empty()) continue;
        std::vector<double> sims(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) sims[i] = row[i].similarity;
        const auto probs = normalize_row(params, sims);
        const std::size_t keep = k > 0 ? std::min<std::size_t>(k, row.size()) : row.size();
        auto& beliefs = table.rows[e];
        double gamma = 0.0;
        for (std::size_t i = 0; i < keep; ++i) {  // rows arrive canonically sorted
            beliefs.push_back({row[i].target, probs[i]});
            gamma += probs[i];
        }
        table.gamma[e] = gamma;
    }
    return table;
}

NormalizerGradient normalizer_loss_gradient(const NormalizerParams& params,
                                            std::span<const LabelledRow> rows) {
    if (rows.empty()) throw DataError("normalizer fit needs at least one labelled row");
    NormalizerGradient g{0.0, 0.0, 0.0, 0.0, 0.0};
    const double inv_tau = std::exp(-params.rho);
    std::vector<double> logits, probs;
    for (const LabelledRow& row : rows) {
        if (row.truth < 0 || static_cast<std::size_t>(row.truth) >= row.sims.size())
            throw DataError("true target missing from its similarity row");
        row_logits(params, row.sims, logits);
        probs = logits;
        softmax_inplace(probs);
        const double p_true = std::max(probs[row.truth], 1e-300);
        g.loss -= std::log(p_true);
        const double max_sim = *std::max_element(row.sims.begin(), row.sims.end());
        for (std::size_t i = 0; i < row.sims.size(); ++i) {
            const double resid = probs[i] - (static_cast<EntityId>(i) == row.truth ? 1.0 : 0.0);
            g.d_omega1 += resid * row.sims[i] * inv_tau;
            g.d_omega2 += resid * (max_sim - row.sims[i]) * inv_tau;
            g.d_omega0 += resid * inv_tau;
            g.d_rho -= resid * logits[i];
        }
    }
    return g;
}

NormalizerParams fit_normalizer(const NormalizerParams& init, std::span<const LabelledRow> rows,
                                int steps, double learning_rate) {
    NormalizerParams params = init;
    double lr = learning_rate;
    double loss = normalizer_loss_gradient(params, rows).loss;
    for (int step = 0; step < steps && lr > 0.0; ++step) {
        const NormalizerGradient g = normalizer_loss_gradient(params, rows);
        NormalizerParams next = params;
        next.omega1 -= lr * g.d_omega1;
        next.omega2 -= lr * g.d_omega2;
        next.omega0 -= lr * g.d_omega0;
        next.rho -= lr * g.d_rho;
        const double next_loss = normalizer_loss_gradient(next, rows).loss;
        if (!std::isfinite(next_loss) || next_loss > loss) {
            lr *= 0.5;  // reject and retry smaller
            continue;
        }
        params = next;
        loss = next_loss;
    }
    return params;
}

}  // namespace emea
