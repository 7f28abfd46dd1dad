#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "emea/kg.hpp"
#include "emea/similarity.hpp"

namespace emea {

// Affine feature map + temperature softmax turning raw similarities into
// candidate probabilities. tau = exp(rho) keeps the temperature positive under
// unconstrained descent.
struct NormalizerParams {
    double omega1 = 1.0;
    double omega2 = -1.0;
    double omega0 = 0.0;
    double rho = 0.0;

    double tau() const { return std::exp(rho); }
};

struct BeliefEntry {
    EntityId target;
    double prob;
};

// Per source entity: probabilities of its candidates plus the retained mass
// gamma_e (full-row softmax mass falling on the candidate list).
struct BeliefTable {
    std::vector<std::vector<BeliefEntry>> rows;  // indexed by source entity id
    std::vector<double> gamma;

    // Highest-probability candidate, ties broken by ascending target id.
    // -1 on an empty row.
    EntityId argmax(EntityId e) const;
    // Probability of a specific target in e's row (0 when absent).
    double prob_of(EntityId e, EntityId target) const;
};

// Softmax with temperature over the full feature row. Throws on non-finite input.
std::vector<double> normalize_row(const NormalizerParams& params, std::span<const double> sims);

// Full-row normalization for every source entity; probabilities kept for the
// candidate list, gamma records the retained mass.
BeliefTable build_beliefs(const NormalizerParams& params, const EmbeddingTable& emb,
                          const CandidateTable& candidates);

// Variant for imported similarity dumps: the imported row is the visible
// universe, softmax runs over all of it, the kept list is truncated to k.
BeliefTable build_beliefs_from_rows(const NormalizerParams& params, const CandidateTable& imported,
                                    int k);

// One labelled training example: a full similarity row and the true target id
// (index into the row).
struct LabelledRow {
    std::vector<double> sims;
    EntityId truth;
};

// Cross-entropy of the true targets under the normalized rows, with its
// analytic gradient over (omega1, omega2, omega0, rho).
struct NormalizerGradient {
    double loss;
    double d_omega1, d_omega2, d_omega0, d_rho;
};

NormalizerGradient normalizer_loss_gradient(const NormalizerParams& params,
                                            std::span<const LabelledRow> rows);

// Gradient descent on the cross-entropy; never accepts a step that increases
// the loss, so the returned parameters score <= the initial ones.
NormalizerParams fit_normalizer(const NormalizerParams& init, std::span<const LabelledRow> rows,
                                int steps, double learning_rate);

}  // namespace emea
