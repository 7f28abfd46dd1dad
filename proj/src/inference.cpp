#include "emea/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "emea/errors.hpp"
#include "emea/parallel.hpp"
#include "emea/rng.hpp"

namespace emea {

AlignmentState map_assignment(const BeliefTable& beliefs, const LinkList& labelled) {
    AlignmentState state;
    for (const auto& [e, y] : labelled) state.labelled[e] = y;
    for (std::size_t e = 0; e < beliefs.rows.size(); ++e) {
        const auto id = static_cast<EntityId>(e);
        if (state.labelled.count(id)) continue;
        if (beliefs.rows[e].empty())
            throw DataError("entity " + std::to_string(e) + " has no candidates to assign");
        state.assigned[id] = beliefs.argmax(id);
    }
    return state;
}

std::vector<EntityId> flatten_assignment(const AlignmentState& state, std::size_t num_entities) {
    std::vector<EntityId> flat(num_entities, -1);
    for (const auto& [e, y] : state.labelled) flat[e] = y;
    for (const auto& [e, y] : state.assigned) flat[e] = y;
    return flat;
}

FeatureTable build_feature_table(const FactorGraph& fg, const RuleSet& rules,
                                 const BeliefTable& beliefs, const AlignmentState& assignment,
                                 PlScope scope) {
    const std::size_t ns = beliefs.rows.size();
    const std::vector<EntityId> flat = flatten_assignment(assignment, ns);

    std::vector<EntityId> scope_entities;
    if (scope == PlScope::All) {
        scope_entities.resize(ns);
        for (std::size_t e = 0; e < ns; ++e) scope_entities[e] = static_cast<EntityId>(e);
    } else {
        for (const auto& [e, y] : assignment.labelled) scope_entities.push_back(e);
        std::sort(scope_entities.begin(), scope_entities.end());
    }

    FeatureTable table;
    table.rule_count = rules.rule_count();
    table.rows.resize(scope_entities.size());
    const std::size_t nk = table.rule_count;

    // Candidate lists and observed indices are assembled serially so coverage
    // errors surface before the parallel feature pass.
    for (std::size_t i = 0; i < scope_entities.size(); ++i) {
        const EntityId e = scope_entities[i];
        FeatureRow& row = table.rows[i];
        row.entity = e;
        row.gamma = beliefs.gamma[e];
        for (const BeliefEntry& b : beliefs.rows[e]) row.candidates.push_back(b.target);
        const EntityId observed = flat[e];
        if (observed < 0)
            throw DataError("assignment does not cover entity " + std::to_string(e));
        auto it = std::find(row.candidates.begin(), row.candidates.end(), observed);
        if (it == row.candidates.end()) {
            if (!assignment.is_labelled(e))
                throw DataError("assigned target missing from the candidate list of entity " +
                                std::to_string(e));
            row.candidates.push_back(observed);  // ground truth force-included
            it = row.candidates.end() - 1;
        }
        row.observed = static_cast<std::size_t>(it - row.candidates.begin());
        if (row.candidates.empty())
            throw DataError("entity " + std::to_string(e) + " has an empty candidate list");
        if (row.gamma <= 0.0)
            throw DataError("entity " + std::to_string(e) + " retains zero probability mass");
    }

    parallel_for(table.rows.size(), [&](std::size_t i) {
        FeatureRow& row = table.rows[i];
        row.features.assign(row.candidates.size() * nk, 0.0);
        for (std::size_t c = 0; c < row.candidates.size(); ++c)
            feature_totals(fg, rules, row.entity, row.candidates[c], flat,
                           {row.features.data() + c * nk, nk});
    });
    return table;
}

namespace {

double row_log_prob(const RuleWeights& weights, const FeatureRow& row, std::vector<double>& scores) {
    const std::size_t nk = weights.phi.size();
    scores.resize(row.candidates.size());
    for (std::size_t c = 0; c < row.candidates.size(); ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < nk; ++k) s += weights.phi[k] * row.features[c * nk + k];
        scores[c] = s;
    }
    const double m = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += std::exp(s - m);
    const double lse = m + std::log(sum);
    return std::log(row.gamma) + scores[row.observed] - lse;
}

}  // namespace

double pl_objective(const RuleWeights& weights, const FeatureTable& table) {
    double total = 0.0;
    std::vector<double> scores;
    for (const FeatureRow& row : table.rows) total += row_log_prob(weights, row, scores);
    return total;
}

std::vector<double> pl_gradient(const RuleWeights& weights, const FeatureTable& table) {
    const std::size_t nk = weights.phi.size();
    std::vector<double> grad(nk, 0.0);
    std::vector<double> scores;
    for (const FeatureRow& row : table.rows) {
        scores.resize(row.candidates.size());
        for (std::size_t c = 0; c < row.candidates.size(); ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < nk; ++k) s += weights.phi[k] * row.features[c * nk + k];
            scores[c] = s;
        }
        const double m = *std::max_element(scores.begin(), scores.end());
        double sum = 0.0;
        for (double& s : scores) {
            s = std::exp(s - m);
            sum += s;
        }
        // observed minus expected feature counts; the softmax expectation is
        // the correct derivative of log(gamma * softmax) since gamma is
        // constant in phi.
        for (std::size_t k = 0; k < nk; ++k) {
            double expected = 0.0;
            for (std::size_t c = 0; c < row.candidates.size(); ++c)
                expected += scores[c] / sum * row.features[c * nk + k];
            grad[k] += row.features[row.observed * nk + k] - expected;
        }
    }
    return grad;
}

RuleWeights m_step(const RuleWeights& start, const FeatureTable& table, int steps,
                   double learning_rate) {
    RuleWeights weights = start;
    double lr = learning_rate;
    double objective = pl_objective(weights, table);
    if (!std::isfinite(objective)) throw NumericError("pseudo-likelihood objective is non-finite");
    for (int step = 0; step < steps && lr > 0.0; ++step) {
        const std::vector<double> grad = pl_gradient(weights, table);
        RuleWeights next = weights;
        for (std::size_t k = 0; k < next.phi.size(); ++k) next.phi[k] += lr * grad[k];
        double next_objective = pl_objective(next, table);
        if (!std::isfinite(next_objective)) {
            lr *= 0.5;  // one retry at half the step, then abort
            for (std::size_t k = 0; k < next.phi.size(); ++k)
                next.phi[k] = weights.phi[k] + lr * grad[k];
            next_objective = pl_objective(next, table);
            if (!std::isfinite(next_objective))
                throw NumericError("M-step diverged to a non-finite objective");
        }
        if (next_objective < objective) {
            lr *= 0.5;  // reject steps that decrease the objective
            continue;
        }
        weights = next;
        objective = next_objective;
    }
    return weights;
}

BeliefTable e_step(const BeliefTable& beliefs, const RuleWeights& weights, const FactorGraph& fg,
                   const RuleSet& rules, const LinkList& labelled) {
    // One sampled assignment, read-only for the whole pass (single block update).
    const AlignmentState state = map_assignment(beliefs, labelled);
    const std::vector<EntityId> flat = flatten_assignment(state, beliefs.rows.size());

    BeliefTable qstar;
    qstar.rows.resize(beliefs.rows.size());
    qstar.gamma = beliefs.gamma;
    std::vector<char> is_labelled(beliefs.rows.size(), 0);
    for (const auto& [e, y] : labelled) {
        is_labelled[e] = 1;
        qstar.rows[e] = {{y, 1.0}};  // pinned to ground truth
        qstar.gamma[e] = 1.0;
    }
    parallel_for(beliefs.rows.size(), [&](std::size_t e) {
        if (is_labelled[e]) return;
        const auto& row = beliefs.rows[e];
        std::vector<EntityId> cands(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) cands[c] = row[c].target;
        const std::vector<double> probs = conditional_distribution(
            fg, rules, weights, static_cast<EntityId>(e), cands, beliefs.gamma[e], flat);
        auto& out = qstar.rows[e];
        out.resize(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) out[c] = {cands[c], probs[c]};
    });
    return qstar;
}

LinkList pseudo_label(const BeliefTable& qstar, const LinkList& labelled, Rng* sampler) {
    LinkList out = labelled;
    std::vector<char> is_labelled(qstar.rows.size(), 0);
    for (const auto& [e, y] : labelled)
        if (static_cast<std::size_t>(e) < is_labelled.size()) is_labelled[e] = 1;
    for (std::size_t e = 0; e < qstar.rows.size(); ++e) {
        if (is_labelled[e]) continue;
        const auto& row = qstar.rows[e];
        if (row.empty()) throw DataError("q* row empty for entity " + std::to_string(e));
        const auto id = static_cast<EntityId>(e);
        if (sampler == nullptr) {
            out.emplace_back(id, qstar.argmax(id));
            continue;
        }
        double total = 0.0;
        for (const BeliefEntry& b : row) total += b.prob;
        double draw = sampler->uniform_real() * total;
        EntityId picked = row.back().target;
        for (const BeliefEntry& b : row) {
            draw -= b.prob;
            if (draw <= 0.0) {
                picked = b.target;
                break;
            }
        }
        out.emplace_back(id, picked);
    }
    return out;
}

namespace {

double assignment_accuracy(const BeliefTable& beliefs, const LinkList& links) {
    if (links.empty()) return -1.0;
    std::size_t hits = 0;
    for (const auto& [e, truth] : links)
        if (beliefs.argmax(e) == truth) ++hits;
    return static_cast<double>(hits) / static_cast<double>(links.size());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

LabelledRow labelled_row_from_embeddings(const EmbeddingTable& emb, EntityId e, EntityId truth) {
    return {similarity_row(emb, e), truth};
}

}  // namespace

EmRunState run_emea(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2, const LinkList& seeds,
                    const LinkList& validation, const LinkList& test,
                    const EncoderConfig& encoder_config, const NormalizerFitConfig& norm_config,
                    const EmConfig& em_config, RuleSelect rules_kind) {
    if (seeds.empty()) throw ConfigError("run requires non-empty seed links");
    {
        std::unordered_set<EntityId> seed_sources;
        for (const auto& [e, y] : seeds) seed_sources.insert(e);
        for (const auto& [e, y] : validation)
            if (seed_sources.count(e)) throw ConfigError("validation links overlap the seeds");
    }
    if (em_config.k < 1 || em_config.n < 1 || em_config.iterations < 0 ||
        em_config.m_step_steps < 0 || em_config.m_step_lr <= 0)
        throw ConfigError("invalid EM configuration");

    Rng root(em_config.rng_seed);
    EncoderConfig enc_config = encoder_config;
    enc_config.rng_seed = root.fork(1).next_u64();
    Rng label_sampler = root.fork(2);
    Rng phi_init = root.fork(3);

    EmRunState run;
    run.weights.phi0 = 0.0;
    const std::size_t rule_count = rules_kind == RuleSelect::Paris ? 1 : 2;
    run.weights.phi.resize(rule_count);
    for (double& w : run.weights.phi) w = 0.1 * phi_init.normal();

    BaselineEncoder encoder(kg1, kg2, enc_config);

    // Static PARIS factors: the KG structure does not change across iterations.
    FactorGraph paris_fg;
    if (rules_kind == RuleSelect::Paris)
        paris_fg = build_factor_graph(build_paris_factors(kg1), kg1.num_entities());

    // One pass of: fit the normalizer on the seeds, candidates, beliefs.
    auto normalize_phase = [&](IterationRecord& rec) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<LabelledRow> rows;
        rows.reserve(seeds.size());
        for (const auto& [e, y] : seeds)
            rows.push_back(labelled_row_from_embeddings(run.embeddings, e, y));
        run.normalizer = fit_normalizer(norm_config.init, rows, norm_config.steps,
                                        norm_config.learning_rate);
        run.candidates = build_candidate_table(run.embeddings, em_config.k);
        run.beliefs = build_beliefs(run.normalizer, run.embeddings, run.candidates);
        run.assignment = map_assignment(run.beliefs, seeds);
        rec.omega = run.normalizer;
        rec.seconds_normalizer = seconds_since(t0);
    };

    auto record_quality = [&](IterationRecord& rec) {
        if (!validation.empty()) rec.neural_valid = ranking_metrics(run.embeddings, validation);
        if (!test.empty()) rec.neural_test = ranking_metrics(run.embeddings, test);
        rec.conflict = conflict_rate(run.assignment);
        const RelationStats stats = compute_relation_stats(kg1, kg2, run.assignment);
        rec.mean_compatibility =
            compatibility_profile(run.assignment, stats, kg1, kg2).mean;
        rec.phi = run.weights;
    };

    {
        IterationRecord rec;
        rec.iteration = 0;
        const auto t0 = std::chrono::steady_clock::now();
        encoder.train(seeds);
        rec.seconds_encoder = seconds_since(t0);
        run.embeddings = encoder.embeddings();
        normalize_phase(rec);
        record_quality(rec);
        run.history.push_back(std::move(rec));
    }

    double best_valid_hit1 = run.history.front().neural_valid.hit1;
    int stale_iterations = 0;

    for (int iter = 1; iter <= em_config.iterations; ++iter) {
        IterationRecord rec;
        rec.iteration = iter;

        // Rule machinery for this iteration. AvoidConf membership is frozen
        // from the current embeddings; stats from the freshest assignment.
        const RelationStats stats = compute_relation_stats(kg1, kg2, run.assignment);
        FactorGraph avoid_fg;
        const FactorGraph* fg = &paris_fg;
        std::unique_ptr<RuleSet> rules;
        if (rules_kind == RuleSelect::Paris) {
            rules = std::make_unique<ParisRuleSet>(kg1, kg2, stats,
                                                   em_config.soft_paris ? &run.beliefs : nullptr);
        } else {
            avoid_fg = build_factor_graph(build_avoidconf_factors(run.embeddings, em_config.n),
                                          kg1.num_entities());
            fg = &avoid_fg;
            rules = std::make_unique<AvoidConfRuleSet>(run.candidates);
        }

        auto t0 = std::chrono::steady_clock::now();
        const FeatureTable table =
            build_feature_table(*fg, *rules, run.beliefs, run.assignment, em_config.pl_scope);
        run.weights = m_step(run.weights, table, em_config.m_step_steps, em_config.m_step_lr);
        rec.pl_objective_value = pl_objective(run.weights, table);
        rec.seconds_m_step = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        const BeliefTable qstar = e_step(run.beliefs, run.weights, *fg, *rules, seeds);
        rec.seconds_e_step = seconds_since(t0);
        rec.compat_hit1_valid = assignment_accuracy(qstar, validation);
        rec.compat_hit1_test = assignment_accuracy(qstar, test);

        const LinkList training =
            pseudo_label(qstar, seeds, em_config.sample_pseudo_labels ? &label_sampler : nullptr);
        const LinkList extra(training.begin() + static_cast<std::ptrdiff_t>(seeds.size()),
                             training.end());

        t0 = std::chrono::steady_clock::now();
        if (em_config.retrain_from_scratch) encoder.reinitialize();
        encoder.train(seeds, extra);
        rec.seconds_encoder = seconds_since(t0);
        run.embeddings = encoder.embeddings();

        normalize_phase(rec);
        record_quality(rec);
        run.history.push_back(std::move(rec));

        const double hit1 = run.history.back().neural_valid.hit1;
        if (hit1 > best_valid_hit1) {
            best_valid_hit1 = hit1;
            stale_iterations = 0;
        } else if (++stale_iterations >= em_config.patience) {
            run.early_stopped = true;
            break;
        }
    }
    return run;
}

EmRunState run_emea_imported(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                             const CandidateTable& imported, const LinkList& seeds,
                             const LinkList& validation, const LinkList& test,
                             const NormalizerFitConfig& norm_config, const EmConfig& em_config,
                             RuleSelect rules_kind) {
    if (seeds.empty()) throw ConfigError("run requires non-empty seed links");
    if (rules_kind == RuleSelect::AvoidConf)
        throw ConfigError("AvoidConf factors need encoder embeddings; imported similarities only "
                          "support the PARIS rule set");
    for (std::size_t e = 0; e < imported.rows.size(); ++e)
        if (imported.rows[e].empty())
            throw DataError("imported similarities miss source entity " +
                            kg1.entity_label(static_cast<EntityId>(e)));

    EmRunState run;
    run.candidates = imported;
    run.weights.phi.assign(1, 0.0);

    std::vector<LabelledRow> rows;
    for (const auto& [e, y] : seeds) {
        const auto& cand = imported.rows[e];
        LabelledRow row;
        row.truth = -1;
        row.sims.resize(cand.size());
        for (std::size_t i = 0; i < cand.size(); ++i) {
            row.sims[i] = cand[i].similarity;
            if (cand[i].target == y) row.truth = static_cast<EntityId>(i);
        }
        if (row.truth < 0)
            throw DataError("true target of a seed entity is missing from its imported row");
        rows.push_back(std::move(row));
    }
    run.normalizer =
        fit_normalizer(norm_config.init, rows, norm_config.steps, norm_config.learning_rate);
    run.beliefs = build_beliefs_from_rows(run.normalizer, imported, em_config.k);
    run.assignment = map_assignment(run.beliefs, seeds);

    const bool full_rows = [&] {
        for (const auto& row : imported.rows)
            if (row.size() != kg2.num_entities()) return false;
        return true;
    }();
    auto imported_row = [&](EntityId e) {
        std::vector<double> out(kg2.num_entities(), -INFINITY);
        for (const Candidate& c : imported.rows[e]) out[c.target] = c.similarity;
        return out;
    };

    auto record = [&](IterationRecord& rec) {
        if (full_rows && !validation.empty())
            rec.neural_valid = ranking_metrics(imported_row, kg2.num_entities(), validation);
        if (full_rows && !test.empty())
            rec.neural_test = ranking_metrics(imported_row, kg2.num_entities(), test);
        rec.compat_hit1_valid = assignment_accuracy(run.beliefs, validation);
        rec.compat_hit1_test = assignment_accuracy(run.beliefs, test);
        rec.conflict = conflict_rate(run.assignment);
        const RelationStats stats = compute_relation_stats(kg1, kg2, run.assignment);
        rec.mean_compatibility = compatibility_profile(run.assignment, stats, kg1, kg2).mean;
        rec.phi = run.weights;
        rec.omega = run.normalizer;
    };

    {
        IterationRecord rec;
        rec.iteration = 0;
        record(rec);
        run.history.push_back(std::move(rec));
    }

    const FactorGraph fg = build_factor_graph(build_paris_factors(kg1), kg1.num_entities());
    double best = run.history.front().compat_hit1_valid;
    int stale = 0;
    for (int iter = 1; iter <= em_config.iterations; ++iter) {
        IterationRecord rec;
        rec.iteration = iter;

        const RelationStats stats = compute_relation_stats(kg1, kg2, run.assignment);
        ParisRuleSet rules(kg1, kg2, stats, em_config.soft_paris ? &run.beliefs : nullptr);

        auto t0 = std::chrono::steady_clock::now();
        const FeatureTable table =
            build_feature_table(fg, rules, run.beliefs, run.assignment, em_config.pl_scope);
        run.weights = m_step(run.weights, table, em_config.m_step_steps, em_config.m_step_lr);
        rec.pl_objective_value = pl_objective(run.weights, table);
        rec.seconds_m_step = seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        run.beliefs = e_step(run.beliefs, run.weights, fg, rules, seeds);
        rec.seconds_e_step = seconds_since(t0);
        run.assignment = map_assignment(run.beliefs, seeds);

        record(rec);
        run.history.push_back(std::move(rec));
        const double hit1 = run.history.back().compat_hit1_valid;
        if (hit1 > best) {
            best = hit1;
            stale = 0;
        } else if (++stale >= em_config.patience) {
            run.early_stopped = true;
            break;
        }
    }
    return run;
}

}  // namespace emea
