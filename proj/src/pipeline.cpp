#include "emea/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "emea/errors.hpp"
#include "emea/rng.hpp"

namespace emea {

using Json = nlohmann::ordered_json;

namespace {

std::uint64_t fnv1a_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for hashing: " + path.string());
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    try {
        return Json::parse(in);
    } catch (const std::exception& ex) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + ex.what());
    }
}

}  // namespace

RunConfig parse_run_config(const std::filesystem::path& path) {
    const Json j = load_json(path);
    RunConfig cfg;
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };
    try {
        cfg.kg1_path = resolve(j.at("kg1").get<std::string>());
        cfg.kg2_path = resolve(j.at("kg2").get<std::string>());
        if (j.contains("links")) cfg.links_path = resolve(j["links"].get<std::string>());
        if (j.contains("train_links")) cfg.train_links_path = resolve(j["train_links"].get<std::string>());
        if (j.contains("valid_links")) cfg.valid_links_path = resolve(j["valid_links"].get<std::string>());
        if (j.contains("test_links")) cfg.test_links_path = resolve(j["test_links"].get<std::string>());
        if (j.contains("similarity_dump")) cfg.similarity_dump = resolve(j["similarity_dump"].get<std::string>());
        cfg.seed_fraction = j.value("seed_fraction", cfg.seed_fraction);
        cfg.validation_count = j.value("validation_count", cfg.validation_count);
        const std::string rules = j.value("rules", std::string("paris"));
        if (rules == "paris")
            cfg.rules = RuleSelect::Paris;
        else if (rules == "avoidconf")
            cfg.rules = RuleSelect::AvoidConf;
        else
            throw ConfigError("rules must be 'paris' or 'avoidconf', got '" + rules + "'");
        if (j.contains("encoder")) {
            const Json& e = j["encoder"];
            cfg.encoder.dim = e.value("dim", cfg.encoder.dim);
            cfg.encoder.margin = e.value("margin", cfg.encoder.margin);
            cfg.encoder.negatives = e.value("negatives", cfg.encoder.negatives);
            cfg.encoder.epochs = e.value("epochs", cfg.encoder.epochs);
            cfg.encoder.learning_rate = e.value("learning_rate", cfg.encoder.learning_rate);
        }
        if (j.contains("normalizer")) {
            const Json& n = j["normalizer"];
            cfg.normalizer.init.omega1 = n.value("omega1", cfg.normalizer.init.omega1);
            cfg.normalizer.init.omega2 = n.value("omega2", cfg.normalizer.init.omega2);
            cfg.normalizer.init.omega0 = n.value("omega0", cfg.normalizer.init.omega0);
            cfg.normalizer.init.rho = n.value("rho", cfg.normalizer.init.rho);
            cfg.normalizer.steps = n.value("steps", cfg.normalizer.steps);
            cfg.normalizer.learning_rate = n.value("learning_rate", cfg.normalizer.learning_rate);
        }
        if (j.contains("em")) {
            const Json& m = j["em"];
            cfg.em.k = m.value("k", cfg.em.k);
            cfg.em.n = m.value("n", cfg.em.n);
            cfg.em.iterations = m.value("iterations", cfg.em.iterations);
            const std::string scope = m.value("pl_scope", std::string("all"));
            if (scope == "all")
                cfg.em.pl_scope = PlScope::All;
            else if (scope == "labelled")
                cfg.em.pl_scope = PlScope::Labelled;
            else
                throw ConfigError("pl_scope must be 'all' or 'labelled'");
            cfg.em.m_step_steps = m.value("m_step_steps", cfg.em.m_step_steps);
            cfg.em.m_step_lr = m.value("m_step_lr", cfg.em.m_step_lr);
            cfg.em.patience = m.value("patience", cfg.em.patience);
            cfg.em.sample_pseudo_labels = m.value("sample_pseudo_labels", cfg.em.sample_pseudo_labels);
            cfg.em.soft_paris = m.value("soft_paris", cfg.em.soft_paris);
            cfg.em.retrain_from_scratch = m.value("retrain_from_scratch", cfg.em.retrain_from_scratch);
        }
        if (!j.contains("out_dir")) throw ConfigError("config misses 'out_dir'");
        cfg.out_dir = resolve(j["out_dir"].get<std::string>());
        cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
        cfg.em.rng_seed = cfg.rng_seed;
        cfg.encoder.rng_seed = cfg.rng_seed;
    } catch (const Json::exception& ex) {
        throw ConfigError("bad run config " + path.string() + ": " + ex.what());
    }
    if (cfg.seed_fraction <= 0.0 || cfg.seed_fraction >= 1.0)
        throw ConfigError("seed_fraction must lie in (0, 1)");
    return cfg;
}

LinkSplit split_links(const LinkList& links, double fraction, int validation_count,
                      std::uint64_t rng_seed) {
    if (links.empty()) throw DataError("cannot split an empty link list");
    if (fraction <= 0.0 || fraction >= 1.0) throw ConfigError("split fraction must lie in (0, 1)");
    const std::size_t n = links.size();
    auto train_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    train_n = std::max<std::size_t>(1, std::min(train_n, n - 1));
    std::size_t valid_n = std::min<std::size_t>(validation_count, std::max<std::size_t>(1, n / 10));
    if (train_n + valid_n >= n) valid_n = std::max<std::size_t>(0, (n - train_n) / 2);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng(rng_seed).fork(4);
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform(i + 1)]);

    LinkSplit split;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& link = links[order[i]];
        if (i < train_n)
            split.train.push_back(link);
        else if (i < train_n + valid_n)
            split.valid.push_back(link);
        else
            split.test.push_back(link);
    }
    return split;
}

namespace {

Json metric_json(const MetricReport& m) {
    return Json{{"hit1", m.hit1}, {"mrr", m.mrr}, {"mr", m.mr}, {"n", m.n}};
}

Json phi_json(const RuleWeights& w, RuleSelect rules) {
    Json out;
    if (rules == RuleSelect::Paris) {
        out["paris"] = w.phi.empty() ? 0.0 : w.phi[0];
    } else {
        out["eq_neu"] = w.phi.size() > 0 ? w.phi[0] : 0.0;
        out["one2one"] = w.phi.size() > 1 ? w.phi[1] : 0.0;
    }
    out["phi0"] = w.phi0;
    return out;
}

Json omega_json(const NormalizerParams& p) {
    return Json{{"omega1", p.omega1}, {"omega2", p.omega2}, {"omega0", p.omega0}, {"rho", p.rho}};
}

Json config_echo(const RunConfig& cfg) {
    Json j;
    j["kg1"] = cfg.kg1_path.string();
    j["kg2"] = cfg.kg2_path.string();
    if (!cfg.links_path.empty()) j["links"] = cfg.links_path.string();
    if (!cfg.train_links_path.empty()) j["train_links"] = cfg.train_links_path.string();
    if (!cfg.valid_links_path.empty()) j["valid_links"] = cfg.valid_links_path.string();
    if (!cfg.test_links_path.empty()) j["test_links"] = cfg.test_links_path.string();
    if (!cfg.similarity_dump.empty()) j["similarity_dump"] = cfg.similarity_dump.string();
    j["seed_fraction"] = cfg.seed_fraction;
    j["validation_count"] = cfg.validation_count;
    j["rules"] = cfg.rules == RuleSelect::Paris ? "paris" : "avoidconf";
    j["encoder"] = Json{{"dim", cfg.encoder.dim},
                        {"margin", cfg.encoder.margin},
                        {"negatives", cfg.encoder.negatives},
                        {"epochs", cfg.encoder.epochs},
                        {"learning_rate", cfg.encoder.learning_rate}};
    j["normalizer"] = Json{{"omega1", cfg.normalizer.init.omega1},
                           {"omega2", cfg.normalizer.init.omega2},
                           {"omega0", cfg.normalizer.init.omega0},
                           {"rho", cfg.normalizer.init.rho},
                           {"steps", cfg.normalizer.steps},
                           {"learning_rate", cfg.normalizer.learning_rate}};
    j["em"] = Json{{"k", cfg.em.k},
                   {"n", cfg.em.n},
                   {"iterations", cfg.em.iterations},
                   {"pl_scope", cfg.em.pl_scope == PlScope::All ? "all" : "labelled"},
                   {"m_step_steps", cfg.em.m_step_steps},
                   {"m_step_lr", cfg.em.m_step_lr},
                   {"patience", cfg.em.patience},
                   {"sample_pseudo_labels", cfg.em.sample_pseudo_labels},
                   {"soft_paris", cfg.em.soft_paris},
                   {"retrain_from_scratch", cfg.em.retrain_from_scratch}};
    j["out_dir"] = cfg.out_dir.string();
    j["rng_seed"] = cfg.rng_seed;
    return j;
}

void write_assignment(const AlignmentState& state, const KnowledgeGraph& kg1,
                      const KnowledgeGraph& kg2, const std::filesystem::path& path) {
    std::vector<std::pair<EntityId, EntityId>> rows;
    for (const auto& [e, y] : state.labelled) rows.emplace_back(e, y);
    for (const auto& [e, y] : state.assigned) rows.emplace_back(e, y);
    std::sort(rows.begin(), rows.end());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write assignment: " + path.string());
    for (const auto& [e, y] : rows)
        out << kg1.entity_label(e) << '\t' << kg2.entity_label(y) << '\n';
}

void write_candidates(const CandidateTable& table, const KnowledgeGraph& kg1,
                      const KnowledgeGraph& kg2, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write candidates: " + path.string());
    char buf[32];
    for (std::size_t e = 0; e < table.rows.size(); ++e) {
        for (const Candidate& c : table.rows[e]) {
            std::snprintf(buf, sizeof buf, "%.17g", c.similarity);
            out << kg1.entity_label(static_cast<EntityId>(e)) << '\t'
                << kg2.entity_label(c.target) << '\t' << buf << '\n';
        }
    }
}

}  // namespace

RunArtifacts execute_run(const RunConfig& cfg) {
    const KnowledgeGraph kg1 = load_kg(cfg.kg1_path);
    const KnowledgeGraph kg2 = load_kg(cfg.kg2_path);

    Json inputs;
    auto note_input = [&](const char* key, const std::filesystem::path& p) {
        if (p.empty()) return;
        inputs[key] = Json{{"path", p.string()}, {"fnv1a", hex64(fnv1a_file(p))}};
    };
    note_input("kg1", cfg.kg1_path);
    note_input("kg2", cfg.kg2_path);
    note_input("links", cfg.links_path);
    note_input("train_links", cfg.train_links_path);
    note_input("valid_links", cfg.valid_links_path);
    note_input("test_links", cfg.test_links_path);
    note_input("similarity_dump", cfg.similarity_dump);

    LinkList train, valid, test;
    Json split_info;
    if (!cfg.links_path.empty()) {
        const LinkList all = load_links(cfg.links_path, kg1, kg2);
        LinkSplit split = split_links(all, cfg.seed_fraction, cfg.validation_count, cfg.rng_seed);
        train = std::move(split.train);
        valid = std::move(split.valid);
        test = std::move(split.test);
        split_info = Json{{"train", train.size()},
                          {"valid", valid.size()},
                          {"test", test.size()},
                          {"fraction", cfg.seed_fraction}};
    } else {
        if (cfg.train_links_path.empty())
            throw ConfigError("config needs either 'links' or explicit 'train_links'");
        train = load_links(cfg.train_links_path, kg1, kg2);
        if (!cfg.valid_links_path.empty()) valid = load_links(cfg.valid_links_path, kg1, kg2);
        if (!cfg.test_links_path.empty()) test = load_links(cfg.test_links_path, kg1, kg2);
        std::unordered_set<EntityId> seen;
        for (const auto& [e, y] : train) seen.insert(e);
        for (const auto& [e, y] : valid)
            if (!seen.insert(e).second) throw ConfigError("valid links overlap train links");
        for (const auto& [e, y] : test)
            if (!seen.insert(e).second) throw ConfigError("test links overlap train/valid links");
    }

    std::filesystem::create_directories(cfg.out_dir);

    RunArtifacts artifacts;
    const bool imported = !cfg.similarity_dump.empty();
    if (imported) {
        const CandidateTable dump = import_candidate_table(cfg.similarity_dump, kg1, kg2);
        artifacts.state = run_emea_imported(kg1, kg2, dump, train, valid, test, cfg.normalizer,
                                            cfg.em, cfg.rules);
    } else {
        artifacts.state = run_emea(kg1, kg2, train, valid, test, cfg.encoder, cfg.normalizer,
                                   cfg.em, cfg.rules);
    }
    EmRunState& run = artifacts.state;

    Json manifest;
    manifest["tool"] = "emea";
    manifest["config"] = config_echo(cfg);
    manifest["inputs"] = inputs;
    if (!split_info.is_null()) manifest["split"] = split_info;

    Json iterations = Json::array();
    Json timings = Json::array();
    for (const IterationRecord& rec : run.history) {
        Json it;
        it["iteration"] = rec.iteration;
        it["neural_valid"] = metric_json(rec.neural_valid);
        if (rec.neural_test.n > 0) it["neural_test"] = metric_json(rec.neural_test);
        if (rec.compat_hit1_valid >= 0.0) it["compat_hit1_valid"] = rec.compat_hit1_valid;
        if (rec.compat_hit1_test >= 0.0) it["compat_hit1_test"] = rec.compat_hit1_test;
        it["conflict_rate"] = rec.conflict;
        it["mean_compatibility"] = rec.mean_compatibility;
        if (rec.iteration > 0) it["pl_objective"] = rec.pl_objective_value;
        it["phi"] = phi_json(rec.phi, cfg.rules);
        it["omega"] = omega_json(rec.omega);
        iterations.push_back(std::move(it));
        timings.push_back(Json{{"iteration", rec.iteration},
                               {"encoder_s", rec.seconds_encoder},
                               {"normalizer_s", rec.seconds_normalizer},
                               {"m_step_s", rec.seconds_m_step},
                               {"e_step_s", rec.seconds_e_step}});
    }
    manifest["iterations"] = std::move(iterations);
    manifest["final"] = Json{{"phi", phi_json(run.weights, cfg.rules)},
                             {"omega", omega_json(run.normalizer)},
                             {"early_stopped", run.early_stopped},
                             {"iterations_run", run.history.size() - 1}};

    Json artifact_index;
    if (!imported) {
        save_embeddings(run.embeddings, kg1, kg2, cfg.out_dir);
        artifact_index["embeddings_1"] = "embeddings_1.tsv";
        artifact_index["embeddings_2"] = "embeddings_2.tsv";
    }
    write_assignment(run.assignment, kg1, kg2, cfg.out_dir / "assignment.tsv");
    artifact_index["assignment"] = "assignment.tsv";
    write_candidates(run.candidates, kg1, kg2, cfg.out_dir / "candidates.tsv");
    artifact_index["candidates"] = "candidates.tsv";
    manifest["artifacts"] = std::move(artifact_index);
    manifest["timings"] = std::move(timings);  // excluded from reproducibility comparisons

    artifacts.manifest_path = cfg.out_dir / "manifest.json";
    std::ofstream out(artifacts.manifest_path);
    if (!out) throw DataError("cannot write manifest: " + artifacts.manifest_path.string());
    out << manifest.dump(2) << '\n';
    return artifacts;
}

namespace {

int cmd_synth(const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
    const Json j = load_json(config_path);
    SyntheticPairConfig cfg;
    cfg.entity_count = j.value("entity_count", cfg.entity_count);
    cfg.relation_count = j.value("relation_count", cfg.relation_count);
    cfg.mean_degree = j.value("mean_degree", cfg.mean_degree);
    cfg.edge_dropout = j.value("edge_dropout", cfg.edge_dropout);
    cfg.relation_rename = j.value("relation_rename", cfg.relation_rename);
    cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
    const SyntheticPair pair = generate_synthetic_pair(cfg);
    std::filesystem::create_directories(out_dir);
    save_kg(pair.kg1, out_dir / "rel_triples_1");
    save_kg(pair.kg2, out_dir / "rel_triples_2");
    save_links(pair.truth, pair.kg1, pair.kg2, out_dir / "truth_links");
    std::cout << "wrote " << pair.kg1.triples().size() << " + " << pair.kg2.triples().size()
              << " triples, " << pair.truth.size() << " truth links to " << out_dir.string()
              << "\n";
    return 0;
}

int cmd_stats(const std::filesystem::path& kg1_path, const std::filesystem::path& kg2_path,
              const std::filesystem::path& links_path, const std::filesystem::path& out_path) {
    const KnowledgeGraph kg1 = load_kg(kg1_path);
    const KnowledgeGraph kg2 = load_kg(kg2_path);
    const LinkList links = load_links(links_path, kg1, kg2);
    AlignmentState state;
    for (const auto& [e, y] : links) state.labelled[e] = y;
    const RelationStats stats = compute_relation_stats(kg1, kg2, state);

    Json out;
    auto fun_json = [](const KnowledgeGraph& kg, const std::vector<double>& v) {
        Json j;
        for (std::size_t r = 0; r < v.size(); ++r)
            j[kg.relation_label(static_cast<RelationId>(r))] = v[r];
        return j;
    };
    out["fun"] = Json{{"kg1", fun_json(kg1, stats.kg1.fun)}, {"kg2", fun_json(kg2, stats.kg2.fun)}};
    out["inv_fun"] = Json{{"kg1", fun_json(kg1, stats.kg1.inv_fun)},
                          {"kg2", fun_json(kg2, stats.kg2.inv_fun)}};
    Json fwd = Json::array();
    for (const auto& [r, rp, v] : stats.sub.forward_entries())
        fwd.push_back(Json::array({kg1.relation_label(r), kg2.relation_label(rp), v}));
    Json bwd = Json::array();
    for (const auto& [rp, r, v] : stats.sub.backward_entries())
        bwd.push_back(Json::array({kg2.relation_label(rp), kg1.relation_label(r), v}));
    out["sub"] = Json{{"kg1_to_kg2", std::move(fwd)}, {"kg2_to_kg1", std::move(bwd)}};

    std::ofstream f(out_path);
    if (!f) throw DataError("cannot write stats: " + out_path.string());
    f << out.dump(2) << '\n';
    return 0;
}

int cmd_train_baseline(const std::filesystem::path& kg1_path,
                       const std::filesystem::path& kg2_path,
                       const std::filesystem::path& train_path, const EncoderConfig& cfg,
                       const std::filesystem::path& out_dir) {
    const KnowledgeGraph kg1 = load_kg(kg1_path);
    const KnowledgeGraph kg2 = load_kg(kg2_path);
    const LinkList seeds = load_links(train_path, kg1, kg2);
    const EmbeddingTable emb = train_baseline_encoder(kg1, kg2, seeds, cfg);
    std::filesystem::create_directories(out_dir);
    save_embeddings(emb, kg1, kg2, out_dir);
    std::cout << "wrote embeddings for " << emb.num_source() << " + " << emb.num_target()
              << " entities to " << out_dir.string() << "\n";
    return 0;
}

int cmd_candidates(const std::filesystem::path& kg1_path, const std::filesystem::path& kg2_path,
                   const std::filesystem::path& emb_dir, int k,
                   const std::filesystem::path& out_path) {
    const KnowledgeGraph kg1 = load_kg(kg1_path);
    const KnowledgeGraph kg2 = load_kg(kg2_path);
    const EmbeddingTable emb = load_embeddings(kg1, kg2, emb_dir);
    const CandidateTable table = build_candidate_table(emb, k);
    write_candidates(table, kg1, kg2, out_path);
    return 0;
}

int cmd_eval(const std::filesystem::path& manifest_path, const std::filesystem::path& test_path,
             bool diagnostics, const std::filesystem::path& out_path) {
    const Json manifest = load_json(manifest_path);
    const std::filesystem::path run_dir = manifest_path.parent_path();
    const KnowledgeGraph kg1 = load_kg(manifest.at("config").at("kg1").get<std::string>());
    const KnowledgeGraph kg2 = load_kg(manifest.at("config").at("kg2").get<std::string>());
    const LinkList test = load_links(test_path, kg1, kg2);

    const Json& artifact_index = manifest.at("artifacts");
    if (!artifact_index.contains("embeddings_1"))
        throw EvalError("manifest has no embedding artifacts to rank with");
    const EmbeddingTable emb = load_embeddings(kg1, kg2, run_dir);

    const auto ranks = ranking_ranks([&](EntityId e) { return similarity_row(emb, e); },
                                     emb.num_target(), test);
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

    Json out;
    out["hit1"] = report.hit1;
    out["mrr"] = report.mrr;
    out["mr"] = report.mr;
    out["n"] = report.n;
    out["ranks"] = ranks;

    if (diagnostics) {
        const LinkList predicted =
            load_links(run_dir / artifact_index.at("assignment").get<std::string>(), kg1, kg2);
        AlignmentState state;
        std::unordered_set<EntityId> seed_sources;
        if (manifest["config"].contains("train_links")) {
            const LinkList seeds = load_links(
                manifest["config"]["train_links"].get<std::string>(), kg1, kg2);
            for (const auto& [e, y] : seeds) seed_sources.insert(e);
        }
        for (const auto& [e, y] : predicted) {
            if (seed_sources.count(e))
                state.labelled[e] = y;
            else
                state.assigned[e] = y;
        }
        const RelationStats stats = compute_relation_stats(kg1, kg2, state);
        const CompatibilityProfile profile = compatibility_profile(state, stats, kg1, kg2);
        out["diagnostics"] = Json{{"conflict_rate", profile.conflict},
                                  {"mean_compatibility", profile.mean},
                                  {"histogram", profile.histogram}};
    }

    const std::string text = out.dump(2);
    if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw DataError("cannot write metrics: " + out_path.string());
        f << text << '\n';
    }
    std::cout << text << "\n";
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"EMEA: compatibility-guided training for entity alignment"};
    app.require_subcommand(1);

    std::string config_path, out_path, kg1_path, kg2_path, links_path, emb_dir, pred_path,
        test_path, train_path;
    bool diagnostics = false;
    int k = 10;
    EncoderConfig enc;

    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark pair");
    synth->add_option("--config", config_path, "synthetic pair config (JSON)")->required();
    synth->add_option("--out", out_path, "output directory")->required();

    auto* stats = app.add_subcommand("stats", "relation functionality and subsumption statistics");
    stats->add_option("--kg1", kg1_path)->required();
    stats->add_option("--kg2", kg2_path)->required();
    stats->add_option("--links", links_path, "current correspondence (TSV)")->required();
    stats->add_option("--out", out_path, "stats JSON path")->required();

    auto* train = app.add_subcommand("train-baseline", "train the translational baseline encoder");
    train->add_option("--kg1", kg1_path)->required();
    train->add_option("--kg2", kg2_path)->required();
    train->add_option("--train", train_path, "seed links (TSV)")->required();
    train->add_option("--out", out_path, "output directory")->required();
    train->add_option("--dim", enc.dim);
    train->add_option("--margin", enc.margin);
    train->add_option("--negatives", enc.negatives);
    train->add_option("--epochs", enc.epochs);
    train->add_option("--learning-rate", enc.learning_rate);
    train->add_option("--seed", enc.rng_seed);

    auto* cands = app.add_subcommand("candidates", "top-K candidate table from embeddings");
    cands->add_option("--kg1", kg1_path)->required();
    cands->add_option("--kg2", kg2_path)->required();
    cands->add_option("--emb", emb_dir, "directory with embeddings_{1,2}.tsv")->required();
    cands->add_option("--k", k, "candidates per source entity");
    cands->add_option("--out", out_path, "candidate TSV path")->required();

    auto* runcmd = app.add_subcommand("run", "full EM training run");
    runcmd->add_option("--config", config_path, "run config (JSON)")->required();

    auto* evalcmd = app.add_subcommand("eval", "ranking metrics for a finished run");
    evalcmd->add_option("--pred", pred_path, "manifest.json of the run")->required();
    evalcmd->add_option("--test", test_path, "test links (TSV)")->required();
    evalcmd->add_flag("--diagnostics", diagnostics, "add the compatibility profile");
    evalcmd->add_option("--out", out_path, "also write metrics JSON here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);  // prints usage/diagnostic; 0 for --help
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            if (!std::filesystem::exists(config_path)) {
                std::cerr << "config file not found: " << config_path << "\n";
                return 2;
            }
            return cmd_synth(config_path, out_path);
        }
        if (stats->parsed()) return cmd_stats(kg1_path, kg2_path, links_path, out_path);
        if (train->parsed()) return cmd_train_baseline(kg1_path, kg2_path, train_path, enc, out_path);
        if (cands->parsed()) return cmd_candidates(kg1_path, kg2_path, emb_dir, k, out_path);
        if (runcmd->parsed()) {
            if (!std::filesystem::exists(config_path)) {
                std::cerr << "config file not found: " << config_path << "\n";
                return 2;
            }
            const RunConfig cfg = parse_run_config(config_path);
            const RunArtifacts artifacts = execute_run(cfg);
            std::cout << "manifest: " << artifacts.manifest_path.string() << "\n";
            return 0;
        }
        if (evalcmd->parsed()) return cmd_eval(pred_path, test_path, diagnostics, out_path);
    } catch (const Error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "internal error: " << ex.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace emea
