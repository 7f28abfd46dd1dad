#include "emea/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "emea/errors.hpp"
#include "emea/parallel.hpp"
#include "emea/rng.hpp"

namespace emea {

namespace {

void normalize_rows(std::vector<double>& table, int dim) {
    for (std::size_t off = 0; off < table.size(); off += dim) {
        double sq = 0.0;
        for (int d = 0; d < dim; ++d) sq += table[off + d] * table[off + d];
        if (sq < 1e-24) continue;
        const double inv = 1.0 / std::sqrt(sq);
        for (int d = 0; d < dim; ++d) table[off + d] *= inv;
    }
}

void random_unit_rows(std::vector<double>& table, std::size_t rows, int dim, Rng& rng) {
    table.resize(rows * dim);
    for (double& v : table) v = rng.normal();
    normalize_rows(table, dim);
}

}  // namespace

BaselineEncoder::BaselineEncoder(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                 EncoderConfig config)
    : kg1_(kg1), kg2_(kg2), config_(config) {
    if (config_.dim < 1 || config_.margin <= 0 || config_.negatives < 1 ||
        config_.learning_rate <= 0 || config_.epochs < 0)
        throw ConfigError("invalid encoder configuration");

    // Joint relation vocabulary: same label, same parameter vector.
    std::unordered_map<std::string, RelationId> joint;
    auto map_relations = [&](const KnowledgeGraph& kg, std::vector<RelationId>& out) {
        out.resize(kg.num_relations());
        for (std::size_t r = 0; r < kg.num_relations(); ++r) {
            auto [it, inserted] =
                joint.try_emplace(kg.relation_label(static_cast<RelationId>(r)),
                                  static_cast<RelationId>(joint.size()));
            out[r] = it->second;
        }
    };
    map_relations(kg1_, rel_map1_);
    map_relations(kg2_, rel_map2_);
    joint_relations_ = joint.size();
    reinitialize();
}

void BaselineEncoder::reinitialize() {
    Rng init = Rng(config_.rng_seed).fork(0);
    random_unit_rows(emb1_, kg1_.num_entities(), config_.dim, init);
    random_unit_rows(emb2_, kg2_.num_entities(), config_.dim, init);
    rel_.assign(joint_relations_ * config_.dim, 0.0);
    for (double& v : rel_) v = init.normal() / std::sqrt(config_.dim);
    epoch_losses_.clear();
    epoch_counter_ = 0;
}

void BaselineEncoder::train(const LinkList& seeds, const LinkList& extra_pairs, int epochs) {
    if (seeds.empty()) throw ConfigError("encoder training requires non-empty seed links");
    {
        std::unordered_set<EntityId> seed_sources;
        for (const auto& [s, t] : seeds) seed_sources.insert(s);
        for (const auto& [s, t] : extra_pairs)
            if (seed_sources.count(s))
                throw ConfigError("extra pairs must not repeat seed sources");
    }
    if (epochs < 0) epochs = config_.epochs;
    const int dim = config_.dim;
    const double lr = config_.learning_rate;

    std::vector<double> delta(dim);
    auto dist = [&](const double* a, const double* r, const double* b) {
        double sq = 0.0;
        for (int d = 0; d < dim; ++d) {
            delta[d] = a[d] + r[d] - b[d];
            sq += delta[d] * delta[d];
        }
        return std::sqrt(sq);
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng rng = Rng(config_.rng_seed).fork(1000 + epoch_counter_++);
        double loss = 0.0;

        auto run_triples = [&](const KnowledgeGraph& kg, std::vector<double>& emb,
                               const std::vector<RelationId>& rel_map) {
            const std::size_t nent = kg.num_entities();
            std::vector<double> grad_pos(dim), grad_neg(dim);
            for (const Triple& tr : kg.triples()) {
                double* h = emb.data() + static_cast<std::size_t>(tr.head) * dim;
                double* t = emb.data() + static_cast<std::size_t>(tr.tail) * dim;
                double* r = rel_.data() + static_cast<std::size_t>(rel_map[tr.rel]) * dim;
                for (int j = 0; j < config_.negatives; ++j) {
                    const bool corrupt_head = rng.uniform(2) == 0;
                    const auto other = static_cast<EntityId>(rng.uniform(nent));
                    double* nh = corrupt_head ? emb.data() + static_cast<std::size_t>(other) * dim : h;
                    double* nt = corrupt_head ? t : emb.data() + static_cast<std::size_t>(other) * dim;

                    const double pos = dist(h, r, t);
                    if (pos > 1e-12)
                        for (int d = 0; d < dim; ++d) grad_pos[d] = delta[d] / pos;
                    else
                        std::fill(grad_pos.begin(), grad_pos.end(), 0.0);
                    const double neg = dist(nh, r, nt);
                    if (neg > 1e-12)
                        for (int d = 0; d < dim; ++d) grad_neg[d] = delta[d] / neg;
                    else
                        std::fill(grad_neg.begin(), grad_neg.end(), 0.0);

                    const double violation = config_.margin + pos - neg;
                    if (violation <= 0.0) continue;
                    loss += violation;
                    for (int d = 0; d < dim; ++d) {
                        const double gp = lr * grad_pos[d];
                        const double gn = lr * grad_neg[d];
                        h[d] -= gp;
                        t[d] += gp;
                        r[d] -= gp - gn;
                        nh[d] += gn;
                        nt[d] -= gn;
                    }
                }
            }
        };
        run_triples(kg1_, emb1_, rel_map1_);
        run_triples(kg2_, emb2_, rel_map2_);

        auto pull_together = [&](const LinkList& pairs) {
            for (const auto& [e, ep] : pairs) {
                double* a = emb1_.data() + static_cast<std::size_t>(e) * dim;
                double* b = emb2_.data() + static_cast<std::size_t>(ep) * dim;
                for (int d = 0; d < dim; ++d) {
                    const double diff = a[d] - b[d];
                    loss += diff * diff;
                    a[d] -= lr * 2.0 * diff;
                    b[d] += lr * 2.0 * diff;
                }
            }
        };
        pull_together(seeds);
        pull_together(extra_pairs);

        normalize_rows(emb1_, dim);
        normalize_rows(emb2_, dim);
        if (!std::isfinite(loss)) throw NumericError("encoder loss diverged to non-finite");
        epoch_losses_.push_back(loss);
    }
}

EmbeddingTable BaselineEncoder::embeddings() const {
    EmbeddingTable out;
    out.dim = config_.dim;
    out.source = emb1_;
    out.target = emb2_;
    return out;
}

EmbeddingTable train_baseline_encoder(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                      const LinkList& seeds, const EncoderConfig& config,
                                      const LinkList& extra_pairs) {
    BaselineEncoder enc(kg1, kg2, config);
    enc.train(seeds, extra_pairs);
    return enc.embeddings();
}

std::vector<double> similarity_row(const EmbeddingTable& emb, EntityId source) {
    const std::size_t nt = emb.num_target();
    std::vector<double> row(nt);
    const auto src = emb.source_vec(source);
    for (std::size_t j = 0; j < nt; ++j) {
        const double* tgt = emb.target.data() + j * emb.dim;
        double dot = 0.0;
        for (int d = 0; d < emb.dim; ++d) dot += src[d] * tgt[d];
        row[j] = dot;
    }
    return row;
}

namespace {

// Canonical candidate order: similarity descending, target id ascending.
bool candidate_before(const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.target < b.target;
}

}  // namespace

CandidateTable build_candidate_table(const EmbeddingTable& emb, int k) {
    if (k < 1) throw ConfigError("candidate count K must be at least 1");
    const std::size_t ns = emb.num_source();
    const std::size_t nt = emb.num_target();
    CandidateTable table;
    table.k = k;
    table.rows.resize(ns);
    const std::size_t keep = std::min<std::size_t>(k, nt);
    parallel_for(ns, [&](std::size_t e) {
        const auto row = similarity_row(emb, static_cast<EntityId>(e));
        std::vector<Candidate> cands(nt);
        for (std::size_t j = 0; j < nt; ++j)
            cands[j] = {static_cast<EntityId>(j), row[j]};
        std::partial_sort(cands.begin(), cands.begin() + keep, cands.end(), candidate_before);
        cands.resize(keep);
        table.rows[e] = std::move(cands);
    });
    return table;
}

CandidateTable import_candidate_table(const std::filesystem::path& path,
                                      const KnowledgeGraph& source, const KnowledgeGraph& target,
                                      int max_k) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open candidate dump: " + path.string());
    CandidateTable table;
    table.rows.resize(source.num_entities());
    std::unordered_set<std::uint64_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos || line.find('\t', tab2 + 1) != std::string::npos)
            throw ParseError("expected 'source<TAB>target<TAB>similarity'", lineno);
        const std::string src_label = line.substr(0, tab1);
        const std::string tgt_label = line.substr(tab1 + 1, tab2 - tab1 - 1);
        const std::string sim_text = line.substr(tab2 + 1);
        const EntityId s = source.find_entity(src_label);
        if (s < 0) throw DataError("unknown source entity '" + src_label + "' in candidate dump");
        const EntityId t = target.find_entity(tgt_label);
        if (t < 0) throw DataError("unknown target entity '" + tgt_label + "' in candidate dump");
        std::size_t consumed = 0;
        double sim = 0.0;
        try {
            sim = std::stod(sim_text, &consumed);
        } catch (const std::exception&) {
            throw ParseError("similarity '" + sim_text + "' is not a number", lineno);
        }
        if (consumed != sim_text.size() || !std::isfinite(sim))
            throw ParseError("similarity '" + sim_text + "' is not a finite number", lineno);
        const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) |
                                  static_cast<std::uint32_t>(t);
        if (!seen.insert(key).second)
            throw DataError("duplicate candidate pair '" + src_label + "' -> '" + tgt_label + "'");
        table.rows[s].push_back({t, sim});
    }
    std::size_t longest = 0;
    for (auto& row : table.rows) {
        std::sort(row.begin(), row.end(), candidate_before);
        if (max_k > 0 && row.size() > static_cast<std::size_t>(max_k))
            row.resize(max_k);
        longest = std::max(longest, row.size());
    }
    table.k = max_k > 0 ? max_k : static_cast<int>(longest);
    return table;
}

void save_embeddings(const EmbeddingTable& emb, const KnowledgeGraph& kg1,
                     const KnowledgeGraph& kg2, const std::filesystem::path& dir) {
    auto dump = [&](const std::vector<double>& table, const KnowledgeGraph& kg,
                    const std::filesystem::path& file) {
        std::ofstream out(file);
        if (!out) throw DataError("cannot write embeddings: " + file.string());
        char buf[32];
        for (std::size_t e = 0; e * emb.dim < table.size(); ++e) {
            out << kg.entity_label(static_cast<EntityId>(e));
            for (int d = 0; d < emb.dim; ++d) {
                std::snprintf(buf, sizeof buf, "%.17g", table[e * emb.dim + d]);
                out << '\t' << buf;
            }
            out << '\n';
        }
    };
    dump(emb.source, kg1, dir / "embeddings_1.tsv");
    dump(emb.target, kg2, dir / "embeddings_2.tsv");
}

EmbeddingTable load_embeddings(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                               const std::filesystem::path& dir) {
    EmbeddingTable emb;
    auto slurp = [&](const KnowledgeGraph& kg, std::vector<double>& table,
                     const std::filesystem::path& file) {
        std::ifstream in(file);
        if (!in) throw DataError("cannot open embeddings: " + file.string());
        std::string line;
        std::size_t lineno = 0;
        std::vector<std::vector<double>> rows(kg.num_entities());
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::size_t tab = line.find('\t');
            if (tab == std::string::npos) throw ParseError("missing embedding values", lineno);
            const EntityId e = kg.find_entity(line.substr(0, tab));
            if (e < 0) throw DataError("unknown entity in embeddings file: " + line.substr(0, tab));
            std::vector<double> vec;
            while (tab != std::string::npos) {
                const std::size_t next = line.find('\t', tab + 1);
                const std::string field = line.substr(tab + 1, next == std::string::npos
                                                               ? std::string::npos
                                                               : next - tab - 1);
                try {
                    vec.push_back(std::stod(field));
                } catch (const std::exception&) {
                    throw ParseError("bad embedding value '" + field + "'", lineno);
                }
                tab = next;
            }
            if (emb.dim == 0) emb.dim = static_cast<int>(vec.size());
            if (static_cast<int>(vec.size()) != emb.dim)
                throw ParseError("inconsistent embedding dimension", lineno);
            rows[e] = std::move(vec);
        }
        table.assign(kg.num_entities() * emb.dim, 0.0);
        for (std::size_t e = 0; e < rows.size(); ++e) {
            if (rows[e].empty())
                throw DataError("embeddings file misses entity " +
                                kg.entity_label(static_cast<EntityId>(e)));
            std::copy(rows[e].begin(), rows[e].end(), table.begin() + e * emb.dim);
        }
    };
    slurp(kg1, emb.source, dir / "embeddings_1.tsv");
    slurp(kg2, emb.target, dir / "embeddings_2.tsv");
    return emb;
}

}  // namespace emea
