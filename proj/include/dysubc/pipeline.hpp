// pipeline.hpp -- whole-experiment orchestration: split, train-graph
// construction, subgraph sampling, training, and evaluation. Val/test edges
// are invisible during representation learning; only the earliest 75% of
// events form the sampled graph.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dysubc/eval.hpp"
#include "dysubc/sampler.hpp"
#include "dysubc/temporal_graph.hpp"
#include "dysubc/trainer.hpp"

namespace dysubc {

// Per-dataset state reusable across seeds and variants. The train graph is
// seed-free (the 75% boundary is a pure time cut), so subgraph caches can be
// shared by every run on the dataset.
struct ExperimentContext {
    ParsedEvents data;
    TemporalGraph full_graph;
    TemporalGraph train_graph;
    SplitFractions fractions;

    static ExperimentContext from_events(ParsedEvents events, SplitFractions fr = {}) {
        ExperimentContext ctx;
        ctx.data = std::move(events);
        ctx.fractions = fr;
        ctx.full_graph = build_graph(ctx.data.events, ctx.data.n);
        const EdgeSplit boundary = temporal_split(ctx.data.events, fr, /*seed=*/0);
        std::vector<TemporalEvent> train_events;
        train_events.reserve(boundary.train_pos.size());
        for (const auto& e : boundary.train_pos) train_events.push_back({e.u, e.v, e.t});
        ctx.train_graph = build_graph(train_events, ctx.data.n);
        return ctx;
    }

    EdgeSplit make_split(std::uint64_t seed) const {
        EdgeSplit split = temporal_split(data.events, fractions, seed);
        attach_negatives(split, full_graph, seed);
        return split;
    }

    std::vector<TemporalSubgraph> sample_all(const SamplerConfig& cfg, int threads) const {
        std::vector<TemporalSubgraph> subs(train_graph.n);
        parallel_for(static_cast<std::size_t>(train_graph.n), threads,
                     [&](std::size_t i) { subs[i] = sample_subgraph(train_graph, static_cast<int>(i), cfg); });
        return subs;
    }

    SubgraphCacheKey cache_key(const SamplerConfig& cfg) const {
        SubgraphCacheKey key;
        key.dataset_hash = data.content_hash();
        key.k = cfg.k;
        key.alpha = cfg.alpha;
        key.structure_only = cfg.structure_only;
        return key;
    }
};

struct ExperimentResult {
    EvalReport report;
    FitResult fit;
    EdgeSplit split;
};

// One full run: split with this seed, train under the variant's toggles, and
// score link prediction on the test split. `subs` may carry a presampled
// cache matching the variant's sampler mode; otherwise sampling runs here.
inline ExperimentResult run_experiment(const ExperimentContext& ctx, TrainConfig cfg,
                                       const Variant& variant, std::uint64_t seed,
                                       const std::vector<TemporalSubgraph>* subs = nullptr,
                                       const EpochLogFn& log = nullptr) {
    cfg.seed = seed;
    apply_variant(cfg, variant);

    SamplerConfig scfg;
    scfg.k = cfg.k;
    scfg.alpha = cfg.alpha;
    scfg.structure_only = variant.structure_only_sampling;

    std::vector<TemporalSubgraph> local;
    if (!subs) {
        local = ctx.sample_all(scfg, cfg.threads);
        subs = &local;
    }

    ExperimentResult out;
    out.split = ctx.make_split(seed);

    ValScoreFn val_score;
    if (cfg.early_stop) {
        const EdgeSplit* split_ptr = &out.split;
        const TemporalGraph* full = &ctx.full_graph;
        val_score = [split_ptr, full, seed](const Matrix& emb) {
            std::vector<double> scores;
            std::vector<int> labels;
            const LogRegModel probe = [&] {
                std::vector<Vec> x;
                std::vector<int> y;
                for (const auto& e : split_ptr->train_pos) {
                    x.push_back(edge_feature(Vec(emb.row(e.u), emb.row(e.u) + emb.cols),
                                             Vec(emb.row(e.v), emb.row(e.v) + emb.cols)));
                    y.push_back(1);
                }
                const auto negs = sample_negatives(*full, split_ptr->train_pos.size(),
                                                   derive_seed(seed, seed_tag::train_negatives));
                for (const auto& [u, v] : negs) {
                    x.push_back(edge_feature(Vec(emb.row(u), emb.row(u) + emb.cols),
                                             Vec(emb.row(v), emb.row(v) + emb.cols)));
                    y.push_back(0);
                }
                return fit_logreg(x, y, 1e-4, 100);
            }();
            for (const auto& e : split_ptr->val_pos) {
                scores.push_back(probe.predict(edge_feature(Vec(emb.row(e.u), emb.row(e.u) + emb.cols),
                                                            Vec(emb.row(e.v), emb.row(e.v) + emb.cols))));
                labels.push_back(1);
            }
            for (const auto& [u, v] : split_ptr->val_neg) {
                scores.push_back(probe.predict(edge_feature(Vec(emb.row(u), emb.row(u) + emb.cols),
                                                            Vec(emb.row(v), emb.row(v) + emb.cols))));
                labels.push_back(0);
            }
            return auc_score(scores, labels);
        };
    }

    out.fit = fit(ctx.train_graph, *subs, cfg, val_score, log);
    out.report = run_link_prediction(ctx.full_graph, out.fit.embeddings, out.split, seed);
    out.report.variant = variant.label;
    return out;
}

// Variant x seed matrix of independent runs, subgraph caches shared per
// sampler mode.
inline std::vector<EvalReport> run_ablation(const ExperimentContext& ctx, const TrainConfig& base,
                                            const std::vector<std::string>& variant_labels,
                                            const std::vector<std::uint64_t>& seeds,
                                            const EpochLogFn& log = nullptr) {
    std::vector<Variant> variants;
    for (const auto& label : variant_labels) variants.push_back(parse_variant(label));

    std::map<bool, std::vector<TemporalSubgraph>> sub_cache;  // by structure_only mode
    std::vector<EvalReport> reports;
    for (const auto& variant : variants) {
        SamplerConfig scfg;
        scfg.k = base.k;
        scfg.alpha = base.alpha;
        scfg.structure_only = variant.structure_only_sampling;
        auto it = sub_cache.find(scfg.structure_only);
        if (it == sub_cache.end())
            it = sub_cache.emplace(scfg.structure_only, ctx.sample_all(scfg, base.threads)).first;
        for (std::uint64_t seed : seeds) {
            auto result = run_experiment(ctx, base, variant, seed, &it->second, log);
            reports.push_back(result.report);
        }
    }
    return reports;
}

struct SummaryStats {
    double mean_auc = 0.0, std_auc = 0.0;
    double mean_acc = 0.0, std_acc = 0.0;
    std::size_t runs = 0;
};

inline SummaryStats summarize(const std::vector<EvalReport>& reports) {
    SummaryStats s;
    s.runs = reports.size();
    if (reports.empty()) return s;
    for (const auto& r : reports) {
        s.mean_auc += r.auc;
        s.mean_acc += r.accuracy;
    }
    s.mean_auc /= static_cast<double>(s.runs);
    s.mean_acc /= static_cast<double>(s.runs);
    if (s.runs > 1) {
        double va = 0.0, vc = 0.0;
        for (const auto& r : reports) {
            va += (r.auc - s.mean_auc) * (r.auc - s.mean_auc);
            vc += (r.accuracy - s.mean_acc) * (r.accuracy - s.mean_acc);
        }
        s.std_auc = std::sqrt(va / static_cast<double>(s.runs - 1));
        s.std_acc = std::sqrt(vc / static_cast<double>(s.runs - 1));
    }
    return s;
}

}  // namespace dysubc
