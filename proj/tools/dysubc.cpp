// dysubc -- command-line front end: ingest/sample/train/eval/ablate/sweep/
// export over timestamped edge lists.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dysubc/config.hpp"
#include "dysubc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace dysubc;

namespace {

struct CliOpts {
    std::string config_path;
    std::optional<std::string> data, out, cache, variant, seeds, variants, grid, emb;
    std::optional<long long> seed;
    std::optional<int> k, epochs, dim, batch_size, threads, patience;
    std::optional<double> alpha, beta, lambda, phi, varphi, lr;
    bool deterministic = false;
    bool early_stop = false;
    bool conventional_hinge = false;
    bool erase_time_weights = false;
};

void add_common_options(CLI::App* cmd, CliOpts& o) {
    cmd->add_option("--config", o.config_path, "config file of 'key = value' lines");
    cmd->add_option("--data", o.data, "timestamped edge list (src dst t per line)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--cache", o.cache, "subgraph cache file");
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--seeds", o.seeds, "comma-separated seed list");
    cmd->add_option("--k", o.k, "subgraph size (nodes, incl. center)");
    cmd->add_option("--alpha", o.alpha, "sampler structure/time balance");
    cmd->add_option("--beta", o.beta, "readout influence balance");
    cmd->add_option("--lambda", o.lambda, "temporal loss weight");
    cmd->add_option("--phi", o.phi, "structural margin");
    cmd->add_option("--varphi", o.varphi, "temporal margin");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--dim", o.dim, "embedding dimension");
    cmd->add_option("--batch-size", o.batch_size, "centers per step (0 = full batch)");
    cmd->add_option("--variant", o.variant, "full | -R | -N-R | -S-N-R");
    cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    cmd->add_option("--patience", o.patience, "early-stop patience (epochs)");
    cmd->add_flag("--deterministic", o.deterministic, "single-threaded, bit-reproducible runs");
    cmd->add_flag("--early-stop", o.early_stop, "stop on stalled validation AUC");
    cmd->add_flag("--conventional-hinge", o.conventional_hinge,
                  "use max(margin - gap, 0) instead of the default hinge form");
    cmd->add_flag("--erase-time-weights", o.erase_time_weights,
                  "diagnostic: feed the plain adjacency to the time-weighted encoder");
}

RunConfig resolve_config(const CliOpts& o) {
    RunConfig cfg = load_config(o.config_path);
    if (o.data) cfg.data = *o.data;
    if (o.out) cfg.out = *o.out;
    if (o.cache) cfg.cache = *o.cache;
    if (o.variant) cfg.variant = *o.variant;
    if (o.seed) cfg.seeds = {static_cast<std::uint64_t>(*o.seed)};
    if (o.seeds) apply_config_entry(cfg, "seeds", *o.seeds);
    if (o.threads) cfg.threads = *o.threads;
    if (o.deterministic) cfg.deterministic = true;
    if (o.k) cfg.train.k = *o.k;
    if (o.alpha) cfg.train.alpha = *o.alpha;
    if (o.beta) cfg.train.beta = *o.beta;
    if (o.lambda) cfg.train.lambda = *o.lambda;
    if (o.phi) cfg.train.phi = *o.phi;
    if (o.varphi) cfg.train.varphi = *o.varphi;
    if (o.lr) cfg.train.lr = *o.lr;
    if (o.epochs) cfg.train.epochs = *o.epochs;
    if (o.dim) cfg.train.dim = *o.dim;
    if (o.batch_size) cfg.train.batch_size = *o.batch_size;
    if (o.patience) cfg.train.patience = *o.patience;
    if (o.early_stop) cfg.train.early_stop = true;
    if (o.conventional_hinge) cfg.train.conventional_hinge = true;
    if (o.erase_time_weights) cfg.train.erase_time_weights = true;
    cfg.train.threads = cfg.effective_threads();
    cfg.train.seed = cfg.seed();
    return cfg;
}

RunConfig require_data(const CliOpts& o) {
    RunConfig cfg = resolve_config(o);
    if (cfg.data.empty()) throw std::runtime_error("--data (or a config 'data' entry) is required");
    if (!fs::exists(cfg.data)) throw std::runtime_error("dataset not found: " + cfg.data);
    return cfg;
}

void write_resolved(const RunConfig& cfg) {
    if (cfg.out.empty()) return;
    fs::create_directories(cfg.out);
    save_resolved_config(cfg, (fs::path(cfg.out) / "resolved_config.txt").string());
}

// Loads a matching cache, or samples and (when a path is set) persists it.
std::vector<TemporalSubgraph> obtain_subgraphs(const ExperimentContext& ctx, const RunConfig& cfg,
                                               bool structure_only) {
    SamplerConfig scfg;
    scfg.k = cfg.train.k;
    scfg.alpha = cfg.train.alpha;
    scfg.structure_only = structure_only;
    const SubgraphCacheKey key = ctx.cache_key(scfg);
    std::vector<TemporalSubgraph> subs;
    if (!cfg.cache.empty() && load_subgraph_cache(cfg.cache, key, subs)) {
        std::cerr << "loaded subgraph cache: " << cfg.cache << " (" << subs.size() << " centers)\n";
        return subs;
    }
    subs = ctx.sample_all(scfg, cfg.effective_threads());
    if (!cfg.cache.empty()) {
        save_subgraph_cache(cfg.cache, key, subs);
        std::cerr << "wrote subgraph cache: " << cfg.cache << "\n";
    }
    return subs;
}

EpochLogFn stdout_epoch_log(std::ofstream* file) {
    return [file](const EpochLog& e) {
        char line[256];
        if (e.has_val)
            std::snprintf(line, sizeof(line), "%d\t%.6f\t%.6f\t%.6f\t%.1f\t%.4f", e.epoch, e.loss.total,
                          e.loss.structural, e.loss.temporal, e.elapsed_ms, e.val_score);
        else
            std::snprintf(line, sizeof(line), "%d\t%.6f\t%.6f\t%.6f\t%.1f", e.epoch, e.loss.total,
                          e.loss.structural, e.loss.temporal, e.elapsed_ms);
        std::cout << line << "\n";
        if (file && file->is_open()) *file << line << "\n";
    };
}

int cmd_ingest(const CliOpts& o) {
    RunConfig cfg = require_data(o);
    const ParsedEvents parsed = parse_edge_list(cfg.data);
    const TemporalGraph g = build_graph(parsed.events, parsed.n);
    EdgeSplit split = temporal_split(parsed.events, {}, cfg.seed());
    attach_negatives(split, g, cfg.seed());
    std::cout << "nodes\t" << g.n << "\n"
              << "events\t" << parsed.events.size() << "\n"
              << "pairs\t" << g.pair_count << "\n"
              << "t_min\t" << g.t_min << "\n"
              << "t_max\t" << g.t_max << "\n"
              << "train\t" << split.train_pos.size() << "\n"
              << "val\t" << split.val_pos.size() << "\n"
              << "test\t" << split.test_pos.size() << "\n";
    if (!cfg.out.empty()) {
        export_split(split, parsed.original_id, cfg.out);
        write_resolved(cfg);
        std::cout << "split exported to " << cfg.out << "\n";
    }
    return 0;
}

int cmd_sample(const CliOpts& o) {
    RunConfig cfg = require_data(o);
    if (cfg.cache.empty()) {
        if (cfg.out.empty()) throw std::runtime_error("sample: --cache (or --out) is required");
        cfg.cache = (fs::path(cfg.out) / "subgraphs.cache").string();
        fs::create_directories(cfg.out);
    }
    const Variant variant = parse_variant(cfg.variant);
    auto ctx = ExperimentContext::from_events(parse_edge_list(cfg.data));
    const auto subs = obtain_subgraphs(ctx, cfg, variant.structure_only_sampling);
    std::size_t total_nodes = 0;
    for (const auto& s : subs) total_nodes += static_cast<std::size_t>(s.size());
    std::cout << "centers\t" << subs.size() << "\n"
              << "mean_size\t" << (subs.empty() ? 0.0 : static_cast<double>(total_nodes) / subs.size())
              << "\n"
              << "cache\t" << cfg.cache << "\n";
    write_resolved(cfg);
    return 0;
}

int cmd_train(const CliOpts& o, bool evaluate) {
    RunConfig cfg = require_data(o);
    const Variant variant = parse_variant(cfg.variant);
    auto ctx = ExperimentContext::from_events(parse_edge_list(cfg.data));
    const auto subs = obtain_subgraphs(ctx, cfg, variant.structure_only_sampling);

    std::ofstream log_file;
    if (!cfg.out.empty()) {
        fs::create_directories(cfg.out);
        log_file.open(fs::path(cfg.out) / "train_log.tsv");
    }
    TrainConfig tcfg = cfg.train;
    auto result = run_experiment(ctx, tcfg, variant, cfg.seed(), &subs, stdout_epoch_log(&log_file));

    if (!cfg.out.empty()) {
        export_embeddings(result.fit.embeddings, ctx.data.original_id,
                          (fs::path(cfg.out) / "embeddings.txt").string());
        export_latest_interactions(result.split, ctx.data.original_id,
                                   (fs::path(cfg.out) / "latest_interactions.txt").string());
        write_resolved(cfg);
    }
    if (evaluate) {
        std::vector<EvalReport> reports{result.report};
        std::cout << format_report_table(reports);
        if (!cfg.out.empty())
            write_metrics_file(result.report, (fs::path(cfg.out) / "metrics.txt").string());
    }
    return 0;
}

int cmd_eval(const CliOpts& o) {
    if (o.emb) {
        RunConfig cfg = require_data(o);
        std::vector<long long> emb_ids;
        const Matrix raw = read_embeddings(*o.emb, emb_ids);
        const ParsedEvents parsed = parse_edge_list(cfg.data);
        // reorder the file's rows into dense-id order
        Matrix table(parsed.n, raw.cols);
        std::vector<char> found(parsed.n, 0);
        for (int i = 0; i < raw.rows; ++i) {
            auto it = parsed.dense_id.find(emb_ids[i]);
            if (it == parsed.dense_id.end()) continue;
            for (int c = 0; c < raw.cols; ++c) table(it->second, c) = raw(i, c);
            found[it->second] = 1;
        }
        for (int i = 0; i < parsed.n; ++i)
            if (!found[i])
                throw std::runtime_error("embeddings file is missing node " +
                                         std::to_string(parsed.original_id[i]));
        const TemporalGraph g = build_graph(parsed.events, parsed.n);
        EdgeSplit split = temporal_split(parsed.events, {}, cfg.seed());
        attach_negatives(split, g, cfg.seed());
        EvalReport report = run_link_prediction(g, table, split, cfg.seed());
        report.variant = cfg.variant;
        std::cout << format_report_table({report});
        if (!cfg.out.empty()) {
            fs::create_directories(cfg.out);
            write_metrics_file(report, (fs::path(cfg.out) / "metrics.txt").string());
            write_resolved(cfg);
        }
        return 0;
    }
    return cmd_train(o, /*evaluate=*/true);
}

int cmd_ablate(const CliOpts& o) {
    RunConfig cfg = require_data(o);
    std::vector<std::string> labels = {"full", "-R", "-N-R", "-S-N-R"};
    if (o.variants) {
        labels.clear();
        std::stringstream ss(*o.variants);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) labels.push_back(item);
        }
        if (labels.empty()) throw std::runtime_error("ablate: empty variant list");
    }
    auto ctx = ExperimentContext::from_events(parse_edge_list(cfg.data));
    const auto reports = run_ablation(ctx, cfg.train, labels, cfg.seeds);
    std::cout << format_report_table(reports);
    if (!cfg.out.empty()) {
        fs::create_directories(cfg.out);
        std::ofstream out(fs::path(cfg.out) / "report.tsv");
        out << format_report_table(reports);
        for (const auto& r : reports) {
            const std::string name = "metrics_" + r.variant + "_" + std::to_string(r.seed) + ".txt";
            write_metrics_file(r, (fs::path(cfg.out) / name).string());
        }
        write_resolved(cfg);
    }
    return 0;
}

int cmd_sweep(const CliOpts& o) {
    RunConfig cfg = require_data(o);
    if (!o.grid) throw std::runtime_error("sweep: --grid is required (e.g. \"k=10,20,50;alpha=2:20:2\")");
    if (cfg.out.empty()) throw std::runtime_error("sweep: --out is required for resumable cells");
    const auto axes = parse_grid(*o.grid);
    fs::create_directories(cfg.out);

    auto ctx = ExperimentContext::from_events(parse_edge_list(cfg.data));
    const Variant variant = parse_variant(cfg.variant);

    std::vector<std::size_t> index(axes.size(), 0);
    std::ostringstream table;
    for (const auto& a : axes) table << a.name << "\t";
    table << "mean_auc\tstd_auc\tmean_acc\truns\n";

    bool done = false;
    while (!done) {
        TrainConfig tcfg = cfg.train;
        std::string cell_name = "cell";
        char buf[64];
        for (std::size_t a = 0; a < axes.size(); ++a) {
            const double v = axes[a].values[index[a]];
            if (axes[a].name == "k") tcfg.k = static_cast<int>(v + 0.5);
            else if (axes[a].name == "alpha") tcfg.alpha = v;
            else if (axes[a].name == "beta") tcfg.beta = v;
            else tcfg.lambda = v;
            std::snprintf(buf, sizeof(buf), "_%s=%g", axes[a].name.c_str(), v);
            cell_name += buf;
        }

        const fs::path marker = fs::path(cfg.out) / (cell_name + ".done");
        std::string row;
        if (fs::exists(marker)) {
            std::ifstream in(marker);
            std::getline(in, row);
            std::cerr << "resumed " << cell_name << "\n";
        } else {
            std::vector<EvalReport> reports;
            for (std::uint64_t seed : cfg.seeds) {
                auto result = run_experiment(ctx, tcfg, variant, seed);
                reports.push_back(result.report);
            }
            const SummaryStats s = summarize(reports);
            std::ostringstream r;
            for (std::size_t a = 0; a < axes.size(); ++a) r << axes[a].values[index[a]] << "\t";
            std::snprintf(buf, sizeof(buf), "%.4f\t%.4f\t%.4f\t", s.mean_auc, s.std_auc, s.mean_acc);
            r << buf << s.runs;
            row = r.str();
            std::ofstream out(marker);
            out << row << "\n";
        }
        table << row << "\n";
        std::cout << row << "\n";

        // advance the Cartesian index
        done = true;
        for (std::size_t a = axes.size(); a-- > 0;) {
            if (++index[a] < axes[a].values.size()) {
                done = false;
                break;
            }
            index[a] = 0;
        }
    }
    std::ofstream out(fs::path(cfg.out) / "sweep.tsv");
    out << table.str();
    write_resolved(cfg);
    return 0;
}

int cmd_export(const CliOpts& o) {
    RunConfig cfg = require_data(o);
    if (!o.emb) throw std::runtime_error("export: --emb is required");
    if (cfg.out.empty()) throw std::runtime_error("export: --out is required");
    fs::create_directories(cfg.out);

    std::vector<long long> emb_ids;
    const Matrix table = read_embeddings(*o.emb, emb_ids);
    const ParsedEvents parsed = parse_edge_list(cfg.data);
    const TemporalGraph g = build_graph(parsed.events, parsed.n);
    EdgeSplit split = temporal_split(parsed.events, {}, cfg.seed());
    attach_negatives(split, g, cfg.seed());

    export_embeddings(table, emb_ids, (fs::path(cfg.out) / "embeddings.txt").string());
    export_latest_interactions(split, parsed.original_id,
                               (fs::path(cfg.out) / "latest_interactions.txt").string());
    write_resolved(cfg);
    std::cout << "exported " << table.rows << " x " << table.cols << " embeddings and latest interactions to "
              << cfg.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-supervised dynamic graph representation learning via temporal subgraph contrast"};
    app.require_subcommand(1);

    CliOpts opts;
    auto* ingest = app.add_subcommand("ingest", "parse an edge list, report stats, optionally export the split");
    auto* sample = app.add_subcommand("sample", "sample temporal subgraphs for every node and cache them");
    auto* train = app.add_subcommand("train", "train the encoders and export embeddings");
    auto* eval = app.add_subcommand("eval", "train (or load --emb) and report link-prediction metrics");
    auto* ablate = app.add_subcommand("ablate", "run the ablation variants across seeds");
    auto* sweep = app.add_subcommand("sweep", "grid-sweep hyperparameters with resumable cells");
    auto* exp = app.add_subcommand("export", "re-export embeddings plus the latest test interactions");
    for (auto* cmd : {ingest, sample, train, eval, ablate, sweep, exp}) add_common_options(cmd, opts);
    eval->add_option("--emb", opts.emb, "previously exported embeddings file");
    exp->add_option("--emb", opts.emb, "previously exported embeddings file");
    ablate->add_option("--variants", opts.variants, "comma list of variants (default: all four)");
    sweep->add_option("--grid", opts.grid, "e.g. \"k=10,20,50,100\" or \"alpha=2:20:2;beta=0.4:3.6:0.4\"");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(opts);
        if (app.got_subcommand(sample)) return cmd_sample(opts);
        if (app.got_subcommand(train)) return cmd_train(opts, false);
        if (app.got_subcommand(eval)) return cmd_eval(opts);
        if (app.got_subcommand(ablate)) return cmd_ablate(opts);
        if (app.got_subcommand(sweep)) return cmd_sweep(opts);
        if (app.got_subcommand(exp)) return cmd_export(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
