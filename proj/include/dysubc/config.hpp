// config.hpp -- run configuration ("key = value" files overridden by flags)
// and the text formats: embeddings, split exports, reports, metrics.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysubc/eval.hpp"
#include "dysubc/matrix.hpp"
#include "dysubc/pipeline.hpp"
#include "dysubc/temporal_graph.hpp"
#include "dysubc/trainer.hpp"

namespace dysubc {

struct RunConfig {
    std::string data;
    std::string out;
    std::string cache;  // subgraph cache file (optional)
    std::string variant = "full";
    std::vector<std::uint64_t> seeds = {42};
    int threads = 0;  // 0 = all hardware threads
    bool deterministic = false;
    TrainConfig train;  // k=20 dim=128 phi=varphi=0.75 lambda=0.5 lr=0.001 alpha=10 beta=1.6 epochs=50

    std::uint64_t seed() const { return seeds.empty() ? 42 : seeds.front(); }
    int effective_threads() const { return deterministic ? 1 : (threads > 0 ? threads : hardware_threads()); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& v, const std::string& key) {
    bool ok = false;
    const double d = parse_double(v, ok);
    if (!ok) throw std::runtime_error("config: unparseable value for '" + key + "': " + v);
    return d;
}

inline long long to_ll(const std::string& v, const std::string& key) {
    bool ok = false;
    const long long d = parse_ll(v, ok);
    if (!ok) throw std::runtime_error("config: unparseable value for '" + key + "': " + v);
    return d;
}

inline bool to_bool(const std::string& v, const std::string& key) {
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::runtime_error("config: unparseable boolean for '" + key + "': " + v);
}

inline std::vector<std::uint64_t> to_seed_list(const std::string& v, const std::string& key) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(static_cast<std::uint64_t>(to_ll(item, key)));
    }
    if (out.empty()) throw std::runtime_error("config: empty seed list for '" + key + "'");
    return out;
}

}  // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::to_bool;
    using detail::to_double;
    using detail::to_ll;
    if (key == "data") cfg.data = value;
    else if (key == "out") cfg.out = value;
    else if (key == "cache") cfg.cache = value;
    else if (key == "variant") cfg.variant = value;
    else if (key == "seed") cfg.seeds = {static_cast<std::uint64_t>(to_ll(value, key))};
    else if (key == "seeds") cfg.seeds = detail::to_seed_list(value, key);
    else if (key == "threads") cfg.threads = static_cast<int>(to_ll(value, key));
    else if (key == "deterministic") cfg.deterministic = to_bool(value, key);
    else if (key == "k") cfg.train.k = static_cast<int>(to_ll(value, key));
    else if (key == "alpha") cfg.train.alpha = to_double(value, key);
    else if (key == "beta") cfg.train.beta = to_double(value, key);
    else if (key == "lambda") cfg.train.lambda = to_double(value, key);
    else if (key == "phi") cfg.train.phi = to_double(value, key);
    else if (key == "varphi") cfg.train.varphi = to_double(value, key);
    else if (key == "lr") cfg.train.lr = to_double(value, key);
    else if (key == "epochs") cfg.train.epochs = static_cast<int>(to_ll(value, key));
    else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_ll(value, key));
    else if (key == "dim") cfg.train.dim = static_cast<int>(to_ll(value, key));
    else if (key == "early_stop") cfg.train.early_stop = to_bool(value, key);
    else if (key == "patience") cfg.train.patience = static_cast<int>(to_ll(value, key));
    else if (key == "conventional_hinge") cfg.train.conventional_hinge = to_bool(value, key);
    else if (key == "erase_time_weights") cfg.train.erase_time_weights = to_bool(value, key);
    else throw std::runtime_error("config: unknown key '" + key + "'");
}

// Defaults plus whatever the file sets. Lines are "key = value"; '#'/'%'
// comments and blank lines are skipped.
inline RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline void save_resolved_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "data = " << cfg.data << "\n";
    if (!cfg.out.empty()) out << "out = " << cfg.out << "\n";
    if (!cfg.cache.empty()) out << "cache = " << cfg.cache << "\n";
    out << "variant = " << cfg.variant << "\n";
    out << "seeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
    out << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "deterministic = " << (cfg.deterministic ? 1 : 0) << "\n";
    out << "k = " << cfg.train.k << "\n";
    out << "alpha = " << fmt(cfg.train.alpha) << "\n";
    out << "beta = " << fmt(cfg.train.beta) << "\n";
    out << "lambda = " << fmt(cfg.train.lambda) << "\n";
    out << "phi = " << fmt(cfg.train.phi) << "\n";
    out << "varphi = " << fmt(cfg.train.varphi) << "\n";
    out << "lr = " << fmt(cfg.train.lr) << "\n";
    out << "epochs = " << cfg.train.epochs << "\n";
    out << "batch_size = " << cfg.train.batch_size << "\n";
    out << "dim = " << cfg.train.dim << "\n";
    out << "early_stop = " << (cfg.train.early_stop ? 1 : 0) << "\n";
    out << "patience = " << cfg.train.patience << "\n";
    out << "conventional_hinge = " << (cfg.train.conventional_hinge ? 1 : 0) << "\n";
    out << "erase_time_weights = " << (cfg.train.erase_time_weights ? 1 : 0) << "\n";
}

// ---------------------------------------------------------------------------
// Text formats
// ---------------------------------------------------------------------------

// Header "N d", then one line per node: original id followed by d values.
inline void export_embeddings(const Matrix& table, const std::vector<long long>& original_id,
                              const std::string& path) {
    if (static_cast<std::size_t>(table.rows) != original_id.size())
        throw std::invalid_argument("export_embeddings: id map size mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write embeddings: " + path);
    out << table.rows << " " << table.cols << "\n";
    char buf[64];
    for (int i = 0; i < table.rows; ++i) {
        out << original_id[i];
        const double* row = table.row(i);
        for (int c = 0; c < table.cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
            out << " " << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure on embeddings: " + path);
}

inline Matrix read_embeddings(const std::string& path, std::vector<long long>& original_id) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embeddings: " + path);
    int n = 0, d = 0;
    if (!(in >> n >> d) || n < 1 || d < 1) throw std::runtime_error("bad embeddings header: " + path);
    Matrix table(n, d);
    original_id.resize(n);
    for (int i = 0; i < n; ++i) {
        if (!(in >> original_id[i])) throw std::runtime_error("truncated embeddings file: " + path);
        for (int c = 0; c < d; ++c)
            if (!(in >> table(i, c))) throw std::runtime_error("truncated embeddings file: " + path);
    }
    return table;
}

// The `count` most recent test-period interactions, "u v t" with original ids.
inline void export_latest_interactions(const EdgeSplit& split, const std::vector<long long>& original_id,
                                       const std::string& path, std::size_t count = 10) {
    std::vector<SplitEdge> recent = split.test_pos;
    std::stable_sort(recent.begin(), recent.end(),
                     [](const SplitEdge& a, const SplitEdge& b) { return a.t > b.t; });
    if (recent.size() > count) recent.resize(count);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write interactions: " + path);
    char buf[64];
    for (const auto& e : recent) {
        std::snprintf(buf, sizeof(buf), "%.17g", e.t);
        out << original_id[e.u] << " " << original_id[e.v] << " " << buf << "\n";
    }
}

// train/val/test as "u v t" plus the two negative lists as "u v".
inline void export_split(const EdgeSplit& split, const std::vector<long long>& original_id,
                         const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    char buf[64];
    auto write_pos = [&](const std::vector<SplitEdge>& edges, const std::string& name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw std::runtime_error("cannot write split file: " + name);
        for (const auto& e : edges) {
            std::snprintf(buf, sizeof(buf), "%.17g", e.t);
            out << original_id[e.u] << " " << original_id[e.v] << " " << buf << "\n";
        }
    };
    auto write_neg = [&](const std::vector<std::pair<int, int>>& pairs, const std::string& name) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw std::runtime_error("cannot write split file: " + name);
        for (const auto& [u, v] : pairs) out << original_id[u] << " " << original_id[v] << "\n";
    };
    write_pos(split.train_pos, "train.txt");
    write_pos(split.val_pos, "val.txt");
    write_pos(split.test_pos, "test.txt");
    write_neg(split.val_neg, "val_neg.txt");
    write_neg(split.test_neg, "test_neg.txt");
}

inline void write_metrics_file(const EvalReport& r, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics: " + path);
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "variant = " << r.variant << "\n";
    out << "seed = " << r.seed << "\n";
    out << "auc = " << fmt(r.auc) << "\n";
    out << "accuracy = " << fmt(r.accuracy) << "\n";
    out << "n_pos = " << r.n_pos << "\n";
    out << "n_neg = " << r.n_neg << "\n";
}

// Sweep grids over {k, alpha, beta, lambda}: "name=v1,v2,..." or
// "name=lo:hi:step" segments joined by ';'.
struct GridAxis {
    std::string name;
    std::vector<double> values;
};

inline std::vector<GridAxis> parse_grid(const std::string& spec) {
    std::vector<GridAxis> axes;
    std::stringstream ss(spec);
    std::string segment;
    while (std::getline(ss, segment, ';')) {
        if (segment.empty()) continue;
        const auto eq = segment.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("grid: expected name=values in '" + segment + "'");
        GridAxis axis;
        axis.name = detail::trim(segment.substr(0, eq));
        if (axis.name != "k" && axis.name != "alpha" && axis.name != "beta" && axis.name != "lambda")
            throw std::runtime_error("grid: unknown parameter '" + axis.name + "'");
        const std::string vals = segment.substr(eq + 1);
        if (vals.find(':') != std::string::npos) {
            double lo = 0, hi = 0, step = 0;
            if (std::sscanf(vals.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0)
                throw std::runtime_error("grid: bad range '" + vals + "' (want lo:hi:step)");
            const int count = static_cast<int>((hi - lo) / step + 0.5) + 1;
            for (int i = 0; i < count; ++i) axis.values.push_back(lo + i * step);
        } else {
            std::stringstream vs(vals);
            std::string v;
            while (std::getline(vs, v, ','))
                if (!detail::trim(v).empty()) axis.values.push_back(detail::to_double(detail::trim(v), axis.name));
        }
        if (axis.values.empty()) throw std::runtime_error("grid: empty axis '" + axis.name + "'");
        axes.push_back(axis);
    }
    if (axes.empty()) throw std::runtime_error("grid: empty grid");
    return axes;
}

// Tab-separated per-run rows followed by a per-variant mean/std block.
inline std::string format_report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };
    out << "variant\tseed\tauc\taccuracy\n";
    for (const auto& r : reports)
        out << r.variant << "\t" << r.seed << "\t" << fmt(r.auc) << "\t" << fmt(r.accuracy) << "\n";
    std::vector<std::string> seen;
    for (const auto& r : reports)
        if (std::find(seen.begin(), seen.end(), r.variant) == seen.end()) seen.push_back(r.variant);
    out << "# summary: variant mean_auc std_auc mean_acc std_acc runs\n";
    for (const auto& label : seen) {
        std::vector<EvalReport> group;
        for (const auto& r : reports)
            if (r.variant == label) group.push_back(r);
        const SummaryStats s = summarize(group);
        out << label << "\t" << fmt(s.mean_auc) << "\t" << fmt(s.std_auc) << "\t" << fmt(s.mean_acc)
            << "\t" << fmt(s.std_acc) << "\t" << s.runs << "\n";
    }
    return out.str();
}

}  // namespace dysubc
