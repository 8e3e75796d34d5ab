// temporal_graph.hpp -- timestamped edge-list ingestion, the deduplicated
// symmetric temporal graph, temporal train/val/test splits and negative
// edge sampling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dysubc/common.hpp"

namespace dysubc {

// One interaction (u, v) at raw time t. Node ids are dense 0..n-1 after
// parsing; self-loop events are filtered at ingestion.
struct TemporalEvent {
    int src = 0;
    int dst = 0;
    double t = 0.0;
};

struct EdgeListFormat {
    std::string separators = " \t,";  // any of these splits columns
    int src_col = 0;
    int dst_col = 1;
    int time_col = 2;
};

// Parse result: events in file order with dense node ids, plus the map back
// to the original ids for export.
struct ParsedEvents {
    std::vector<TemporalEvent> events;
    std::vector<long long> original_id;               // dense id -> raw id
    std::unordered_map<long long, int> dense_id;      // raw id -> dense id
    int n = 0;

    std::uint64_t content_hash() const {
        Fnv1a h;
        h.add(n);
        for (const auto& e : events) { h.add(e.src); h.add(e.dst); h.add(e.t); }
        return h.value();
    }
};

namespace detail {

inline bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#' || c == '%';
    }
    return true;  // blank
}

inline std::vector<std::string> split_columns(const std::string& line, const std::string& seps) {
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
        if (c == '\r') continue;
        if (seps.find(c) != std::string::npos) {
            if (!cur.empty()) { cols.push_back(cur); cur.clear(); }
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) cols.push_back(cur);
    return cols;
}

inline long long parse_ll(const std::string& s, bool& ok) {
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    ok = end != s.c_str() && *end == '\0';
    return v;
}

inline double parse_double(const std::string& s, bool& ok) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    ok = end != s.c_str() && *end == '\0';
    return v;
}

}  // namespace detail

// Reads "src dst t [extra...]" lines (space/tab/comma separated, '#'/'%'
// comments skipped). Node ids are remapped to 0..n-1 in order of first
// appearance; self-loop events are dropped.
inline ParsedEvents parse_edge_list(const std::string& path, const EdgeListFormat& fmt = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open edge list: " + path);

    ParsedEvents out;
    auto intern = [&out](long long raw) {
        auto it = out.dense_id.find(raw);
        if (it != out.dense_id.end()) return it->second;
        int id = out.n++;
        out.dense_id.emplace(raw, id);
        out.original_id.push_back(raw);
        return id;
    };

    const int need = std::max({fmt.src_col, fmt.dst_col, fmt.time_col}) + 1;
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::is_comment_or_blank(line)) continue;
        auto cols = detail::split_columns(line, fmt.separators);
        if (static_cast<int>(cols.size()) < need)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected at least " +
                                     std::to_string(need) + " columns, got " + std::to_string(cols.size()));
        bool ok_u = false, ok_v = false, ok_t = false;
        const long long u_raw = detail::parse_ll(cols[fmt.src_col], ok_u);
        const long long v_raw = detail::parse_ll(cols[fmt.dst_col], ok_v);
        const double t = detail::parse_double(cols[fmt.time_col], ok_t);
        if (!ok_u || !ok_v || !ok_t || !std::isfinite(t) || t < 0.0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed event line");
        if (u_raw == v_raw) continue;  // self-loop event
        TemporalEvent e;
        e.src = intern(u_raw);
        e.dst = intern(v_raw);
        e.t = t;
        out.events.push_back(e);
    }
    if (out.events.empty()) throw std::runtime_error(path + ": no events");
    return out;
}

struct NeighborEntry {
    int node = 0;
    double t_latest = 0.0;  // raw timestamp (max over events on the pair)
    double w = 0.0;         // min-max normalized t_latest, in [0,1]
};

// Undirected, per-pair deduplicated adjacency. Each unordered pair keeps the
// latest event timestamp; weights are the global min-max normalization of
// those surviving timestamps (all 1 when every pair shares one timestamp).
struct TemporalGraph {
    int n = 0;
    std::vector<std::vector<NeighborEntry>> adj;  // sorted by neighbor id
    std::vector<int> degree;
    double t_min = 0.0;
    double t_max = 0.0;
    std::size_t pair_count = 0;

    const NeighborEntry* find_edge(int u, int v) const {
        const auto& row = adj[u];
        auto it = std::lower_bound(row.begin(), row.end(), v,
                                   [](const NeighborEntry& e, int id) { return e.node < id; });
        if (it != row.end() && it->node == v) return &*it;
        return nullptr;
    }
    bool has_edge(int u, int v) const { return find_edge(u, v) != nullptr; }

    // Largest normalized incident timestamp ("S_time"). Errors on isolated nodes.
    double latest_incident_weight(int j) const {
        if (adj[j].empty()) throw std::runtime_error("node " + std::to_string(j) + " has no incident edge");
        double best = 0.0;
        for (const auto& e : adj[j]) best = std::max(best, e.w);
        return best;
    }
};

inline TemporalGraph build_graph(const std::vector<TemporalEvent>& events, int n_nodes = -1) {
    if (events.empty()) throw std::runtime_error("build_graph: empty event list");

    int n = n_nodes;
    if (n < 0) {
        n = 0;
        for (const auto& e : events) n = std::max({n, e.src + 1, e.dst + 1});
    }

    // Per unordered pair, keep the max timestamp.
    std::unordered_map<std::uint64_t, double> latest;
    latest.reserve(events.size());
    for (const auto& e : events) {
        if (e.src == e.dst) continue;
        const int a = std::min(e.src, e.dst);
        const int b = std::max(e.src, e.dst);
        const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
        auto [it, inserted] = latest.try_emplace(key, e.t);
        if (!inserted && e.t > it->second) it->second = e.t;
    }
    if (latest.empty()) throw std::runtime_error("build_graph: no non-loop events");

    TemporalGraph g;
    g.n = n;
    g.adj.assign(n, {});
    g.pair_count = latest.size();
    g.t_min = latest.begin()->second;
    g.t_max = latest.begin()->second;
    for (const auto& [key, t] : latest) {
        g.t_min = std::min(g.t_min, t);
        g.t_max = std::max(g.t_max, t);
    }
    const double span = g.t_max - g.t_min;
    for (const auto& [key, t] : latest) {
        const int a = static_cast<int>(key >> 32);
        const int b = static_cast<int>(key & 0xffffffffULL);
        const double w = span > 0.0 ? (t - g.t_min) / span : 1.0;
        g.adj[a].push_back({b, t, w});
        g.adj[b].push_back({a, t, w});
    }
    for (auto& row : g.adj)
        std::sort(row.begin(), row.end(), [](const NeighborEntry& x, const NeighborEntry& y) { return x.node < y.node; });
    g.degree.resize(n);
    for (int i = 0; i < n; ++i) g.degree[i] = static_cast<int>(g.adj[i].size());
    return g;
}

struct SplitEdge {
    int u = 0;
    int v = 0;
    double t = 0.0;
};

struct SplitFractions {
    double train = 0.75;
    double val = 0.10;
    double test = 0.15;
};

struct EdgeSplit {
    std::vector<SplitEdge> train_pos, val_pos, test_pos;
    std::vector<std::pair<int, int>> val_neg, test_neg;
};

// Sorts events ascending by time (stable) and assigns the earliest 75% to
// train; the recent 25% is randomly partitioned into val/test with counts
// floor(val_frac*m) and the remainder.
inline EdgeSplit temporal_split(const std::vector<TemporalEvent>& events, const SplitFractions& fr,
                                std::uint64_t seed) {
    if (events.size() < 3) throw std::runtime_error("temporal_split: need at least 3 events");
    if (std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9)
        throw std::runtime_error("temporal_split: fractions must sum to 1");

    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&events](std::size_t a, std::size_t b) { return events[a].t < events[b].t; });

    // floor rounding for train and val, remainder to test; the 1e-9 nudge
    // keeps exact-integer products (e.g. 0.10 * 33720) from landing one ulp low
    const std::size_t m = events.size();
    const std::size_t n_train = static_cast<std::size_t>(fr.train * static_cast<double>(m) + 1e-9);
    const std::size_t n_val = static_cast<std::size_t>(fr.val * static_cast<double>(m) + 1e-9);

    EdgeSplit split;
    split.train_pos.reserve(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        const auto& e = events[order[i]];
        split.train_pos.push_back({e.src, e.dst, e.t});
    }

    std::vector<std::size_t> tail(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    Rng rng(derive_seed(seed, seed_tag::split_partition));
    for (std::size_t i = tail.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> d(0, i - 1);
        std::swap(tail[i - 1], tail[d(rng)]);
    }
    for (std::size_t i = 0; i < tail.size(); ++i) {
        const auto& e = events[tail[i]];
        auto& dest = i < n_val ? split.val_pos : split.test_pos;
        dest.push_back({e.src, e.dst, e.t});
    }
    return split;
}

// Draws `count` distinct unordered non-edges of g by seeded rejection
// sampling. Pairs in `exclude` are also rejected. Fails when the graph
// cannot supply the request.
inline std::vector<std::pair<int, int>> sample_negatives(
    const TemporalGraph& g, std::size_t count, std::uint64_t seed,
    const std::vector<std::pair<int, int>>& exclude = {}) {
    if (count == 0) return {};
    if (g.n < 2) throw std::runtime_error("sample_negatives: graph too small");

    auto pair_key = [](int u, int v) {
        if (u > v) std::swap(u, v);
        return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint32_t>(v);
    };
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(count + exclude.size());
    std::size_t excluded_non_edges = 0;
    for (const auto& [u, v] : exclude) {
        if (taken.insert(pair_key(u, v)).second && !g.has_edge(u, v) && u != v) ++excluded_non_edges;
    }

    const std::size_t total_pairs = static_cast<std::size_t>(g.n) * (g.n - 1) / 2;
    if (total_pairs < g.pair_count + excluded_non_edges ||
        total_pairs - g.pair_count - excluded_non_edges < count)
        throw std::runtime_error("sample_negatives: graph has fewer than " + std::to_string(count) +
                                 " available non-edges");

    Rng rng(seed);
    std::uniform_int_distribution<int> pick(0, g.n - 1);
    std::vector<std::pair<int, int>> out;
    out.reserve(count);
    const std::size_t max_attempts = 1000 * count + 100000;
    std::size_t attempts = 0;
    while (out.size() < count) {
        if (++attempts > max_attempts)
            throw std::runtime_error("sample_negatives: rejection sampling exceeded retry budget");
        const int u = pick(rng);
        const int v = pick(rng);
        if (u == v || g.has_edge(u, v)) continue;
        if (!taken.insert(pair_key(u, v)).second) continue;
        out.emplace_back(std::min(u, v), std::max(u, v));
    }
    return out;
}

// Completes a split with negatives: one pool of |val|+|test| distinct
// non-edges of the full graph, so validation and test negatives never
// overlap each other.
inline void attach_negatives(EdgeSplit& split, const TemporalGraph& full_graph, std::uint64_t seed) {
    const std::size_t nv = split.val_pos.size();
    const std::size_t nt = split.test_pos.size();
    auto pool = sample_negatives(full_graph, nv + nt, derive_seed(seed, seed_tag::eval_negatives));
    split.val_neg.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(nv));
    split.test_neg.assign(pool.begin() + static_cast<std::ptrdiff_t>(nv), pool.end());
}

}  // namespace dysubc
