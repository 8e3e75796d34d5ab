// sampler.hpp -- importance-ranked temporal subgraph sampling: BFS frontier
// expansion where whole layers are admitted until the node budget k is hit,
// then the overflowing layer is ranked by S = S_time + alpha * Degree.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dysubc/matrix.hpp"
#include "dysubc/temporal_graph.hpp"

namespace dysubc {

struct SamplerConfig {
    int k = 20;            // subgraph size, including the center
    double alpha = 10.0;   // structure/time balance in the importance score
    bool structure_only = false;  // ablation: score = Degree(j) only
};

// Induced k'-node neighborhood of a center. Position 0 is the center; A_time
// carries the parent graph's normalized weights, A_plain its 0/1 adjacency.
// tau is the normalized time of each node's direct interaction with the
// center when one exists, otherwise of its BFS discovery edge.
struct TemporalSubgraph {
    int center = 0;
    std::vector<int> nodes;      // global ids, center first
    std::vector<int> hop_dist;   // BFS depth from center (center = 0)
    std::vector<double> tau;     // normalized interaction time per node
    Matrix A_time;
    Matrix A_plain;

    int size() const { return static_cast<int>(nodes.size()); }
};

// S(j) = S_time(j) + alpha * Degree(j), with S_time the largest normalized
// timestamp among j's incident edges. Degree-only when structure_only is set.
inline double importance_score(const TemporalGraph& g, int j, const SamplerConfig& cfg) {
    if (j < 0 || j >= g.n) throw std::out_of_range("importance_score: node out of range");
    const double structural = static_cast<double>(g.degree[j]);
    if (cfg.structure_only) return structural;
    return g.latest_incident_weight(j) + cfg.alpha * structural;
}

inline double importance_score(const TemporalGraph& g, int j, double alpha) {
    SamplerConfig cfg;
    cfg.alpha = alpha;
    return importance_score(g, j, cfg);
}

// A_time/A_plain of the induced subgraph over `nodes` (symmetric, zero diag).
inline std::pair<Matrix, Matrix> extract_matrices(const TemporalGraph& g, const std::vector<int>& nodes) {
    const int k = static_cast<int>(nodes.size());
    {
        std::vector<int> sorted = nodes;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("extract_matrices: duplicate node ids");
    }
    Matrix a_time(k, k), a_plain(k, k);
    for (int p = 0; p < k; ++p) {
        for (int q = p + 1; q < k; ++q) {
            const NeighborEntry* e = g.find_edge(nodes[p], nodes[q]);
            if (!e) continue;
            a_time(p, q) = a_time(q, p) = e->w;
            a_plain(p, q) = a_plain(q, p) = 1.0;
        }
    }
    return {std::move(a_time), std::move(a_plain)};
}

inline TemporalSubgraph sample_subgraph(const TemporalGraph& g, int center, const SamplerConfig& cfg) {
    if (center < 0 || center >= g.n) throw std::out_of_range("sample_subgraph: center out of range");
    if (cfg.k < 1) throw std::invalid_argument("sample_subgraph: k must be >= 1");

    TemporalSubgraph sub;
    sub.center = center;
    sub.nodes.push_back(center);
    sub.hop_dist.push_back(0);
    sub.tau.push_back(g.adj[center].empty() ? 0.0 : g.latest_incident_weight(center));

    std::vector<char> in_pool(g.n, 0);
    in_pool[center] = 1;
    // `seen` is never reset between layers: a candidate is either admitted
    // (and lands in in_pool) or belongs to the final partial layer, after
    // which the loop exits.
    std::vector<char> seen(g.n, 0);
    std::vector<int> frontier{center};
    int count = 1;
    int hop = 0;

    struct Candidate {
        int node;
        double discovery_w;  // weight of the edge that first reached it
    };

    while (count < cfg.k && !frontier.empty()) {
        ++hop;
        std::vector<Candidate> cand;
        for (int v : frontier) {
            for (const auto& e : g.adj[v]) {
                if (in_pool[e.node] || seen[e.node]) continue;
                seen[e.node] = 1;
                cand.push_back({e.node, e.w});
            }
        }
        if (cand.empty()) break;

        const int budget = cfg.k - count;
        if (static_cast<int>(cand.size()) >= budget) {
            // overflowing layer: keep the top `budget` by importance score,
            // ties broken toward the smaller node id
            std::vector<double> score(cand.size());
            for (std::size_t i = 0; i < cand.size(); ++i) score[i] = importance_score(g, cand[i].node, cfg);
            std::vector<std::size_t> idx(cand.size());
            std::iota(idx.begin(), idx.end(), 0);
            std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                if (score[a] != score[b]) return score[a] > score[b];
                return cand[a].node < cand[b].node;
            });
            idx.resize(budget);
            for (std::size_t i : idx) {
                in_pool[cand[i].node] = 1;
                sub.nodes.push_back(cand[i].node);
                sub.hop_dist.push_back(hop);
                sub.tau.push_back(cand[i].discovery_w);
            }
            count = cfg.k;
            break;
        }

        frontier.clear();
        for (const auto& c : cand) {
            in_pool[c.node] = 1;
            sub.nodes.push_back(c.node);
            sub.hop_dist.push_back(hop);
            sub.tau.push_back(c.discovery_w);
            frontier.push_back(c.node);
        }
        count += static_cast<int>(cand.size());
    }

    // tau prefers the direct (center, j) interaction when one exists
    for (int p = 1; p < sub.size(); ++p) {
        if (const NeighborEntry* e = g.find_edge(center, sub.nodes[p])) sub.tau[p] = e->w;
    }

    auto [a_time, a_plain] = extract_matrices(g, sub.nodes);
    sub.A_time = std::move(a_time);
    sub.A_plain = std::move(a_plain);
    return sub;
}

// ---------------------------------------------------------------------------
// Subgraph cache: sampling is deterministic, done once before training, and
// reusable across seeds. The header keys the cache to (dataset, k, alpha,
// sampling mode) so stale files are rejected instead of silently reused.
// ---------------------------------------------------------------------------

inline constexpr const char* kSubgraphCacheMagic = "DYSUBC-SUBGRAPHS v1";

struct SubgraphCacheKey {
    std::uint64_t dataset_hash = 0;
    int k = 0;
    double alpha = 0.0;
    bool structure_only = false;

    bool operator==(const SubgraphCacheKey&) const = default;
};

inline void save_subgraph_cache(const std::string& path, const SubgraphCacheKey& key,
                                const std::vector<TemporalSubgraph>& subs) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write subgraph cache: " + path);
    out << kSubgraphCacheMagic << "\n";
    out << key.dataset_hash << " " << key.k << " ";
    out.precision(17);
    out << key.alpha << " " << (key.structure_only ? 1 : 0) << " " << subs.size() << "\n";
    for (const auto& s : subs) {
        out << "c " << s.center << " " << s.size() << "\n";
        for (int p = 0; p < s.size(); ++p)
            out << s.nodes[p] << " " << s.hop_dist[p] << " " << s.tau[p] << (p + 1 == s.size() ? "\n" : " ");
        if (s.size() == 0) out << "\n";
        std::size_t edges = 0;
        for (int p = 0; p < s.size(); ++p)
            for (int q = p + 1; q < s.size(); ++q)
                if (s.A_plain(p, q) != 0.0) ++edges;
        out << "e " << edges << "\n";
        for (int p = 0; p < s.size(); ++p)
            for (int q = p + 1; q < s.size(); ++q)
                if (s.A_plain(p, q) != 0.0) out << p << " " << q << " " << s.A_time(p, q) << "\n";
    }
    if (!out) throw std::runtime_error("write failure on subgraph cache: " + path);
}

// Returns true and fills `subs` when the cache matches `key`; false when the
// file is absent or keyed differently (stale), so the caller resamples.
inline bool load_subgraph_cache(const std::string& path, const SubgraphCacheKey& key,
                                std::vector<TemporalSubgraph>& subs) {
    std::ifstream in(path);
    if (!in) return false;
    std::string magic;
    if (!std::getline(in, magic) || magic != kSubgraphCacheMagic) return false;
    SubgraphCacheKey file_key;
    int structure_flag = 0;
    std::size_t n_subs = 0;
    if (!(in >> file_key.dataset_hash >> file_key.k >> file_key.alpha >> structure_flag >> n_subs)) return false;
    file_key.structure_only = structure_flag != 0;
    if (!(file_key == key)) return false;

    subs.clear();
    subs.reserve(n_subs);
    for (std::size_t i = 0; i < n_subs; ++i) {
        std::string tag;
        int kprime = 0;
        TemporalSubgraph s;
        if (!(in >> tag >> s.center >> kprime) || tag != "c") return false;
        s.nodes.resize(kprime);
        s.hop_dist.resize(kprime);
        s.tau.resize(kprime);
        for (int p = 0; p < kprime; ++p)
            if (!(in >> s.nodes[p] >> s.hop_dist[p] >> s.tau[p])) return false;
        std::size_t edges = 0;
        if (!(in >> tag >> edges) || tag != "e") return false;
        s.A_time = Matrix(kprime, kprime);
        s.A_plain = Matrix(kprime, kprime);
        for (std::size_t eidx = 0; eidx < edges; ++eidx) {
            int p = 0, q = 0;
            double w = 0.0;
            if (!(in >> p >> q >> w)) return false;
            s.A_time(p, q) = s.A_time(q, p) = w;
            s.A_plain(p, q) = s.A_plain(q, p) = 1.0;
        }
        subs.push_back(std::move(s));
    }
    return true;
}

}  // namespace dysubc
