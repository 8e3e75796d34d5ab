#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "dysubc/temporal_graph.hpp"
#include "testing_util.hpp"

using namespace dysubc;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& content) {
        path = fs::temp_directory_path() / ("dysubc_test_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++) + ".txt");
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::error_code ec; fs::remove(path, ec); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

}  // namespace

TEST_CASE("parse_edge_list reads events in file order with dense remapping") {
    TempFile f("1 2 100\n2 3 200\n");
    const auto parsed = parse_edge_list(f.path.string());
    REQUIRE(parsed.events.size() == 2);
    REQUIRE(parsed.n == 3);
    CHECK(parsed.events[0].src == 0);
    CHECK(parsed.events[0].dst == 1);
    CHECK(parsed.events[0].t == 100.0);
    CHECK(parsed.events[1].src == 1);
    CHECK(parsed.events[1].dst == 2);
    CHECK(parsed.original_id == std::vector<long long>{1, 2, 3});
    CHECK(parsed.dense_id.at(3) == 2);
}

TEST_CASE("parse_edge_list handles separators, comments and extra columns") {
    TempFile f("# a comment\n% another\n10,20,5.5,ignored,cols\n30\t10\t7\n\n");
    const auto parsed = parse_edge_list(f.path.string());
    REQUIRE(parsed.events.size() == 2);
    CHECK(parsed.n == 3);
    CHECK(parsed.events[0].t == 5.5);
    CHECK(parsed.events[1].t == 7.0);
}

TEST_CASE("parse_edge_list drops self-loop events") {
    TempFile f("5 5 1\n5 6 2\n");
    const auto parsed = parse_edge_list(f.path.string());
    REQUIRE(parsed.events.size() == 1);
    CHECK(parsed.n == 2);
}

TEST_CASE("parse_edge_list error paths") {
    SECTION("comment-only file has no events") {
        TempFile f("# comment\n");
        REQUIRE_THROWS_WITH(parse_edge_list(f.path.string()), Catch::Matchers::ContainsSubstring("no events"));
    }
    SECTION("missing file") {
        REQUIRE_THROWS(parse_edge_list("/nonexistent/nowhere.txt"));
    }
    SECTION("too few columns reports the line number") {
        TempFile f("1 2 3\n4 5\n");
        REQUIRE_THROWS_WITH(parse_edge_list(f.path.string()), Catch::Matchers::ContainsSubstring(":2:"));
    }
    SECTION("malformed timestamp") {
        TempFile f("1 2 xyz\n");
        REQUIRE_THROWS_WITH(parse_edge_list(f.path.string()), Catch::Matchers::ContainsSubstring(":1:"));
    }
    SECTION("negative timestamp rejected") {
        TempFile f("1 2 -5\n");
        REQUIRE_THROWS(parse_edge_list(f.path.string()));
    }
}

TEST_CASE("build_graph dedups to the latest timestamp per pair") {
    const auto g = build_graph({{0, 1, 10.0}, {1, 0, 20.0}});
    REQUIRE(g.n == 2);
    REQUIRE(g.pair_count == 1);
    const auto* e = g.find_edge(0, 1);
    REQUIRE(e != nullptr);
    CHECK(e->t_latest == 20.0);
    CHECK(e->w == 1.0);  // single pair: t_min == t_max
    CHECK(g.find_edge(1, 0)->w == 1.0);
}

TEST_CASE("build_graph min-max normalizes weights over pair timestamps") {
    const auto g = build_graph({{0, 1, 10.0}, {1, 2, 20.0}, {2, 3, 30.0}});
    CHECK(g.find_edge(0, 1)->w == 0.0);
    CHECK(g.find_edge(1, 2)->w == 0.5);
    CHECK(g.find_edge(2, 3)->w == 1.0);
    CHECK(g.t_min == 10.0);
    CHECK(g.t_max == 30.0);
}

TEST_CASE("build_graph rejects empty input") {
    REQUIRE_THROWS(build_graph({}));
}

TEST_CASE("build_graph matches the group-by oracle on random multigraphs") {
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        const auto events = testutil::random_events(12, 50, seed);
        const auto g = build_graph(events);
        const auto oracle = testutil::pair_latest_oracle(events);
        REQUIRE(g.pair_count == oracle.size());
        double t_min = oracle.begin()->second, t_max = oracle.begin()->second;
        for (const auto& [pair, t] : oracle) {
            t_min = std::min(t_min, t);
            t_max = std::max(t_max, t);
        }
        for (const auto& [pair, t] : oracle) {
            const auto* e = g.find_edge(pair.first, pair.second);
            REQUIRE(e != nullptr);
            CHECK(e->t_latest == t);
            const double expect_w = t_max > t_min ? (t - t_min) / (t_max - t_min) : 1.0;
            CHECK(e->w == Catch::Approx(expect_w).margin(1e-15));
            // symmetry
            const auto* rev = g.find_edge(pair.second, pair.first);
            REQUIRE(rev != nullptr);
            CHECK(rev->w == e->w);
        }
        // weights span [0, 1]
        double w_min = 1.0, w_max = 0.0;
        for (int u = 0; u < g.n; ++u)
            for (const auto& e : g.adj[u]) {
                w_min = std::min(w_min, e.w);
                w_max = std::max(w_max, e.w);
                CHECK(e.node != u);  // no self loops
            }
        if (t_max > t_min) {
            CHECK(w_min == 0.0);
            CHECK(w_max == 1.0);
        }
    }
}

TEST_CASE("temporal_split reproduces the documented fb-forum arithmetic") {
    // 33,720 events at distinct times: 75/10/15 must give 25290/3372/5058
    std::vector<TemporalEvent> events;
    events.reserve(33720);
    for (int i = 0; i < 33720; ++i) events.push_back({i % 100, (i + 1) % 100, static_cast<double>(i)});
    const auto split = temporal_split(events, {}, 7);
    CHECK(split.train_pos.size() == 25290);
    CHECK(split.val_pos.size() == 3372);
    CHECK(split.test_pos.size() == 5058);
}

TEST_CASE("temporal_split floors and gives the remainder to test") {
    const std::vector<TemporalEvent> events{{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 3.0}, {3, 0, 4.0}};
    const auto split = temporal_split(events, {}, 99);
    CHECK(split.train_pos.size() == 3);
    CHECK(split.val_pos.size() == 0);
    CHECK(split.test_pos.size() == 1);
    CHECK(split.test_pos[0].t == 4.0);
}

TEST_CASE("temporal_split rejects tiny inputs and bad fractions") {
    REQUIRE_THROWS(temporal_split({{0, 1, 1.0}, {1, 2, 2.0}}, {}, 1));
    REQUIRE_THROWS(temporal_split({{0, 1, 1.0}, {1, 2, 2.0}, {2, 3, 3.0}}, {0.5, 0.1, 0.1}, 1));
}

TEST_CASE("temporal_split is deterministic per seed and time-monotone") {
    const auto events = testutil::random_events(30, 200, 11);
    const auto a = temporal_split(events, {}, 5);
    const auto b = temporal_split(events, {}, 5);
    REQUIRE(a.val_pos.size() == b.val_pos.size());
    for (std::size_t i = 0; i < a.val_pos.size(); ++i) {
        CHECK(a.val_pos[i].u == b.val_pos[i].u);
        CHECK(a.val_pos[i].v == b.val_pos[i].v);
        CHECK(a.val_pos[i].t == b.val_pos[i].t);
    }

    double max_train = 0.0;
    for (const auto& e : a.train_pos) max_train = std::max(max_train, e.t);
    double min_recent = 1e18;
    for (const auto& e : a.val_pos) min_recent = std::min(min_recent, e.t);
    for (const auto& e : a.test_pos) min_recent = std::min(min_recent, e.t);
    CHECK(max_train <= min_recent);

    // different seeds repartition the recent tail (val picks differ)
    const auto c = temporal_split(events, {}, 6);
    bool differs = false;
    for (std::size_t i = 0; i < a.val_pos.size() && !differs; ++i)
        differs = a.val_pos[i].u != c.val_pos[i].u || a.val_pos[i].v != c.val_pos[i].v ||
                  a.val_pos[i].t != c.val_pos[i].t;
    CHECK(differs);
}

TEST_CASE("sample_negatives on degenerate graphs") {
    SECTION("complete graph has no non-edges") {
        const auto g = build_graph({{0, 1, 1.0}, {0, 2, 2.0}, {1, 2, 3.0}});
        REQUIRE_THROWS(sample_negatives(g, 1, 42));
    }
    SECTION("empty-edge graph yields every unordered pair") {
        TemporalGraph g;
        g.n = 4;
        g.adj.assign(4, {});
        g.degree.assign(4, 0);
        g.pair_count = 0;
        auto negs = sample_negatives(g, 6, 42);
        REQUIRE(negs.size() == 6);
        std::set<std::pair<int, int>> unique(negs.begin(), negs.end());
        CHECK(unique.size() == 6);
        for (const auto& [u, v] : negs) {
            CHECK(u < v);
            CHECK(v < 4);
        }
    }
    SECTION("path graph 0-1-2") {
        const auto g = build_graph({{0, 1, 1.0}, {1, 2, 2.0}});
        REQUIRE_THROWS(sample_negatives(g, 2, 42));
        const auto one = sample_negatives(g, 1, 42);
        REQUIRE(one.size() == 1);
        CHECK(one[0] == std::make_pair(0, 2));
    }
}

TEST_CASE("sampled negatives never collide with edges") {
    const auto events = testutil::random_events(25, 120, 3);
    const auto g = build_graph(events);
    const auto negs = sample_negatives(g, 40, 17);
    REQUIRE(negs.size() == 40);
    std::set<std::pair<int, int>> unique(negs.begin(), negs.end());
    CHECK(unique.size() == 40);
    for (const auto& [u, v] : negs) {
        CHECK(u != v);
        CHECK_FALSE(g.has_edge(u, v));
    }
}

TEST_CASE("attach_negatives matches split sizes and avoids overlap") {
    const auto events = testutil::random_events(40, 300, 9);
    const auto g = build_graph(events);
    auto split = temporal_split(events, {}, 21);
    attach_negatives(split, g, 21);
    CHECK(split.val_neg.size() == split.val_pos.size());
    CHECK(split.test_neg.size() == split.test_pos.size());
    std::set<std::pair<int, int>> all(split.val_neg.begin(), split.val_neg.end());
    for (const auto& p : split.test_neg) CHECK(all.insert(p).second);  // disjoint pools
    for (const auto& [u, v] : all) CHECK_FALSE(g.has_edge(u, v));
}

TEST_CASE("one-hot features mean row selection (dense identity oracle)") {
    const int n = 10, d = 4;
    const Matrix w = testutil::random_matrix(n, d, 77);
    Matrix identity(n, n);
    for (int i = 0; i < n; ++i) identity(i, i) = 1.0;
    const Matrix product = matmul(identity, w);
    CHECK(testutil::max_abs_diff(product, w) == 0.0);

    // X*W for a node subset selects exactly those rows
    const std::vector<int> nodes{2, 7};
    Matrix x(2, n);
    x(0, 2) = 1.0;
    x(1, 7) = 1.0;
    const Matrix selected = matmul(x, w);
    for (int c = 0; c < d; ++c) {
        CHECK(selected(0, c) == w(2, c));
        CHECK(selected(1, c) == w(7, c));
    }
}
