// common.hpp -- shared utilities: seeding, hashing, parallel-for.
#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dysubc {

using Rng = std::mt19937_64;

// Derives an independent stream seed so that consumers (split partition,
// negative sampling, weight init, ...) do not perturb each other's draws.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t x = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27; x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

namespace seed_tag {
constexpr std::uint64_t split_partition = 1;
constexpr std::uint64_t eval_negatives  = 2;
constexpr std::uint64_t train_negatives = 3;
constexpr std::uint64_t weight_init     = 4;
constexpr std::uint64_t epoch_shuffle   = 5;
constexpr std::uint64_t logreg          = 6;
}  // namespace seed_tag

// FNV-1a over a byte stream; used to key subgraph caches to their dataset.
struct Fnv1a {
    std::uint64_t state = 0xcbf29ce484222325ULL;
    void add_bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state ^= p[i];
            state *= 0x100000001b3ULL;
        }
    }
    template <typename T>
    void add(const T& v) { add_bytes(&v, sizeof(T)); }
    std::uint64_t value() const { return state; }
};

// Runs fn(i) for i in [0, n). Work is split into contiguous chunks; callers
// that need determinism must not accumulate into shared state from fn --
// write per-index results and reduce in index order afterwards.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (threads <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr error;
    std::mutex error_mu;
    for (std::size_t t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t lo = n * t / nthreads;
            const std::size_t hi = n * (t + 1) / nthreads;
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline int hardware_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace dysubc
