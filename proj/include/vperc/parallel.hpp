#pragma once

#include <cstdint>
#include <thread>
#include <vector>

namespace vperc {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run `fn(trial, acc)` for trial = 0..trials-1 across a worker pool.
/// Trial-to-stream mapping is by trial index and accumulators hold integer
/// sums merged in thread order, so results are schedule-independent.
template <class Acc, class Fn>
Acc run_trials(std::int64_t trials, int threads, const Acc& proto, Fn&& fn) {
    const int nt = static_cast<int>(
        std::max<std::int64_t>(1, std::min<std::int64_t>(resolve_threads(threads), trials)));
    std::vector<Acc> accs(static_cast<std::size_t>(nt), proto);
    if (nt == 1) {
        for (std::int64_t t = 0; t < trials; ++t) fn(t, accs[0]);
        return accs[0];
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int w = 0; w < nt; ++w) {
        const std::int64_t lo = trials * w / nt;
        const std::int64_t hi = trials * (w + 1) / nt;
        pool.emplace_back([&, w, lo, hi] {
            for (std::int64_t t = lo; t < hi; ++t) fn(t, accs[w]);
        });
    }
    for (auto& th : pool) th.join();
    for (int w = 1; w < nt; ++w) accs[0].merge(accs[w]);
    return accs[0];
}

}  // namespace vperc
