#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace glab {

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Runs fn(i) for i in [0, n) over contiguous blocks. Callers write results by
// index, so the outcome never depends on the thread count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// Pairwise (cascade) summation with a fixed split order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct SampleMoments {
    double mean = 0.0;
    double std_error = 0.0;
};

// Mean with a second-pass correction (exact for constant samples) and the
// standard error of the mean.
inline SampleMoments sample_moments(std::span<const double> v) {
    SampleMoments out;
    const auto n = static_cast<double>(v.size());
    if (v.empty()) return out;
    double mean = pairwise_sum(v) / n;
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = v[i] - mean;
    mean += pairwise_sum(dev) / n;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - mean;
        dev[i] = d * d;
    }
    out.mean = mean;
    if (v.size() > 1) out.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
    return out;
}

}  // namespace glab
