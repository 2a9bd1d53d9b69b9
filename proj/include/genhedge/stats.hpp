#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace genhedge {

/// Welford single-pass mean/variance accumulator.
class RunningStat {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    void merge(const RunningStat& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double nd = static_cast<double>(n_), od = static_cast<double>(o.n_);
        const double delta = o.mean_ - mean_;
        const double tot = nd + od;
        mean_ += delta * od / tot;
        m2_ += o.m2_ + delta * delta * nd * od / tot;
        n_ += o.n_;
    }
    long long count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double standard_error() const {
        return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }

private:
    long long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline int thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* cap = std::getenv("GENHEDGE_THREADS")) {
        const long v = std::strtol(cap, nullptr, 10);
        if (v >= 1 && static_cast<unsigned long>(v) < hw) hw = static_cast<unsigned>(v);
    }
    return static_cast<int>(hw);
}

/// Runs body(i) for i in [0, n) on the thread budget. Chunks are combined in
/// index order by the caller's accumulator type, so results are independent
/// of scheduling.
template <typename Acc>
Acc parallel_map_reduce(long long n, const std::function<void(long long, Acc&)>& body) {
    const int nt = thread_budget();
    if (nt <= 1 || n < 64) {
        Acc acc{};
        for (long long i = 0; i < n; ++i) body(i, acc);
        return acc;
    }
    std::vector<Acc> parts(static_cast<size_t>(nt));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(nt));
    const long long chunk = (n + nt - 1) / nt;
    for (int t = 0; t < nt; ++t) {
        const long long lo = t * chunk;
        const long long hi = std::min(n, lo + chunk);
        threads.emplace_back([&, t, lo, hi]() {
            for (long long i = lo; i < hi; ++i) body(i, parts[static_cast<size_t>(t)]);
        });
    }
    for (auto& th : threads) th.join();
    Acc acc{};
    for (auto& p : parts) acc.merge(p);
    return acc;
}

} // namespace genhedge
