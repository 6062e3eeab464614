#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nal {

// Static block partition; f(i) results must be written to per-index slots so the
// outcome does not depend on the worker count.
template <class F>
void parallel_for(std::size_t n, int workers, F&& f) {
    int w = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> threads;
    std::exception_ptr err;
    std::mutex m;
    for (int t = 0; t < w; ++t) {
        std::size_t lo = n * t / w, hi = n * (t + 1) / w;
        threads.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(m);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    if (err) std::rethrow_exception(err);
}

// Neumaier summation.
template <class T>
class CompensatedSum {
public:
    void add(T v) {
        T t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    T value() const { return sum_ + comp_; }

private:
    T sum_{};
    T comp_{};
};

}  // namespace nal
