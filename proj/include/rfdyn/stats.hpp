#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace rfdyn {

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

// Pairwise sum; result depends only on the order of `xs`.
inline double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    std::size_t h = xs.size() / 2;
    return pairwise_sum(xs.first(h)) + pairwise_sum(xs.subspan(h));
}

// Mean and standard error of the mean (unbiased sample variance).
inline Estimate estimate(std::span<const double> xs) {
    Estimate e;
    e.count = xs.size();
    if (xs.empty()) return e;
    e.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return e;
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - e.mean) * (xs[i] - e.mean);
    double var = pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
    e.se = std::sqrt(var / static_cast<double>(xs.size()));
    return e;
}

}  // namespace rfdyn
