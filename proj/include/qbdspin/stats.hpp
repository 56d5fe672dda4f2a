#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "qbdspin/error.hpp"
#include "qbdspin/rng.hpp"

namespace qbdspin::stats {

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Population variance, shifted by the first sample so constant data gives 0.
inline double variance(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const double k = x.front();
    double s1 = 0.0, s2 = 0.0;
    for (double v : x) {
        s1 += v - k;
        s2 += (v - k) * (v - k);
    }
    const double n = static_cast<double>(x.size());
    return std::max(0.0, (s2 - s1 * s1 / n) / n);
}

/// Standard error of the mean of a correlated series from non-overlapping
/// batch means. Trailing records that do not fill a batch are dropped.
inline double batch_error(std::span<const double> x, std::size_t batches = 32) {
    detail::require(x.size() >= 2 * batches, ErrorKind::insufficient, "batch_error: series too short");
    const std::size_t len = x.size() / batches;
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) means[b] = mean(x.subspan(b * len, len));
    const double m = mean(means);
    double s = 0.0;
    for (double v : means) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(batches * (batches - 1)));
}

struct Estimate {
    double value = 0.0;
    double error = 0.0;
};

inline Estimate mean_with_error(std::span<const double> x, std::size_t batches = 32) {
    return {mean(x), batch_error(x, batches)};
}

/// Record indices for one non-overlapping block bootstrap resample of a
/// series of length n; block length keeps correlated runs together.
inline std::vector<std::size_t> block_resample(std::size_t n, std::size_t block, Engine& rng) {
    block = std::clamp<std::size_t>(block, 1, n);
    const std::size_t blocks = n / block;
    std::vector<std::size_t> idx;
    idx.reserve(blocks * block);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto pick = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(blocks));
        const std::size_t start = std::min(pick, blocks - 1) * block;
        for (std::size_t k = 0; k < block; ++k) idx.push_back(start + k);
    }
    return idx;
}

} // namespace qbdspin::stats
