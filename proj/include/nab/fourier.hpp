#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "nab/common.hpp"
#include "nab/geometry.hpp"
#include "nab/parallel.hpp"
#include "nab/random.hpp"

namespace nab {

// Random Fourier coding frequencies: T rows of (fx, fy), drawn once from
// N(0, 4^2) and fixed for the rest of training.
struct FrequencyMatrix {
    std::size_t count = 0;
    std::vector<double> entries;  // row-major T x 2

    double fx(std::size_t i) const { return entries[2 * i]; }
    double fy(std::size_t i) const { return entries[2 * i + 1]; }
};

inline FrequencyMatrix sample_frequencies(std::size_t count, std::uint64_t seed,
                                          double stddev = 4.0) {
    require(count >= 1, "sample_frequencies: need at least one frequency");
    require(stddev > 0.0, "sample_frequencies: stddev must be positive");
    FrequencyMatrix freq;
    freq.count = count;
    freq.entries.resize(2 * count);
    rng::Engine engine(seed);
    for (double& e : freq.entries) e = rng::normal(engine, 0.0, stddev);
    return freq;
}

// Feature row = [sin(2 pi W c) ; cos(2 pi W c)], giving 2T columns.
template <typename T>
FeatureMatrix<T> rfc_encode(const CoordinateGrid<T>& grid, const FrequencyMatrix& freq) {
    require(freq.count >= 1 && freq.entries.size() == 2 * freq.count,
            "rfc_encode: invalid frequency matrix");
    require(grid.size() > 0, "rfc_encode: empty grid");

    const std::size_t points = grid.size();
    const std::size_t t = freq.count;
    FeatureMatrix<T> features{points, 2 * t, std::vector<T>(points * 2 * t, T(0))};

    parallel::for_each_block(
        points, parallel::kRowBlock, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const double x = static_cast<double>(grid.xs[p]);
                const double y = static_cast<double>(grid.ys[p]);
                T* row = features.row(p);
                for (std::size_t i = 0; i < t; ++i) {
                    const double arg = 2.0 * std::numbers::pi * (freq.fx(i) * x + freq.fy(i) * y);
                    row[i] = static_cast<T>(std::sin(arg));
                    row[t + i] = static_cast<T>(std::cos(arg));
                }
            }
        });
    return features;
}

}  // namespace nab
