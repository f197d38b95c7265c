#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace nab::rng {

// std::mt19937_64 output is pinned by the standard; the transforms below are
// spelled out (instead of std::*_distribution) so draws are reproducible
// across standard-library implementations.
using Engine = std::mt19937_64;

inline double unit(Engine& engine) {
    return static_cast<double>(engine() >> 11) * 0x1.0p-53;  // [0, 1), 53 bits
}

inline double uniform(Engine& engine, double lo, double hi) {
    return lo + (hi - lo) * unit(engine);
}

inline double normal(Engine& engine, double mean, double stddev) {
    // Box-Muller, cosine branch only; two draws per sample keeps the stream
    // position independent of any cached spare value.
    const double u1 = 1.0 - unit(engine);  // (0, 1], keeps log() finite
    const double u2 = unit(engine);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace nab::rng
