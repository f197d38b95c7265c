#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "nab/common.hpp"

namespace nab {

struct AdamParams {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Flat first/second moment storage; the owner assigns a contiguous slice to
// every parameter tensor and keeps those offsets fixed for the lifetime of a
// run. Moments are held in double regardless of the parameter precision.
struct AdamState {
    std::uint64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;

    void resize(std::size_t n) {
        step = 0;
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

// One bias-corrected Adam update over params[0..count) against the state
// slice starting at offset. The caller increments state.step exactly once per
// optimizer step, before the first slice of that step is applied.
template <typename T>
void adam_apply(AdamState& state, const AdamParams& hp, double lr, std::size_t offset, T* params,
                const T* grads, std::size_t count, const std::string& group) {
    require(state.step >= 1, "adam_apply: step counter must be advanced first");
    require(offset + count <= state.m.size() && state.m.size() == state.v.size(),
            "adam_apply: slice exceeds optimizer state");
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(static_cast<double>(grads[i]))) {
            throw std::invalid_argument("non-finite gradient in group '" + group + "'");
        }
    }
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(hp.beta1, t);
    const double bc2 = 1.0 - std::pow(hp.beta2, t);
    for (std::size_t i = 0; i < count; ++i) {
        const double g = static_cast<double>(grads[i]);
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        m = hp.beta1 * m + (1.0 - hp.beta1) * g;
        v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   lr * mhat / (std::sqrt(vhat) + hp.epsilon));
    }
}

}  // namespace nab
