#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nab/common.hpp"
#include "nab/geometry.hpp"
#include "nab/parallel.hpp"
#include "nab/random.hpp"

namespace nab {

inline constexpr double kMinSideLength = 1e-3;
inline constexpr double kMinSteepness = 1.0;

// Trainable state of the adaptive binning encoder: M rotatable smooth boxes,
// each with center (u,v), side lengths (h,w), steepness k, rotation theta and
// height factor lambda.
template <typename T>
struct BinParameterSet {
    std::size_t count = 0;
    std::vector<T> u, v, h, w, k, theta, lambda;

    void resize(std::size_t m) {
        count = m;
        u.assign(m, T(0));
        v.assign(m, T(0));
        h.assign(m, T(0));
        w.assign(m, T(0));
        k.assign(m, T(0));
        theta.assign(m, T(0));
        lambda.assign(m, T(0));
    }
};

template <typename T>
struct BinGradients {
    std::vector<T> u, v, h, w, k, theta, lambda;

    void resize(std::size_t m) {
        u.assign(m, T(0));
        v.assign(m, T(0));
        h.assign(m, T(0));
        w.assign(m, T(0));
        k.assign(m, T(0));
        theta.assign(m, T(0));
        lambda.assign(m, T(0));
    }
};

namespace enc_detail {

// tanh with an early-out deep in the saturated tails. The cutoffs sit well
// past the point where std::tanh already rounds to +-1 (19.07 for double,
// under 10 for float), so the result is bit-identical to std::tanh.
inline double fast_tanh(double x) {
    if (x > 20.0) return 1.0;
    if (x < -20.0) return -1.0;
    return std::tanh(x);
}

inline float fast_tanh(float x) {
    if (x > 12.0f) return 1.0f;
    if (x < -12.0f) return -1.0f;
    return std::tanh(x);
}

}  // namespace enc_detail

template <typename T>
void validate_bins(const BinParameterSet<T>& params) {
    require(params.count >= 1, "bin set must be nonempty");
    const std::size_t m = params.count;
    require(params.u.size() == m && params.v.size() == m && params.h.size() == m &&
                params.w.size() == m && params.k.size() == m && params.theta.size() == m &&
                params.lambda.size() == m,
            "bin parameter arrays must all have length M");
    require(all_finite(params.u) && all_finite(params.v) && all_finite(params.h) &&
                all_finite(params.w) && all_finite(params.k) && all_finite(params.theta) &&
                all_finite(params.lambda),
            "bin parameters must be finite");
    for (std::size_t i = 0; i < m; ++i) {
        require(params.h[i] >= T(kMinSideLength) && params.w[i] >= T(kMinSideLength),
                "bin side lengths must be at least 1e-3");
        require(params.k[i] >= T(kMinSteepness), "bin steepness must be at least 1");
    }
}

// Clamp the constrained groups back into their feasible region. Called after
// every optimizer step.
template <typename T>
void project_constraints(BinParameterSet<T>& params) {
    for (std::size_t i = 0; i < params.count; ++i) {
        if (params.h[i] < T(kMinSideLength)) params.h[i] = T(kMinSideLength);
        if (params.w[i] < T(kMinSideLength)) params.w[i] = T(kMinSideLength);
        if (params.k[i] < T(kMinSteepness)) params.k[i] = T(kMinSteepness);
    }
}

// One smooth box: the query point is shifted to the bin center and rotated by
// theta, then each axis contributes a difference of shifted tanh steps,
//   g = [h_step(s_x + h/2) - h_step(s_x - h/2)] * [same in s_y with w]
// with h_step(s) = tanh(k s) / 2.
template <typename T>
T eval_bin(T cx, T cy, T u, T v, T h, T w, T k, T theta) {
    require(std::isfinite(static_cast<double>(cx)) && std::isfinite(static_cast<double>(cy)),
            "eval_bin: coordinates must be finite");
    require(std::isfinite(static_cast<double>(u)) && std::isfinite(static_cast<double>(v)) &&
                std::isfinite(static_cast<double>(h)) && std::isfinite(static_cast<double>(w)) &&
                std::isfinite(static_cast<double>(k)) && std::isfinite(static_cast<double>(theta)),
            "eval_bin: bin parameters must be finite");
    const T ct = std::cos(theta);
    const T st = std::sin(theta);
    const T dx = cx - u;
    const T dy = cy - v;
    const T sx = ct * dx - st * dy;
    const T sy = st * dx + ct * dy;
    const T gx = T(0.5) * (enc_detail::fast_tanh(k * (sx + h / T(2))) -
                           enc_detail::fast_tanh(k * (sx - h / T(2))));
    const T gy = T(0.5) * (enc_detail::fast_tanh(k * (sy + w / T(2))) -
                           enc_detail::fast_tanh(k * (sy - w / T(2))));
    return gx * gy;
}

// Saved tanh values from the forward pass, one quadruple per (coordinate,
// bin) pair. The backward pass rebuilds everything else from these.
template <typename T>
struct EncodeCache {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> txp, txm, typ, tym;

    void resize(std::size_t r, std::size_t c) {
        rows = r;
        cols = c;
        txp.assign(r * c, T(0));
        txm.assign(r * c, T(0));
        typ.assign(r * c, T(0));
        tym.assign(r * c, T(0));
    }
};

namespace enc_detail {

template <typename T, bool WithCache>
void encode_impl(const CoordinateGrid<T>& grid, const BinParameterSet<T>& params,
                 FeatureMatrix<T>& features, EncodeCache<T>* cache) {
    validate_bins(params);
    const std::size_t points = grid.size();
    const std::size_t m = params.count;
    require(points > 0, "encode: empty grid");
    require(all_finite(grid.xs) && all_finite(grid.ys), "encode: grid must be finite");

    features.rows = points;
    features.cols = m;
    features.values.assign(points * m, T(0));
    if constexpr (WithCache) cache->resize(points, m);

    std::vector<T> ct(m), st(m);
    for (std::size_t i = 0; i < m; ++i) {
        ct[i] = std::cos(params.theta[i]);
        st[i] = std::sin(params.theta[i]);
    }

    parallel::for_each_block(
        points, parallel::kRowBlock, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const T x = grid.xs[p];
                const T y = grid.ys[p];
                T* row = features.row(p);
                for (std::size_t i = 0; i < m; ++i) {
                    const T dx = x - params.u[i];
                    const T dy = y - params.v[i];
                    const T sx = ct[i] * dx - st[i] * dy;
                    const T sy = st[i] * dx + ct[i] * dy;
                    const T kk = params.k[i];
                    const T txp = fast_tanh(kk * (sx + params.h[i] / T(2)));
                    const T txm = fast_tanh(kk * (sx - params.h[i] / T(2)));
                    const T typ = fast_tanh(kk * (sy + params.w[i] / T(2)));
                    const T tym = fast_tanh(kk * (sy - params.w[i] / T(2)));
                    const T g = T(0.25) * (txp - txm) * (typ - tym);
                    row[i] = params.lambda[i] * g;
                    if constexpr (WithCache) {
                        const std::size_t at = p * m + i;
                        cache->txp[at] = txp;
                        cache->txm[at] = txm;
                        cache->typ[at] = typ;
                        cache->tym[at] = tym;
                    }
                }
            }
        });
}

}  // namespace enc_detail

template <typename T>
FeatureMatrix<T> encode(const CoordinateGrid<T>& grid, const BinParameterSet<T>& params) {
    FeatureMatrix<T> features;
    enc_detail::encode_impl<T, false>(grid, params, features, nullptr);
    return features;
}

template <typename T>
FeatureMatrix<T> encode_cached(const CoordinateGrid<T>& grid, const BinParameterSet<T>& params,
                               EncodeCache<T>& cache) {
    FeatureMatrix<T> features;
    enc_detail::encode_impl<T, true>(grid, params, features, &cache);
    return features;
}

// Accumulates dL/d{u,v,h,w,k,theta,lambda} for L = sum(upstream .* encode).
// Coordinate blocks reduce into per-block partials that are folded in block
// order, so the sums are bit-identical at any thread count.
template <typename T>
BinGradients<T> encode_backward(const CoordinateGrid<T>& grid, const BinParameterSet<T>& params,
                                const FeatureMatrix<T>& upstream, const EncodeCache<T>& cache) {
    validate_bins(params);
    const std::size_t points = grid.size();
    const std::size_t m = params.count;
    require(upstream.rows == points && upstream.cols == m,
            "encode_backward: upstream shape must be P x M");
    require(cache.rows == points && cache.cols == m,
            "encode_backward: cache does not match grid and bin set");

    std::vector<T> ct(m), st(m);
    for (std::size_t i = 0; i < m; ++i) {
        ct[i] = std::cos(params.theta[i]);
        st[i] = std::sin(params.theta[i]);
    }

    const std::size_t blocks = parallel::block_count(points, parallel::kRowBlock);
    std::vector<BinGradients<double>> partials(blocks);

    parallel::for_each_block(
        points, parallel::kRowBlock, [&](std::size_t block, std::size_t begin, std::size_t end) {
            BinGradients<double>& acc = partials[block];
            acc.resize(m);
            for (std::size_t p = begin; p < end; ++p) {
                const T x = grid.xs[p];
                const T y = grid.ys[p];
                const T* up = upstream.row(p);
                for (std::size_t i = 0; i < m; ++i) {
                    const std::size_t at = p * m + i;
                    const double txp = static_cast<double>(cache.txp[at]);
                    const double txm = static_cast<double>(cache.txm[at]);
                    const double typ = static_cast<double>(cache.typ[at]);
                    const double tym = static_cast<double>(cache.tym[at]);
                    const double gx = 0.5 * (txp - txm);
                    const double gy = 0.5 * (typ - tym);
                    const double u_pi = static_cast<double>(up[i]);
                    if (u_pi == 0.0) continue;

                    acc.lambda[i] += u_pi * gx * gy;

                    const double dxp = 1.0 - txp * txp;
                    const double dxm = 1.0 - txm * txm;
                    const double dyp = 1.0 - typ * typ;
                    const double dym = 1.0 - tym * tym;
                    if (dxp == 0.0 && dxm == 0.0 && dyp == 0.0 && dym == 0.0) continue;

                    const double kk = static_cast<double>(params.k[i]);
                    const double half_h = 0.5 * static_cast<double>(params.h[i]);
                    const double half_w = 0.5 * static_cast<double>(params.w[i]);
                    const double c = static_cast<double>(ct[i]);
                    const double s = static_cast<double>(st[i]);
                    const double dx = static_cast<double>(x) - static_cast<double>(params.u[i]);
                    const double dy = static_cast<double>(y) - static_cast<double>(params.v[i]);
                    const double sx = c * dx - s * dy;
                    const double sy = s * dx + c * dy;

                    const double g = u_pi * static_cast<double>(params.lambda[i]);
                    const double dgx_dsx = 0.5 * kk * (dxp - dxm);
                    const double dgy_dsy = 0.5 * kk * (dyp - dym);
                    const double dgx_dh = 0.25 * kk * (dxp + dxm);
                    const double dgy_dw = 0.25 * kk * (dyp + dym);
                    const double dgx_dk = 0.5 * (dxp * (sx + half_h) - dxm * (sx - half_h));
                    const double dgy_dk = 0.5 * (dyp * (sy + half_w) - dym * (sy - half_w));

                    acc.u[i] += g * (dgx_dsx * (-c) * gy + gx * dgy_dsy * (-s));
                    acc.v[i] += g * (dgx_dsx * s * gy + gx * dgy_dsy * (-c));
                    acc.h[i] += g * dgx_dh * gy;
                    acc.w[i] += g * gx * dgy_dw;
                    acc.k[i] += g * (dgx_dk * gy + gx * dgy_dk);
                    acc.theta[i] += g * (dgx_dsx * (-sy) * gy + gx * dgy_dsy * sx);
                }
            }
        });

    BinGradients<T> grads;
    grads.resize(m);
    for (std::size_t b = 0; b < blocks; ++b) {
        const BinGradients<double>& acc = partials[b];
        for (std::size_t i = 0; i < m; ++i) {
            grads.u[i] += static_cast<T>(acc.u[i]);
            grads.v[i] += static_cast<T>(acc.v[i]);
            grads.h[i] += static_cast<T>(acc.h[i]);
            grads.w[i] += static_cast<T>(acc.w[i]);
            grads.k[i] += static_cast<T>(acc.k[i]);
            grads.theta[i] += static_cast<T>(acc.theta[i]);
            grads.lambda[i] += static_cast<T>(acc.lambda[i]);
        }
    }
    return grads;
}

template <typename T>
BinGradients<T> encode_backward(const CoordinateGrid<T>& grid, const BinParameterSet<T>& params,
                                const FeatureMatrix<T>& upstream) {
    EncodeCache<T> cache;
    encode_cached(grid, params, cache);
    return encode_backward(grid, params, upstream, cache);
}

// L1 distance from a feature row to the nearest vector with entries in {0,1}.
template <typename T>
T binary_distance(const T* row, std::size_t m) {
    T total = T(0);
    for (std::size_t i = 0; i < m; ++i) {
        const T d0 = std::abs(row[i]);
        const T d1 = std::abs(row[i] - T(1));
        total += d0 < d1 ? d0 : d1;
    }
    return total;
}

template <typename T>
T binary_distance(const std::vector<T>& row) {
    return binary_distance(row.data(), row.size());
}

// Initial bin population: centers and sides uniform over the object domain,
// rotations tightly clustered near zero, heights uniform in [0,1), steepness
// cycling through the configured set.
template <typename T = double>
BinParameterSet<T> init_bins(std::size_t m, const std::vector<double>& steepness_set,
                             std::uint64_t seed) {
    require(m >= 1, "init_bins: need at least one bin");
    require(!steepness_set.empty(), "init_bins: steepness set must be nonempty");
    for (double k : steepness_set) {
        require(std::isfinite(k) && k >= kMinSteepness, "init_bins: steepness must be >= 1");
    }

    BinParameterSet<T> params;
    params.resize(m);
    rng::Engine engine(seed);
    for (std::size_t i = 0; i < m; ++i) {
        params.u[i] = static_cast<T>(rng::uniform(engine, -0.9, 0.9));
        params.v[i] = static_cast<T>(rng::uniform(engine, -0.9, 0.9));
        params.h[i] = static_cast<T>(rng::uniform(engine, 0.05, 0.5));
        params.w[i] = static_cast<T>(rng::uniform(engine, 0.05, 0.5));
        params.theta[i] = static_cast<T>(rng::normal(engine, 0.0, 0.05));
        params.lambda[i] = static_cast<T>(rng::unit(engine));
        params.k[i] = static_cast<T>(steepness_set[i % steepness_set.size()]);
    }
    return params;
}

}  // namespace nab
