#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nab/common.hpp"
#include "nab/parallel.hpp"
#include "nab/random.hpp"

namespace nab {

// Fully connected ReLU network ending in a single affine output unit.
template <typename T>
struct NetworkParameters {
    struct Layer {
        std::size_t fan_in = 0;
        std::size_t fan_out = 0;
        std::vector<T> weights;  // row-major fan_out x fan_in
        std::vector<T> bias;     // fan_out
    };
    std::vector<Layer> layers;

    std::vector<std::size_t> layer_sizes() const {
        std::vector<std::size_t> sizes;
        if (layers.empty()) return sizes;
        sizes.push_back(layers.front().fan_in);
        for (const Layer& l : layers) sizes.push_back(l.fan_out);
        return sizes;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }
};

template <typename T>
void validate_network(const NetworkParameters<T>& params) {
    require(!params.layers.empty(), "network must have at least one layer");
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        require(layer.fan_in >= 1 && layer.fan_out >= 1, "layer dimensions must be positive");
        require(layer.weights.size() == layer.fan_in * layer.fan_out &&
                    layer.bias.size() == layer.fan_out,
                "layer array sizes must match dimensions");
        require(all_finite(layer.weights) && all_finite(layer.bias),
                "network parameters must be finite");
        if (l + 1 < params.layers.size()) {
            require(params.layers[l + 1].fan_in == layer.fan_out,
                    "consecutive layers must be dimension-compatible");
        }
    }
    require(params.layers.back().fan_out == 1, "final layer must output a single value");
}

// Weights uniform over +-sqrt(6/fan_in), biases zero.
template <typename T = double>
NetworkParameters<T> init_network(const std::vector<std::size_t>& layer_sizes,
                                  std::uint64_t seed) {
    require(layer_sizes.size() >= 2, "init_network: need input and output sizes");
    for (std::size_t s : layer_sizes) require(s >= 1, "init_network: sizes must be positive");
    require(layer_sizes.back() == 1, "init_network: final size must be 1");

    NetworkParameters<T> params;
    rng::Engine engine(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        typename NetworkParameters<T>::Layer layer;
        layer.fan_in = layer_sizes[l];
        layer.fan_out = layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in));
        layer.weights.resize(layer.fan_in * layer.fan_out);
        for (T& wv : layer.weights) wv = static_cast<T>(rng::uniform(engine, -bound, bound));
        layer.bias.assign(layer.fan_out, T(0));
        params.layers.push_back(std::move(layer));
    }
    return params;
}

// Activations recorded by the forward pass: stage 0 is a copy of the input
// rows, stage l is the post-ReLU output of hidden layer l. For ReLU the
// pre-activation sign is recoverable from the stage values (z > 0 iff a > 0),
// so these are all the backward pass needs.
template <typename T>
struct NetCache {
    std::size_t rows = 0;
    std::vector<std::size_t> sizes;
    std::vector<std::vector<T>> stages;
};

template <typename T>
std::vector<T> net_forward(const FeatureMatrix<T>& features, const NetworkParameters<T>& params,
                           NetCache<T>& cache) {
    validate_network(params);
    require(features.cols == params.layers.front().fan_in,
            "net_forward: feature width must match first layer fan-in");
    require(features.rows > 0, "net_forward: empty feature matrix");

    const std::size_t rows = features.rows;
    const std::size_t hidden = params.layers.size() - 1;
    cache.rows = rows;
    cache.sizes = params.layer_sizes();
    cache.stages.assign(hidden + 1, {});
    cache.stages[0] = features.values;
    for (std::size_t l = 0; l < hidden; ++l) {
        cache.stages[l + 1].assign(rows * params.layers[l].fan_out, T(0));
    }

    std::vector<T> outputs(rows, T(0));
    parallel::for_each_block(
        rows, parallel::kRowBlock, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t l = 0; l < params.layers.size(); ++l) {
                const auto& layer = params.layers[l];
                const bool is_output = l + 1 == params.layers.size();
                const std::vector<T>& in = cache.stages[l];
                for (std::size_t p = begin; p < end; ++p) {
                    const T* a = in.data() + p * layer.fan_in;
                    for (std::size_t n = 0; n < layer.fan_out; ++n) {
                        const T* wrow = layer.weights.data() + n * layer.fan_in;
                        T z = layer.bias[n];
                        for (std::size_t i = 0; i < layer.fan_in; ++i) z += wrow[i] * a[i];
                        if (is_output) {
                            outputs[p] = z;
                        } else {
                            cache.stages[l + 1][p * layer.fan_out + n] = z > T(0) ? z : T(0);
                        }
                    }
                }
            }
        });
    return outputs;
}

template <typename T>
std::vector<T> net_forward(const FeatureMatrix<T>& features, const NetworkParameters<T>& params) {
    NetCache<T> cache;
    return net_forward(features, params, cache);
}

template <typename T>
struct NetGradients {
    struct Layer {
        std::vector<T> weights;
        std::vector<T> bias;
    };
    std::vector<Layer> layers;
    FeatureMatrix<T> features;
};

// Reverse-mode pass for L with dL/d(output_p) = upstream[p]. ReLU's
// subgradient at exactly zero is taken as zero.
//
// Two phases, both deterministic at any thread count: rows are independent
// when computing the per-layer delta matrices, and each weight row is owned
// by exactly one task when the deltas are contracted against the stages, with
// the row sum always running in coordinate order.
template <typename T>
NetGradients<T> net_backward(const NetworkParameters<T>& params, const NetCache<T>& cache,
                             const std::vector<T>& upstream) {
    validate_network(params);
    require(cache.sizes == params.layer_sizes(), "net_backward: cache does not match network");
    require(cache.rows > 0 && upstream.size() == cache.rows,
            "net_backward: upstream length must match cached batch");
    const std::size_t num_layers = params.layers.size();
    require(cache.stages.size() == num_layers, "net_backward: malformed cache");
    for (std::size_t l = 0; l < num_layers; ++l) {
        require(cache.stages[l].size() == cache.rows * cache.sizes[l],
                "net_backward: malformed cache stage");
    }

    const std::size_t rows = cache.rows;

    NetGradients<T> grads;
    grads.layers.resize(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        grads.layers[l].weights.assign(params.layers[l].weights.size(), T(0));
        grads.layers[l].bias.assign(params.layers[l].bias.size(), T(0));
    }
    grads.features.rows = rows;
    grads.features.cols = params.layers.front().fan_in;
    grads.features.values.assign(rows * grads.features.cols, T(0));

    // deltas[l][p,n] = dL/d(pre-activation of layer l, unit n, row p)
    std::vector<std::vector<T>> deltas(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        deltas[l].assign(rows * params.layers[l].fan_out, T(0));
    }

    parallel::for_each_block(
        rows, parallel::kRowBlock, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                deltas[num_layers - 1][p] = upstream[p];
                for (std::size_t l = num_layers; l-- > 0;) {
                    const auto& layer = params.layers[l];
                    const T* d = deltas[l].data() + p * layer.fan_out;
                    T* below = l > 0 ? deltas[l - 1].data() + p * layer.fan_in
                                     : grads.features.row(p);
                    for (std::size_t n = 0; n < layer.fan_out; ++n) {
                        if (d[n] == T(0)) continue;
                        const T* wrow = layer.weights.data() + n * layer.fan_in;
                        for (std::size_t i = 0; i < layer.fan_in; ++i) below[i] += d[n] * wrow[i];
                    }
                    if (l > 0) {
                        const T* a = cache.stages[l].data() + p * layer.fan_in;
                        for (std::size_t i = 0; i < layer.fan_in; ++i) {
                            if (a[i] <= T(0)) below[i] = T(0);
                        }
                    }
                }
            }
        });

    for (std::size_t l = 0; l < num_layers; ++l) {
        const auto& layer = params.layers[l];
        const std::vector<T>& delta = deltas[l];
        const std::vector<T>& stage = cache.stages[l];
        auto& grad = grads.layers[l];
        parallel::for_each_block(
            layer.fan_out, parallel::kRowBlock,
            [&](std::size_t, std::size_t begin, std::size_t end) {
                for (std::size_t n = begin; n < end; ++n) {
                    double db = 0.0;
                    std::vector<double> dw(layer.fan_in, 0.0);
                    for (std::size_t p = 0; p < rows; ++p) {
                        const double dv = static_cast<double>(delta[p * layer.fan_out + n]);
                        if (dv == 0.0) continue;
                        db += dv;
                        const T* a = stage.data() + p * layer.fan_in;
                        for (std::size_t i = 0; i < layer.fan_in; ++i) {
                            dw[i] += dv * static_cast<double>(a[i]);
                        }
                    }
                    grad.bias[n] = static_cast<T>(db);
                    T* dwrow = grad.weights.data() + n * layer.fan_in;
                    for (std::size_t i = 0; i < layer.fan_in; ++i) dwrow[i] = static_cast<T>(dw[i]);
                }
            });
    }
    return grads;
}

}  // namespace nab
