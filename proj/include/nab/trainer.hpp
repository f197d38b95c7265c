#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nab/adam.hpp"
#include "nab/common.hpp"
#include "nab/encoder.hpp"
#include "nab/fourier.hpp"
#include "nab/geometry.hpp"
#include "nab/network.hpp"
#include "nab/projector.hpp"

namespace nab {

// Per-group learning rates. Defaults follow the 16-view CaCO3-style schedule:
// fast for the network and bin placement, slower for rotation and steepness,
// slowest for the height factors.
struct LearningRates {
    double net = 1.6e-3;
    double center = 1.6e-3;
    double side = 1.6e-3;
    double theta = 2e-4;
    double k = 2e-4;
    double lambda = 2e-5;
};

struct FreezeMask {
    bool net = false;
    bool center = false;
    bool side = false;
    bool theta = false;
    bool k = false;
    bool lambda = false;
};

struct TrainConfig {
    std::size_t epochs = 3000;
    LearningRates lr;
    FreezeMask freeze;
    std::uint64_t seed = 1;
    std::vector<std::size_t> checkpoint_epochs;  // empty -> {ceil(2/3 e), e}
    std::size_t grid_height = 64;
    std::size_t grid_width = 64;
    std::size_t bins = 128;
    std::vector<double> steepness_set = {25.0, 50.0, 75.0};
    std::vector<std::size_t> hidden_sizes = {64, 64, 64};
    AdamParams adam;
};

inline std::vector<std::size_t> resolve_checkpoint_epochs(const TrainConfig& config) {
    if (!config.checkpoint_epochs.empty()) {
        for (std::size_t e : config.checkpoint_epochs) {
            require(e >= 1 && e <= config.epochs, "checkpoint epochs must lie in [1, epochs]");
        }
        return config.checkpoint_epochs;
    }
    if (config.epochs == 0) return {};
    const std::size_t two_thirds = (2 * config.epochs + 2) / 3;
    if (two_thirds == config.epochs) return {config.epochs};
    return {two_thirds, config.epochs};
}

inline void validate_train_config(const TrainConfig& config) {
    require(config.grid_height > 0 && config.grid_width > 0, "grid size must be positive");
    require(config.bins >= 1, "need at least one bin");
    require(!config.steepness_set.empty(), "steepness set must be nonempty");
    auto positive_if_live = [](bool frozen, double lr, const char* name) {
        if (!frozen) require(lr > 0.0, std::string("learning rate for unfrozen group '") + name +
                                           "' must be positive");
    };
    positive_if_live(config.freeze.net, config.lr.net, "net");
    positive_if_live(config.freeze.center, config.lr.center, "center");
    positive_if_live(config.freeze.side, config.lr.side, "side");
    positive_if_live(config.freeze.theta, config.lr.theta, "theta");
    positive_if_live(config.freeze.k, config.lr.k, "k");
    positive_if_live(config.freeze.lambda, config.lr.lambda, "lambda");
}

inline std::vector<std::size_t> network_layer_sizes(std::size_t features,
                                                    const std::vector<std::size_t>& hidden) {
    std::vector<std::size_t> sizes;
    sizes.push_back(features);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(1);
    return sizes;
}

template <typename T>
struct LossAndGrads {
    double loss = 0.0;
    NetGradients<T> net;
    BinGradients<T> bins;
};

// Self-supervised objective: render the image from the current parameters,
// project it, and take the plain sum of squared sinogram residuals. The
// gradient chain is 2 A^T(AX - Y) into the network, then into the encoder.
template <typename T>
LossAndGrads<T> compute_loss_and_grads(const BinParameterSet<T>& bins,
                                       const NetworkParameters<T>& net,
                                       const CoordinateGrid<T>& grid, const ScanGeometry& geom,
                                       const Sinogram<T>& sino) {
    require(sino.rows == geom.views() && sino.cols == geom.detectors,
            "compute_loss_and_grads: sinogram shape does not match geometry");

    EncodeCache<T> cache;
    FeatureMatrix<T> features = encode_cached(grid, bins, cache);

    NetCache<T> net_cache;
    std::vector<T> outputs = net_forward(features, net, net_cache);
    require(outputs.size() == grid.height * grid.width,
            "compute_loss_and_grads: grid does not cover the image");

    Image<T> rendered{grid.height, grid.width, outputs};
    Sinogram<T> projected = forward_project(rendered, geom);

    double loss = 0.0;
    Sinogram<T> residual{sino.rows, sino.cols, std::vector<T>(sino.size(), T(0))};
    for (std::size_t i = 0; i < sino.size(); ++i) {
        const double r =
            static_cast<double>(projected.values[i]) - static_cast<double>(sino.values[i]);
        residual.values[i] = static_cast<T>(r);
        loss += r * r;
    }

    Image<T> sensitivity = back_project(residual, geom, grid.height, grid.width);
    std::vector<T> upstream(sensitivity.values.size());
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = T(2) * sensitivity.values[i];

    LossAndGrads<T> result;
    result.loss = loss;
    result.net = net_backward(net, net_cache, upstream);
    result.bins = encode_backward(grid, bins, result.net.features, cache);
    return result;
}

// Loss variant for a fixed feature map (the RFC baseline): only the network
// receives gradients.
template <typename T>
LossAndGrads<T> compute_loss_and_grads_fixed(const FeatureMatrix<T>& features,
                                             const NetworkParameters<T>& net,
                                             std::size_t height, std::size_t width,
                                             const ScanGeometry& geom, const Sinogram<T>& sino) {
    require(sino.rows == geom.views() && sino.cols == geom.detectors,
            "compute_loss_and_grads_fixed: sinogram shape does not match geometry");

    NetCache<T> net_cache;
    std::vector<T> outputs = net_forward(features, net, net_cache);
    require(outputs.size() == height * width,
            "compute_loss_and_grads_fixed: features do not cover the image");

    Image<T> rendered{height, width, outputs};
    Sinogram<T> projected = forward_project(rendered, geom);

    double loss = 0.0;
    Sinogram<T> residual{sino.rows, sino.cols, std::vector<T>(sino.size(), T(0))};
    for (std::size_t i = 0; i < sino.size(); ++i) {
        const double r =
            static_cast<double>(projected.values[i]) - static_cast<double>(sino.values[i]);
        residual.values[i] = static_cast<T>(r);
        loss += r * r;
    }

    Image<T> sensitivity = back_project(residual, geom, height, width);
    std::vector<T> upstream(sensitivity.values.size());
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] = T(2) * sensitivity.values[i];

    LossAndGrads<T> result;
    result.loss = loss;
    result.net = net_backward(net, net_cache, upstream);
    return result;
}

template <typename T>
struct TrainResult {
    Image<T> final_image;
    std::vector<double> loss_curve;
    std::vector<std::pair<std::size_t, Image<T>>> checkpoints;
    BinParameterSet<T> bins;
    FrequencyMatrix frequencies;
    NetworkParameters<T> net;
    AdamState adam;
    bool aborted = false;
    std::size_t abort_epoch = 0;
    std::string abort_reason;
};

namespace train_detail {

// Fixed optimizer-state layout: network tensors first (weights then bias per
// layer), then the seven bin arrays. Checkpoints rely on this order.
template <typename T>
std::size_t optimizer_extent(const NetworkParameters<T>& net, std::size_t bins) {
    return net.parameter_count() + 7 * bins;
}

template <typename T>
bool group_finite(const std::vector<T>& g) {
    return all_finite(g);
}

template <typename T>
std::string find_bad_group(const LossAndGrads<T>& grads, bool with_bins) {
    for (const auto& layer : grads.net.layers) {
        if (!group_finite(layer.weights) || !group_finite(layer.bias)) return "net";
    }
    if (!with_bins) return "";
    if (!group_finite(grads.bins.u) || !group_finite(grads.bins.v)) return "center";
    if (!group_finite(grads.bins.h) || !group_finite(grads.bins.w)) return "side";
    if (!group_finite(grads.bins.theta)) return "theta";
    if (!group_finite(grads.bins.k)) return "k";
    if (!group_finite(grads.bins.lambda)) return "lambda";
    return "";
}

template <typename T>
void step_network(AdamState& state, const AdamParams& hp, double lr, NetworkParameters<T>& net,
                  const NetGradients<T>& grads, std::size_t& offset) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        auto& layer = net.layers[l];
        adam_apply(state, hp, lr, offset, layer.weights.data(), grads.layers[l].weights.data(),
                   layer.weights.size(), "net");
        offset += layer.weights.size();
        adam_apply(state, hp, lr, offset, layer.bias.data(), grads.layers[l].bias.data(),
                   layer.bias.size(), "net");
        offset += layer.bias.size();
    }
}

}  // namespace train_detail

// Full-batch self-supervised training of the adaptive binning encoder plus
// network. Every epoch renders the whole grid, projects it, and takes one
// Adam step with per-group learning rates; frozen groups keep both their
// values and their optimizer moments untouched. A non-finite loss or gradient
// aborts the loop and the result keeps the last finite state.
template <typename T>
TrainResult<T> train(const TrainConfig& config, const Sinogram<T>& sino,
                     const ScanGeometry& geom) {
    validate_train_config(config);

    const CoordinateGrid<T> grid = make_grid<T>(config.grid_height, config.grid_width);
    TrainResult<T> result;
    result.bins = init_bins<T>(config.bins, config.steepness_set, config.seed);
    result.net =
        init_network<T>(network_layer_sizes(config.bins, config.hidden_sizes), config.seed + 1);
    result.adam.resize(train_detail::optimizer_extent(result.net, config.bins));

    const std::vector<std::size_t> snapshots = resolve_checkpoint_epochs(config);
    const std::size_t m = config.bins;

    auto render = [&]() {
        FeatureMatrix<T> features = encode(grid, result.bins);
        std::vector<T> outputs = net_forward(features, result.net);
        return Image<T>{config.grid_height, config.grid_width, std::move(outputs)};
    };

    Image<T> initial = render();
    result.final_image = initial;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        LossAndGrads<T> lg = compute_loss_and_grads(result.bins, result.net, grid, geom, sino);
        if (!std::isfinite(lg.loss)) {
            result.aborted = true;
            result.abort_epoch = epoch;
            result.abort_reason = "non-finite loss";
            break;
        }
        const std::string bad = train_detail::find_bad_group(lg, true);
        if (!bad.empty()) {
            result.aborted = true;
            result.abort_epoch = epoch;
            result.abort_reason = "non-finite gradient in group '" + bad + "'";
            break;
        }
        result.loss_curve.push_back(lg.loss);

        ++result.adam.step;
        std::size_t offset = 0;
        if (!config.freeze.net) {
            train_detail::step_network(result.adam, config.adam, config.lr.net, result.net,
                                       lg.net, offset);
        } else {
            offset += result.net.parameter_count();
        }
        auto bin_group = [&](bool frozen, double lr, std::vector<T>& p0, const std::vector<T>& g0,
                             std::vector<T>* p1, const std::vector<T>* g1, const char* name) {
            if (!frozen) {
                adam_apply(result.adam, config.adam, lr, offset, p0.data(), g0.data(), m, name);
            }
            offset += m;
            if (p1 != nullptr) {
                if (!frozen) {
                    adam_apply(result.adam, config.adam, lr, offset, p1->data(), g1->data(), m,
                               name);
                }
                offset += m;
            }
        };
        bin_group(config.freeze.center, config.lr.center, result.bins.u, lg.bins.u,
                  &result.bins.v, &lg.bins.v, "center");
        bin_group(config.freeze.side, config.lr.side, result.bins.h, lg.bins.h, &result.bins.w,
                  &lg.bins.w, "side");
        bin_group(config.freeze.theta, config.lr.theta, result.bins.theta, lg.bins.theta, nullptr,
                  nullptr, "theta");
        bin_group(config.freeze.k, config.lr.k, result.bins.k, lg.bins.k, nullptr, nullptr, "k");
        bin_group(config.freeze.lambda, config.lr.lambda, result.bins.lambda, lg.bins.lambda,
                  nullptr, nullptr, "lambda");
        project_constraints(result.bins);

        bool snapshot = false;
        for (std::size_t e : snapshots) snapshot = snapshot || e == epoch;
        if (snapshot || epoch == config.epochs) {
            Image<T> image = render();
            if (epoch == config.epochs) result.final_image = image;
            if (snapshot) result.checkpoints.emplace_back(epoch, std::move(image));
        }
    }
    if (result.aborted) {
        // Keep the last finite image available: the current parameters if
        // they still render cleanly, else the newest snapshot, else the
        // initial state.
        Image<T> current = render();
        if (all_finite(current.values)) {
            result.final_image = std::move(current);
        } else if (!result.checkpoints.empty()) {
            result.final_image = result.checkpoints.back().second;
        } else {
            result.final_image = std::move(initial);
        }
    }
    return result;
}

// RFC baseline: identical loop with the encoder replaced by a frozen random
// Fourier feature matrix, so only the network trains.
template <typename T>
TrainResult<T> train_rfc(const TrainConfig& config, const Sinogram<T>& sino,
                         const ScanGeometry& geom) {
    validate_train_config(config);
    require(config.bins % 2 == 0, "train_rfc: feature length must be even (sin/cos halves)");

    const CoordinateGrid<T> grid = make_grid<T>(config.grid_height, config.grid_width);
    TrainResult<T> result;
    result.frequencies = sample_frequencies(config.bins / 2, config.seed + 2);
    result.net =
        init_network<T>(network_layer_sizes(config.bins, config.hidden_sizes), config.seed + 1);
    result.adam.resize(result.net.parameter_count());

    const FeatureMatrix<T> features = rfc_encode(grid, result.frequencies);
    const std::vector<std::size_t> snapshots = resolve_checkpoint_epochs(config);

    auto render = [&]() {
        std::vector<T> outputs = net_forward(features, result.net);
        return Image<T>{config.grid_height, config.grid_width, std::move(outputs)};
    };

    Image<T> initial = render();
    result.final_image = initial;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        LossAndGrads<T> lg = compute_loss_and_grads_fixed(features, result.net,
                                                          config.grid_height, config.grid_width,
                                                          geom, sino);
        if (!std::isfinite(lg.loss)) {
            result.aborted = true;
            result.abort_epoch = epoch;
            result.abort_reason = "non-finite loss";
            break;
        }
        if (!train_detail::find_bad_group(lg, false).empty()) {
            result.aborted = true;
            result.abort_epoch = epoch;
            result.abort_reason = "non-finite gradient in group 'net'";
            break;
        }
        result.loss_curve.push_back(lg.loss);

        ++result.adam.step;
        std::size_t offset = 0;
        if (!config.freeze.net) {
            train_detail::step_network(result.adam, config.adam, config.lr.net, result.net,
                                       lg.net, offset);
        }

        bool snapshot = false;
        for (std::size_t e : snapshots) snapshot = snapshot || e == epoch;
        if (snapshot || epoch == config.epochs) {
            Image<T> image = render();
            if (epoch == config.epochs) result.final_image = image;
            if (snapshot) result.checkpoints.emplace_back(epoch, std::move(image));
        }
    }
    if (result.aborted) {
        Image<T> current = render();
        if (all_finite(current.values)) {
            result.final_image = std::move(current);
        } else if (!result.checkpoints.empty()) {
            result.final_image = result.checkpoints.back().second;
        } else {
            result.final_image = std::move(initial);
        }
    }
    return result;
}

}  // namespace nab
