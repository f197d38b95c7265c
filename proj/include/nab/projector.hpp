#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "nab/common.hpp"
#include "nab/parallel.hpp"

namespace nab {

// Parallel-beam scan over the [-1,1]^2 image domain. A ray for view i and
// detector j is the line { (x,y) : x*cos(a_i) + y*sin(a_i) = t_j } with
// t_j = (j - (detectors-1)/2) * spacing.
struct ScanGeometry {
    std::size_t detectors = 0;
    double spacing = 0.0;
    std::vector<double> angles;

    std::size_t views() const { return angles.size(); }
    std::size_t ray_count() const { return angles.size() * detectors; }
    double detector_offset(std::size_t j) const {
        return (static_cast<double>(j) - 0.5 * static_cast<double>(detectors - 1)) * spacing;
    }
};

inline ScanGeometry default_geometry(std::size_t height, std::size_t width, std::size_t views) {
    require(height > 0 && width > 0 && views > 0, "default_geometry: dimensions must be positive");
    const std::size_t n = std::max(height, width);
    std::size_t detectors =
        static_cast<std::size_t>(std::ceil(std::numbers::sqrt2 * static_cast<double>(n)));
    if (detectors % 2 != 0) ++detectors;
    ScanGeometry geom;
    geom.detectors = detectors;
    geom.spacing = 2.0 / static_cast<double>(n);
    geom.angles.resize(views);
    for (std::size_t i = 0; i < views; ++i) {
        geom.angles[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(views);
    }
    return geom;
}

namespace proj_detail {

// Joseph's method: march the axis the ray is most aligned with, one sample
// per slab, linear interpolation across the other axis. Both transport
// directions enumerate the exact same (pixel, weight) pairs through this one
// function, which is what makes back_project the exact transpose of
// forward_project.
template <typename Fn>
void for_ray_samples(std::size_t height, std::size_t width, double angle, double t, Fn&& emit) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double h = static_cast<double>(height);
    const double w = static_cast<double>(width);
    if (std::abs(c) >= std::abs(s)) {
        // Near-vertical ray: one sample per image row, interpolate columns.
        const double step = (2.0 / h) / std::abs(c);
        for (std::size_t r = 0; r < height; ++r) {
            const double y = -1.0 + (2.0 * static_cast<double>(r) + 1.0) / h;
            const double x = (t - y * s) / c;
            const double col = (x + 1.0) * 0.5 * w - 0.5;
            const double floor_col = std::floor(col);
            const long c0 = static_cast<long>(floor_col);
            const double frac = col - floor_col;
            if (c0 >= 0 && c0 < static_cast<long>(width) && frac != 1.0) {
                emit(r * width + static_cast<std::size_t>(c0), (1.0 - frac) * step);
            }
            if (c0 + 1 >= 0 && c0 + 1 < static_cast<long>(width) && frac != 0.0) {
                emit(r * width + static_cast<std::size_t>(c0 + 1), frac * step);
            }
        }
    } else {
        // Near-horizontal ray: one sample per image column, interpolate rows.
        const double step = (2.0 / w) / std::abs(s);
        for (std::size_t col = 0; col < width; ++col) {
            const double x = -1.0 + (2.0 * static_cast<double>(col) + 1.0) / w;
            const double y = (t - x * c) / s;
            const double row = (y + 1.0) * 0.5 * h - 0.5;
            const double floor_row = std::floor(row);
            const long r0 = static_cast<long>(floor_row);
            const double frac = row - floor_row;
            if (r0 >= 0 && r0 < static_cast<long>(height) && frac != 1.0) {
                emit(static_cast<std::size_t>(r0) * width + col, (1.0 - frac) * step);
            }
            if (r0 + 1 >= 0 && r0 + 1 < static_cast<long>(height) && frac != 0.0) {
                emit(static_cast<std::size_t>(r0 + 1) * width + col, frac * step);
            }
        }
    }
}

}  // namespace proj_detail

template <typename T>
Sinogram<T> forward_project(const Image<T>& image, const ScanGeometry& geom) {
    require(image.height > 0 && image.width > 0, "forward_project: empty image");
    require(image.values.size() == image.size(), "forward_project: value count mismatch");
    require(geom.detectors > 0 && geom.views() > 0, "forward_project: empty geometry");
    require(geom.spacing > 0.0, "forward_project: spacing must be positive");

    Sinogram<T> sino{geom.views(), geom.detectors, std::vector<T>(geom.ray_count(), T(0))};
    const T* pixels = image.values.data();
    parallel::for_each_block(geom.ray_count(), parallel::kRowBlock,
                             [&](std::size_t, std::size_t begin, std::size_t end) {
                                 for (std::size_t ray = begin; ray < end; ++ray) {
                                     const std::size_t view = ray / geom.detectors;
                                     const std::size_t det = ray % geom.detectors;
                                     double acc = 0.0;
                                     proj_detail::for_ray_samples(
                                         image.height, image.width, geom.angles[view],
                                         geom.detector_offset(det),
                                         [&](std::size_t idx, double weight) {
                                             acc += weight * static_cast<double>(pixels[idx]);
                                         });
                                     sino.values[ray] = static_cast<T>(acc);
                                 }
                             });
    return sino;
}

template <typename T>
Image<T> back_project(const Sinogram<T>& sino, const ScanGeometry& geom, std::size_t height,
                      std::size_t width) {
    require(height > 0 && width > 0, "back_project: empty image dimensions");
    require(sino.rows == geom.views() && sino.cols == geom.detectors,
            "back_project: sinogram shape does not match geometry");
    require(sino.values.size() == sino.size(), "back_project: value count mismatch");
    require(geom.spacing > 0.0, "back_project: spacing must be positive");

    Image<T> image{height, width, std::vector<T>(height * width, T(0))};

    // Rays scatter into shared pixels, so each block accumulates into its own
    // partial image and the partials are folded in block order afterwards.
    // The fold order is fixed by block index, never by thread schedule, which
    // keeps the result bit-identical across thread counts. Blocks are
    // processed in bounded batches so memory stays proportional to the batch.
    const std::size_t blocks = parallel::block_count(geom.ray_count(), parallel::kRowBlock);
    constexpr std::size_t kBatch = 64;
    std::vector<std::vector<double>> partials(std::min(blocks, kBatch));
    for (auto& p : partials) p.assign(height * width, 0.0);

    for (std::size_t batch_start = 0; batch_start < blocks; batch_start += kBatch) {
        const std::size_t batch = std::min(kBatch, blocks - batch_start);
        parallel::for_each_block(
            batch * parallel::kRowBlock, parallel::kRowBlock,
            [&](std::size_t local_block, std::size_t begin, std::size_t end) {
                std::vector<double>& partial = partials[local_block];
                const std::size_t offset = batch_start * parallel::kRowBlock;
                for (std::size_t ray = offset + begin;
                     ray < std::min(offset + end, geom.ray_count()); ++ray) {
                    const std::size_t view = ray / geom.detectors;
                    const std::size_t det = ray % geom.detectors;
                    const double value = static_cast<double>(sino.values[ray]);
                    proj_detail::for_ray_samples(height, width, geom.angles[view],
                                                 geom.detector_offset(det),
                                                 [&](std::size_t idx, double weight) {
                                                     partial[idx] += weight * value;
                                                 });
                }
            });
        for (std::size_t b = 0; b < batch; ++b) {
            std::vector<double>& partial = partials[b];
            for (std::size_t i = 0; i < image.size(); ++i) {
                image.values[i] += static_cast<T>(partial[i]);
                partial[i] = 0.0;
            }
        }
    }
    return image;
}

}  // namespace nab
