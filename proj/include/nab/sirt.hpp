#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "nab/common.hpp"
#include "nab/projector.hpp"

namespace nab {

// Simultaneous iterative reconstruction with the usual row/column inverse
// weights and a nonnegativity clamp after every update:
//
//   x <- max(0, x + C .* A^T ( R .* (y - A x) ))
//
// R = 1 / A(ones image), C = 1 / A^T(ones sinogram), with zero sums mapped
// to zero weight so rays and pixels the system never touches stay inert.
template <typename T>
Image<T> sirt_reconstruct(const Sinogram<T>& sino, const ScanGeometry& geom, std::size_t height,
                          std::size_t width, std::size_t iterations,
                          std::vector<double>* residual_norms = nullptr) {
    require(sino.rows == geom.views() && sino.cols == geom.detectors,
            "sirt_reconstruct: sinogram shape does not match geometry");
    if (residual_norms != nullptr) residual_norms->clear();

    Image<T> ones_image{height, width, std::vector<T>(height * width, T(1))};
    Sinogram<T> row_sums = forward_project(ones_image, geom);
    std::vector<T> ray_weight(row_sums.values.size());
    for (std::size_t i = 0; i < ray_weight.size(); ++i) {
        ray_weight[i] = row_sums.values[i] > T(0) ? T(1) / row_sums.values[i] : T(0);
    }

    Sinogram<T> ones_sino{geom.views(), geom.detectors, std::vector<T>(geom.ray_count(), T(1))};
    Image<T> col_sums = back_project(ones_sino, geom, height, width);
    std::vector<T> pixel_weight(col_sums.values.size());
    for (std::size_t i = 0; i < pixel_weight.size(); ++i) {
        pixel_weight[i] = col_sums.values[i] > T(0) ? T(1) / col_sums.values[i] : T(0);
    }

    Image<T> x{height, width, std::vector<T>(height * width, T(0))};
    Sinogram<T> residual{geom.views(), geom.detectors, std::vector<T>(geom.ray_count(), T(0))};
    for (std::size_t it = 0; it < iterations; ++it) {
        Sinogram<T> projected = forward_project(x, geom);
        if (residual_norms != nullptr) {
            double sq = 0.0;
            for (std::size_t i = 0; i < projected.values.size(); ++i) {
                const double d = static_cast<double>(sino.values[i]) -
                                 static_cast<double>(projected.values[i]);
                sq += d * d;
            }
            residual_norms->push_back(std::sqrt(sq));
        }
        for (std::size_t i = 0; i < residual.values.size(); ++i) {
            residual.values[i] = (sino.values[i] - projected.values[i]) * ray_weight[i];
        }
        Image<T> update = back_project(residual, geom, height, width);
        for (std::size_t i = 0; i < x.values.size(); ++i) {
            x.values[i] += pixel_weight[i] * update.values[i];
            if (x.values[i] < T(0)) x.values[i] = T(0);
        }
    }
    return x;
}

}  // namespace nab
