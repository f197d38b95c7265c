#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "nab/common.hpp"

namespace nab {

template <typename T>
double data_range(const Image<T>& image) {
    require(image.size() > 0, "data_range: empty image");
    const auto [lo, hi] = std::minmax_element(image.values.begin(), image.values.end());
    return static_cast<double>(*hi) - static_cast<double>(*lo);
}

// 10 log10(max^2 / mse). Identical inputs have zero error and return +inf;
// callers treat that as the flagged exact-match case.
template <typename T>
double psnr(const Image<T>& image, const Image<T>& reference, double max_value) {
    require(image.height == reference.height && image.width == reference.width,
            "psnr: shape mismatch");
    require(image.size() > 0, "psnr: empty image");
    require(max_value > 0.0, "psnr: max_value must be positive");
    double sq = 0.0;
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double d =
            static_cast<double>(image.values[i]) - static_cast<double>(reference.values[i]);
        sq += d * d;
    }
    if (sq == 0.0) return std::numeric_limits<double>::infinity();
    const double mse = sq / static_cast<double>(image.size());
    return 10.0 * std::log10(max_value * max_value / mse);
}

inline constexpr std::size_t kSsimWindow = 7;

// Mean structural similarity over all fully interior 7x7 uniform windows,
// with sample (n-1) normalization for the variances and covariance and
// C1 = (0.01 L)^2, C2 = (0.03 L)^2 where L is the reference data range.
template <typename T>
double ssim(const Image<T>& image, const Image<T>& reference) {
    require(image.height == reference.height && image.width == reference.width,
            "ssim: shape mismatch");
    require(image.height >= kSsimWindow && image.width >= kSsimWindow,
            "ssim: image smaller than the 7x7 window");

    const std::size_t h = image.height;
    const std::size_t w = image.width;
    // A flat reference has no range and would zero both stabilizers; fall
    // back to unit range so identical inputs still score exactly 1.
    const double spread = data_range(reference);
    const double range = spread > 0.0 ? spread : 1.0;
    const double c1 = (0.01 * range) * (0.01 * range);
    const double c2 = (0.03 * range) * (0.03 * range);

    // Summed-area tables for x, y, x^2, y^2, xy, padded with a zero row and
    // column.
    const std::size_t sw = w + 1;
    std::vector<double> sx((h + 1) * sw, 0.0), sy((h + 1) * sw, 0.0), sxx((h + 1) * sw, 0.0),
        syy((h + 1) * sw, 0.0), sxy((h + 1) * sw, 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double x = static_cast<double>(image.values[r * w + c]);
            const double y = static_cast<double>(reference.values[r * w + c]);
            const std::size_t at = (r + 1) * sw + (c + 1);
            const std::size_t up = r * sw + (c + 1);
            const std::size_t left = (r + 1) * sw + c;
            const std::size_t diag = r * sw + c;
            sx[at] = x + sx[up] + sx[left] - sx[diag];
            sy[at] = y + sy[up] + sy[left] - sy[diag];
            sxx[at] = x * x + sxx[up] + sxx[left] - sxx[diag];
            syy[at] = y * y + syy[up] + syy[left] - syy[diag];
            sxy[at] = x * y + sxy[up] + sxy[left] - sxy[diag];
        }
    }
    auto window_sum = [sw](const std::vector<double>& s, std::size_t r, std::size_t c) {
        return s[(r + kSsimWindow) * sw + (c + kSsimWindow)] - s[r * sw + (c + kSsimWindow)] -
               s[(r + kSsimWindow) * sw + c] + s[r * sw + c];
    };

    constexpr double np = static_cast<double>(kSsimWindow * kSsimWindow);
    constexpr double cov_norm = np / (np - 1.0);
    double total = 0.0;
    std::size_t windows = 0;
    for (std::size_t r = 0; r + kSsimWindow <= h; ++r) {
        for (std::size_t c = 0; c + kSsimWindow <= w; ++c) {
            const double ux = window_sum(sx, r, c) / np;
            const double uy = window_sum(sy, r, c) / np;
            const double vx = cov_norm * (window_sum(sxx, r, c) / np - ux * ux);
            const double vy = cov_norm * (window_sum(syy, r, c) / np - uy * uy);
            const double vxy = cov_norm * (window_sum(sxy, r, c) / np - ux * uy);
            const double numerator = (2.0 * ux * uy + c1) * (2.0 * vxy + c2);
            const double denominator = (ux * ux + uy * uy + c1) * (vx + vy + c2);
            total += numerator / denominator;
            ++windows;
        }
    }
    return total / static_cast<double>(windows);
}

struct MetricReport {
    std::vector<double> psnr_db;
    std::vector<double> ssim_value;
    double psnr_mean = 0.0;
    double ssim_mean = 0.0;
    std::size_t psnr_infinite = 0;
};

template <typename T>
MetricReport dataset_metrics(const std::vector<std::pair<Image<T>, Image<T>>>& pairs) {
    require(!pairs.empty(), "dataset_metrics: empty list");
    MetricReport report;
    double psnr_total = 0.0;
    double ssim_total = 0.0;
    std::size_t finite = 0;
    for (const auto& [image, reference] : pairs) {
        const double range = data_range(reference);
        const double p = psnr(image, reference, range > 0.0 ? range : 1.0);
        const double s = ssim(image, reference);
        report.psnr_db.push_back(p);
        report.ssim_value.push_back(s);
        ssim_total += s;
        if (std::isinf(p)) {
            ++report.psnr_infinite;
        } else {
            psnr_total += p;
            ++finite;
        }
    }
    report.psnr_mean = finite > 0 ? psnr_total / static_cast<double>(finite)
                                  : std::numeric_limits<double>::infinity();
    report.ssim_mean = ssim_total / static_cast<double>(pairs.size());
    return report;
}

}  // namespace nab
