#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nab {

static_assert(std::endian::native == std::endian::little,
              "serialized formats are little-endian; big-endian hosts are unsupported");

/// Error raised when a serialized file fails structural validation
/// (bad magic, truncated payload, inconsistent dimensions).
class format_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw std::invalid_argument(message);
}

template <typename T>
bool all_finite(const std::vector<T>& values) {
    for (const T& v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

/// Dense row-major 2D attenuation raster.
template <typename T>
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> values;

    Image() = default;
    Image(std::size_t h, std::size_t w, T fill = T(0))
        : height(h), width(w), values(h * w, fill) {}
    Image(std::size_t h, std::size_t w, std::vector<T> v)
        : height(h), width(w), values(std::move(v)) {}

    std::size_t size() const { return height * width; }
    T& at(std::size_t row, std::size_t col) { return values[row * width + col]; }
    const T& at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
};

/// Stacked line-integral measurements, one row per projection angle.
template <typename T>
struct Sinogram {
    std::size_t rows = 0;  // projection angles U
    std::size_t cols = 0;  // detector pixels V
    std::vector<T> values;

    Sinogram() = default;
    Sinogram(std::size_t u, std::size_t v, T fill = T(0))
        : rows(u), cols(v), values(u * v, fill) {}
    Sinogram(std::size_t u, std::size_t v, std::vector<T> data)
        : rows(u), cols(v), values(std::move(data)) {}

    std::size_t size() const { return rows * cols; }
    T& at(std::size_t row, std::size_t col) { return values[row * cols + col]; }
    const T& at(std::size_t row, std::size_t col) const { return values[row * cols + col]; }
};

/// Row-major feature matrix: one row per coordinate, one column per feature.
template <typename T>
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> values;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c, T fill = T(0))
        : rows(r), cols(c), values(r * c, fill) {}
    FeatureMatrix(std::size_t r, std::size_t c, std::vector<T> v)
        : rows(r), cols(c), values(std::move(v)) {}

    std::size_t size() const { return rows * cols; }
    T* row(std::size_t r) { return values.data() + r * cols; }
    const T* row(std::size_t r) const { return values.data() + r * cols; }
};

}  // namespace nab
