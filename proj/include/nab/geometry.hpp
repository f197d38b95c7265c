#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "nab/common.hpp"

namespace nab {

/// Pixel-center lattice over [-1, 1]^2, row-major. Pixel (r, c) sits at
/// x = -1 + (2c+1)/W, y = -1 + (2r+1)/H, so no coordinate ever touches the
/// domain boundary.
template <typename T>
struct CoordinateGrid {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> xs;  // H*W, row-major
    std::vector<T> ys;

    std::size_t size() const { return height * width; }
};

template <typename T = double>
CoordinateGrid<T> make_grid(std::size_t height, std::size_t width) {
    require(height >= 1 && width >= 1, "make_grid: grid dimensions must be positive");
    CoordinateGrid<T> grid;
    grid.height = height;
    grid.width = width;
    grid.xs.resize(height * width);
    grid.ys.resize(height * width);
    for (std::size_t r = 0; r < height; ++r) {
        const T y = T(-1) + T(2 * r + 1) / T(height);
        for (std::size_t c = 0; c < width; ++c) {
            const T x = T(-1) + T(2 * c + 1) / T(width);
            grid.xs[r * width + c] = x;
            grid.ys[r * width + c] = y;
        }
    }
    return grid;
}

/// One renderable primitive. Rectangles have half-extents (extent_x, extent_y)
/// and a rotation about their center; annuli use (radius_inner, radius_outer)
/// and ignore rotation.
struct Primitive {
    enum class Kind { Rectangle, Annulus };

    Kind kind = Kind::Rectangle;
    double center_x = 0.0;
    double center_y = 0.0;
    double extent_x = 0.0;  // rectangle half-width  / annulus inner radius
    double extent_y = 0.0;  // rectangle half-height / annulus outer radius
    double angle = 0.0;     // radians
    double value = 0.0;

    static Primitive rectangle(double cx, double cy, double half_x, double half_y,
                               double angle, double value) {
        return Primitive{Kind::Rectangle, cx, cy, half_x, half_y, angle, value};
    }
    static Primitive annulus(double cx, double cy, double r_inner, double r_outer,
                             double value) {
        return Primitive{Kind::Annulus, cx, cy, r_inner, r_outer, 0.0, value};
    }

    bool contains(double x, double y) const {
        const double dx = x - center_x;
        const double dy = y - center_y;
        if (kind == Kind::Rectangle) {
            // Membership under rotation: inverse-rotate the offset.
            const double ct = std::cos(angle);
            const double st = std::sin(angle);
            const double rx = ct * dx + st * dy;
            const double ry = -st * dx + ct * dy;
            return std::abs(rx) <= extent_x && std::abs(ry) <= extent_y;
        }
        const double rr = dx * dx + dy * dy;
        return rr >= extent_x * extent_x && rr <= extent_y * extent_y;
    }
};

/// Primitive list; later primitives overwrite earlier ones where they overlap.
struct PhantomSpec {
    std::vector<Primitive> primitives;
};

template <typename T>
Image<T> render_phantom(const PhantomSpec& spec, const CoordinateGrid<T>& grid) {
    require(!spec.primitives.empty(), "render_phantom: spec must contain at least one primitive");
    for (const Primitive& p : spec.primitives) {
        require(p.extent_x >= 0.0 && p.extent_y >= 0.0,
                "render_phantom: negative half-extent or radius");
        if (p.kind == Primitive::Kind::Annulus) {
            require(p.extent_x <= p.extent_y,
                    "render_phantom: annulus inner radius exceeds outer radius");
        }
    }
    Image<T> image(grid.height, grid.width);
    const std::size_t n = grid.size();
    for (std::size_t p = 0; p < n; ++p) {
        const double x = static_cast<double>(grid.xs[p]);
        const double y = static_cast<double>(grid.ys[p]);
        double value = 0.0;
        for (const Primitive& prim : spec.primitives) {
            if (prim.contains(x, y)) value = prim.value;
        }
        image.values[p] = static_cast<T>(value);
    }
    return image;
}

// ---------------------------------------------------------------------------
// Named phantom presets.

/// Rotated square tube cross-section: unit wall around an air core.
inline PhantomSpec hollow_square_phantom(double angle = 0.0) {
    PhantomSpec spec;
    spec.primitives.push_back(Primitive::rectangle(0.0, 0.0, 0.60, 0.60, angle, 1.0));
    spec.primitives.push_back(Primitive::rectangle(0.0, 0.0, 0.42, 0.42, angle, 0.0));
    return spec;
}

/// L-shaped union of two bars.
inline PhantomSpec bracket_phantom() {
    PhantomSpec spec;
    spec.primitives.push_back(Primitive::rectangle(-0.40, 0.05, 0.16, 0.60, 0.0, 1.0));
    spec.primitives.push_back(Primitive::rectangle(0.05, -0.49, 0.61, 0.16, 0.0, 1.0));
    return spec;
}

/// Rectangles of mixed orientation plus a ring; exercises straight and curved
/// boundaries together.
inline PhantomSpec mixed_phantom() {
    PhantomSpec spec;
    spec.primitives.push_back(Primitive::rectangle(-0.42, 0.38, 0.30, 0.20, 0.35, 1.0));
    spec.primitives.push_back(Primitive::rectangle(0.45, 0.42, 0.18, 0.30, -0.25, 0.7));
    spec.primitives.push_back(Primitive::annulus(0.05, -0.42, 0.16, 0.38, 0.85));
    return spec;
}

/// Filled disk; no straight edges at all.
inline PhantomSpec disk_phantom() {
    PhantomSpec spec;
    spec.primitives.push_back(Primitive::annulus(0.0, 0.0, 0.0, 0.65, 1.0));
    return spec;
}

inline PhantomSpec phantom_preset(const std::string& name, double angle = 0.0) {
    if (name == "hollow-square") return hollow_square_phantom(angle);
    if (name == "bracket") return bracket_phantom();
    if (name == "mixed") return mixed_phantom();
    if (name == "disk") return disk_phantom();
    throw std::invalid_argument("unknown phantom preset: " + name);
}

inline const std::vector<std::string>& phantom_preset_names() {
    static const std::vector<std::string> names = {"hollow-square", "bracket", "mixed", "disk"};
    return names;
}

}  // namespace nab
