#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace handtrack {

template <typename T>
struct Grid {
    int width = 0;
    int height = 0;
    std::vector<T> values;

    Grid() = default;
    Grid(int w, int h, T fill = T{})
        : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

    bool in_bounds(int u, int v) const noexcept { return u >= 0 && v >= 0 && u < width && v < height; }
    std::size_t index(int u, int v) const noexcept {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u);
    }
    T& operator()(int u, int v) noexcept { return values[index(u, v)]; }
    const T& operator()(int u, int v) const noexcept { return values[index(u, v)]; }
};

namespace detail {

constexpr double kEdtFar = 1e20;

// 1-D squared distance transform of a sampled function (lower envelope of parabolas).
inline void edt_1d(const double* f, int n, double* d, std::vector<int>& hull, std::vector<double>& z) {
    hull.assign(static_cast<std::size_t>(n), 0);
    z.assign(static_cast<std::size_t>(n) + 1, 0.0);
    int k = 0;
    hull[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s = 0.0;
        while (true) {
            const int p = hull[static_cast<std::size_t>(k)];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s <= z[static_cast<std::size_t>(k)] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        ++k;
        hull[static_cast<std::size_t>(k)] = q;
        z[static_cast<std::size_t>(k)] = s;
        z[static_cast<std::size_t>(k) + 1] = std::numeric_limits<double>::infinity();
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
        const int p = hull[static_cast<std::size_t>(j)];
        d[q] = double(q - p) * (q - p) + f[p];
    }
}

}  // namespace detail

// Exact Euclidean distance (in pixels) from every pixel to the nearest pixel where
// `is_source` is true. Sources get 0; with no sources every value is +inf.
template <typename Pred>
Grid<double> euclidean_distance_transform(int width, int height, Pred is_source) {
    Grid<double> g(width, height, detail::kEdtFar);
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u)
            if (is_source(u, v)) g(u, v) = 0.0;

    std::vector<double> f(static_cast<std::size_t>(std::max(width, height)));
    std::vector<double> d(f.size());
    std::vector<int> hull;
    std::vector<double> z;
    for (int u = 0; u < width; ++u) {
        for (int v = 0; v < height; ++v) f[static_cast<std::size_t>(v)] = g(u, v);
        detail::edt_1d(f.data(), height, d.data(), hull, z);
        for (int v = 0; v < height; ++v) g(u, v) = d[static_cast<std::size_t>(v)];
    }
    for (int v = 0; v < height; ++v) {
        for (int u = 0; u < width; ++u) f[static_cast<std::size_t>(u)] = g(u, v);
        detail::edt_1d(f.data(), width, d.data(), hull, z);
        for (int u = 0; u < width; ++u) {
            const double sq = d[static_cast<std::size_t>(u)];
            g(u, v) = sq >= detail::kEdtFar * 0.5 ? std::numeric_limits<double>::infinity() : std::sqrt(sq);
        }
    }
    return g;
}

}  // namespace handtrack
