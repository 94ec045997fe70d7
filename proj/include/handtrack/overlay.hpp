#pragma once

// Debug overlays of the re-initialisation stage as binary PPM images.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "handtrack/depth_io.hpp"
#include "handtrack/image_ops.hpp"
#include "handtrack/reinit.hpp"

namespace handtrack {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

using RgbImage = Grid<Rgb>;

inline constexpr std::array<Rgb, kNumFingers> kFingerColors{
    Rgb{230, 60, 60}, Rgb{240, 170, 40}, Rgb{70, 200, 70}, Rgb{60, 140, 240}, Rgb{190, 80, 220}};

inline void draw_disk(RgbImage& img, double u, double v, double radius, Rgb c) {
    const int r = static_cast<int>(std::ceil(radius));
    for (int dv = -r; dv <= r; ++dv)
        for (int du = -r; du <= r; ++du) {
            const int x = static_cast<int>(std::lround(u)) + du, y = static_cast<int>(std::lround(v)) + dv;
            if (img.in_bounds(x, y) && du * du + dv * dv <= radius * radius) img(x, y) = c;
        }
}

inline void draw_line(RgbImage& img, double u0, double v0, double u1, double v1, Rgb c) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(u1 - u0), std::abs(v1 - v0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
        const double s = static_cast<double>(i) / steps;
        const int x = static_cast<int>(std::lround(u0 + s * (u1 - u0)));
        const int y = static_cast<int>(std::lround(v0 + s * (v1 - v0)));
        if (img.in_bounds(x, y)) img(x, y) = c;
    }
}

// Grey shading is the distance transform of the mask. Finger regions are tinted by class,
// rejected candidates are dark red. Markers: blue palm centre, red tips, white detected
// junctions, coloured model junctions, yellow measured and cyan predicted palm axes.
inline RgbImage render_overlay(const DepthFrame& frame, const HandMask& mask, const ReinitResult& re,
                               const std::array<Vec3, kNumFingers>& model_junction_points, const CameraIntrinsics& k) {
    RgbImage img(frame.width(), frame.height());
    const Grid<std::uint8_t> solid = fill_holes(mask);
    const auto dt = euclidean_distance_transform(mask.width, mask.height, [&](int u, int v) { return !solid(u, v); });
    double dt_max = 1.0;
    for (const Pixel& p : mask.pixels) dt_max = std::max(dt_max, dt(p.u, p.v));
    for (int v = 0; v < frame.height(); ++v)
        for (int u = 0; u < frame.width(); ++u) {
            if (mask.contains(u, v)) {
                const auto g = static_cast<std::uint8_t>(60 + 195 * dt(u, v) / dt_max);
                img(u, v) = {g, g, g};
            } else if (frame.at(u, v) > 0) {
                img(u, v) = {25, 25, 35};
            }
        }
    const auto& claimed = re.detection.claimed;
    if (!claimed.values.empty())
        for (const Pixel& p : mask.pixels)
            if (claimed(p.u, p.v) == 2) img(p.u, p.v) = {110, 30, 30};
    for (std::size_t i = 0; i < re.detection.fingers.size(); ++i) {
        const int cls = i < re.classification.assignment.size() ? re.classification.assignment[i] : -1;
        const Rgb c = cls >= 0 ? kFingerColors[static_cast<std::size_t>(cls)] : Rgb{200, 200, 200};
        for (const Pixel& p : re.detection.fingers[i].region) {
            Rgb& px = img(p.u, p.v);
            px = {static_cast<std::uint8_t>((px.r + c.r) / 2), static_cast<std::uint8_t>((px.g + c.g) / 2),
                  static_cast<std::uint8_t>((px.b + c.b) / 2)};
        }
    }
    auto project = [&](const Vec3& x) -> std::optional<Vec2> {
        if (!(x.z() > 0)) return std::nullopt;
        const Vec3 p = camera_to_pixel(x, k);
        return Vec2{p.x(), p.y()};
    };
    const Vec2 pc{static_cast<double>(re.palm.px.u), static_cast<double>(re.palm.px.v)};
    const double axis_len = std::max(10.0, 2.0 * re.palm.radius_px);
    auto draw_axis = [&](double theta, Rgb c) {
        draw_line(img, pc.x(), pc.y(), pc.x() + axis_len * std::sin(theta), pc.y() - axis_len * std::cos(theta), c);
    };
    draw_axis(re.palm_state.theta_m, {250, 240, 60});
    draw_axis(re.palm_state.theta_p, {60, 240, 240});
    for (int f = 0; f < kNumFingers; ++f)
        if (auto q = project(model_junction_points[static_cast<std::size_t>(f)]))
            draw_disk(img, q->x(), q->y(), 2.5, kFingerColors[static_cast<std::size_t>(f)]);
    for (const auto& f : re.detection.fingers) {
        if (auto j = project(f.junction)) {
            draw_line(img, f.tip_px.u, f.tip_px.v, j->x(), j->y(), {255, 255, 255});
            draw_disk(img, j->x(), j->y(), 1.5, {255, 255, 255});
        }
        draw_disk(img, f.tip_px.u, f.tip_px.v, 2.0, {255, 0, 0});
    }
    draw_disk(img, pc.x(), pc.y(), 2.5, {0, 0, 255});
    return img;
}

inline void write_ppm(const std::filesystem::path& path, const RgbImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    for (const Rgb& c : img.values) {
        const char px[3] = {static_cast<char>(c.r), static_cast<char>(c.g), static_cast<char>(c.b)};
        out.write(px, 3);
    }
    if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

}  // namespace handtrack
