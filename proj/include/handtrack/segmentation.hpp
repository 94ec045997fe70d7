#pragma once

// Hand segmentation: 4-connected flood fill from the closest valid pixel.
// Voids (depth 0) are hard boundaries, so a void band at the wrist severs the arm.
// Small fragments in front of the hand are skipped, then merged back when they touch it.

#include <cstdint>
#include <cstdlib>
#include <vector>

#include "handtrack/depth_io.hpp"

namespace handtrack {

struct SegmentationParams {
    int depth_tolerance_mm = 20;  // max |depth(neighbor) - depth(current)|
    int max_pixels = 12000;
    // A component grown from the closest pixel that is smaller than this is treated as an
    // occluding fragment (e.g. a curled fingertip in front of the palm): growth restarts from
    // the next closest pixel, and fragments touching the final component are merged into it.
    // 0 disables the rule.
    int min_component = 300;
    int occluder_range_mm = 150;  // fragments and the hand start within this depth of the closest pixel
    int max_restarts = 16;
};

struct HandMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> member;
    Pixel closest_pixel;
    int pixel_count = 0;
    bool truncated = false;
    std::vector<Pixel> pixels;  // BFS order, starts with closest_pixel

    HandMask() = default;
    HandMask(int w, int h)
        : width(w), height(h), member(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0) {}

    bool contains(int u, int v) const noexcept {
        return u >= 0 && v >= 0 && u < width && v < height &&
               member[static_cast<std::size_t>(v) * static_cast<std::size_t>(width) + static_cast<std::size_t>(u)];
    }
    bool empty() const noexcept { return pixel_count == 0; }
};

inline Pixel closest_valid_pixel(const DepthFrame& frame) {
    std::uint16_t best = 0;
    std::size_t best_index = 0;
    const auto& d = frame.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] != 0 && (best == 0 || d[i] < best)) {
            best = d[i];
            best_index = i;
        }
    }
    if (best == 0) fail(ErrorKind::EmptyFrame, "frame has no valid depth");
    const auto w = static_cast<std::size_t>(frame.width());
    return {static_cast<int>(best_index % w), static_cast<int>(best_index / w)};
}

namespace detail {

// 4-connected growth from `seed` over unlabelled pixels; returns the component in BFS order.
inline std::vector<Pixel> grow_component(const DepthFrame& frame, Pixel seed, int tolerance, int budget,
                                         std::vector<int>& owner, int id, bool& truncated) {
    std::vector<Pixel> comp{seed};
    owner[frame.index(seed.u, seed.v)] = id;
    constexpr int du[4] = {1, -1, 0, 0};
    constexpr int dv[4] = {0, 0, 1, -1};
    for (std::size_t i = 0; i < comp.size(); ++i) {
        const Pixel cur = comp[i];
        const int dcur = frame.at(cur.u, cur.v);
        for (int k = 0; k < 4; ++k) {
            const int u = cur.u + du[k];
            const int v = cur.v + dv[k];
            if (!frame.in_bounds(u, v) || owner[frame.index(u, v)] >= 0) continue;
            const int d = frame.at(u, v);
            if (d == 0 || std::abs(d - dcur) > tolerance) continue;
            if (static_cast<int>(comp.size()) >= budget) {
                truncated = true;
                return comp;
            }
            owner[frame.index(u, v)] = id;
            comp.push_back({u, v});
        }
    }
    return comp;
}

}  // namespace detail

inline HandMask segment_hand(const DepthFrame& frame, const SegmentationParams& params = {}) {
    const Pixel seed = closest_valid_pixel(frame);
    const int seed_depth = frame.at(seed.u, seed.v);
    HandMask mask(frame.width(), frame.height());
    std::vector<int> owner(frame.size(), -1);
    std::vector<std::vector<Pixel>> comps;
    std::vector<char> comp_truncated;

    auto grow = [&](Pixel s) {
        bool truncated = false;
        comps.push_back(detail::grow_component(frame, s, params.depth_tolerance_mm, params.max_pixels, owner,
                                               static_cast<int>(comps.size()), truncated));
        comp_truncated.push_back(truncated);
    };
    grow(seed);

    int main = 0;
    if (params.min_component > 0 && static_cast<int>(comps[0].size()) < params.min_component) {
        main = -1;
        for (int r = 0; r < params.max_restarts; ++r) {
            int best = 0;
            std::size_t best_index = 0;
            const auto& d = frame.data();
            for (std::size_t i = 0; i < d.size(); ++i)
                if (d[i] != 0 && owner[i] < 0 && (best == 0 || d[i] < best)) {
                    best = d[i];
                    best_index = i;
                }
            if (best == 0 || best - seed_depth > params.occluder_range_mm) break;
            const auto w = static_cast<std::size_t>(frame.width());
            grow({static_cast<int>(best_index % w), static_cast<int>(best_index / w)});
            if (static_cast<int>(comps.back().size()) >= params.min_component) {
                main = static_cast<int>(comps.size()) - 1;
                break;
            }
        }
        if (main < 0) main = 0;
    }

    // Merge fragments found before the main component that touch it (transitively).
    std::vector<char> keep(comps.size(), 0);
    keep[static_cast<std::size_t>(main)] = 1;
    for (bool changed = main > 0; changed;) {
        changed = false;
        for (int c = 0; c < main; ++c) {
            if (keep[static_cast<std::size_t>(c)]) continue;
            bool touches = false;
            for (const Pixel& p : comps[static_cast<std::size_t>(c)]) {
                constexpr int du[4] = {1, -1, 0, 0};
                constexpr int dv[4] = {0, 0, 1, -1};
                for (int k = 0; k < 4 && !touches; ++k) {
                    const int u = p.u + du[k], v = p.v + dv[k];
                    if (!frame.in_bounds(u, v)) continue;
                    const int o = owner[frame.index(u, v)];
                    touches = o >= 0 && o <= main && keep[static_cast<std::size_t>(o)];
                }
                if (touches) break;
            }
            if (touches) {
                keep[static_cast<std::size_t>(c)] = 1;
                changed = true;
            }
        }
    }

    for (std::size_t c = 0; c < comps.size(); ++c) {
        if (!keep[c]) continue;
        for (const Pixel& p : comps[c]) {
            if (mask.pixel_count >= params.max_pixels) {
                mask.truncated = true;
                break;
            }
            mask.member[frame.index(p.u, p.v)] = 1;
            mask.pixels.push_back(p);
            ++mask.pixel_count;
        }
        if (comp_truncated[c]) mask.truncated = true;
    }
    mask.closest_pixel = mask.pixels.front();
    return mask;
}

}  // namespace handtrack
