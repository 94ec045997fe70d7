#pragma once

// Hierarchical random pixel sampling.
//
// Seeds S1 are drawn uniformly from the hand mask. Every seed whose Sobel gradient
// magnitude G = |Ox*D| + |Oy*D| exceeds t1 proposes one candidate s + (u1, u2),
// u1, u2 ~ U{-w..w}; the candidate joins S2 when it is an in-mask, non-void pixel
// whose depth differs from the seed's by more than t2. The union is then resized
// to a fixed budget so objective values stay comparable between frames.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "handtrack/depth_io.hpp"
#include "handtrack/image_ops.hpp"
#include "handtrack/segmentation.hpp"

namespace handtrack {

enum class SamplingMode { Random, Hierarchical };

struct SamplingParams {
    SamplingMode mode = SamplingMode::Hierarchical;
    int n_samples = 256;       // final |S|; 0 disables resizing
    int n_seeds = 256;         // |S1| before resizing
    double t1 = 30.0;          // gradient gate
    double t2 = 10.0;          // depth-difference gate, mm
    int window = 3;            // half-width of the candidate window, px
};

using GradientMap = Grid<double>;

inline constexpr int kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
inline constexpr int kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

inline GradientMap gradient_map(const DepthFrame& frame, const HandMask& mask) {
    GradientMap g(frame.width(), frame.height(), 0.0);
    for (const Pixel& p : mask.pixels) {
        int gx = 0;
        int gy = 0;
        for (int j = -1; j <= 1; ++j) {
            for (int i = -1; i <= 1; ++i) {
                const int d = frame.at_or_zero(p.u + i, p.v + j);
                gx += kSobelX[j + 1][i + 1] * d;
                gy += kSobelY[j + 1][i + 1] * d;
            }
        }
        g(p.u, p.v) = std::abs(gx) + std::abs(gy);
    }
    return g;
}

struct SampleSet {
    std::vector<Pixel> s1;
    std::vector<Pixel> s2;
    std::vector<int> s2_parent;  // index into s1 of the seed that proposed each s2 entry
    std::vector<Vec3> points;    // back-projections of s1 then s2, mm

    std::size_t size() const noexcept { return s1.size() + s2.size(); }
};

inline SampleSet sample(const DepthFrame& frame, const HandMask& mask, const GradientMap& grad,
                        const CameraIntrinsics& k, const SamplingParams& params, Rng& rng) {
    if (mask.empty()) fail(ErrorKind::InvalidInput, "sample: empty mask");
    if (params.n_seeds < 1) fail(ErrorKind::InvalidInput, "sample: need at least one seed");

    SampleSet out;
    const int n_mask = mask.pixel_count;
    std::vector<int> order(static_cast<std::size_t>(n_mask));
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first min(n, mask) entries become a uniform draw without replacement.
    auto draw_prefix = [&](int upto) {
        for (int i = 0; i < upto && i < n_mask - 1; ++i) {
            std::uniform_int_distribution<int> pick(i, n_mask - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
        }
    };
    const int n1 = std::min(params.n_seeds, n_mask);
    draw_prefix(n1);
    for (int i = 0; i < n1; ++i) out.s1.push_back(mask.pixels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);

    if (params.mode == SamplingMode::Hierarchical) {
        std::uniform_int_distribution<int> offset(-params.window, params.window);
        for (std::size_t i = 0; i < out.s1.size(); ++i) {
            const Pixel s = out.s1[i];
            if (!(grad(s.u, s.v) > params.t1)) continue;
            const int du = offset(rng);
            const int dv = offset(rng);
            const Pixel r{s.u + du, s.v + dv};
            if (!mask.contains(r.u, r.v)) continue;
            const int dr = frame.at(r.u, r.v);
            if (dr == 0) continue;
            if (std::abs(dr - static_cast<int>(frame.at(s.u, s.v))) > params.t2) {
                out.s2.push_back(r);
                out.s2_parent.push_back(static_cast<int>(i));
            }
        }
    }

    if (params.n_samples > 0) {
        const auto budget = static_cast<std::size_t>(params.n_samples);
        if (out.size() > budget) {
            // Drop seeds without children first, then surplus children; parents of kept children stay.
            std::vector<char> has_child(out.s1.size(), 0);
            for (int p : out.s2_parent) has_child[static_cast<std::size_t>(p)] = 1;
            std::vector<std::size_t> childless;
            for (std::size_t i = 0; i < out.s1.size(); ++i)
                if (!has_child[i]) childless.push_back(i);
            std::shuffle(childless.begin(), childless.end(), rng);
            std::vector<char> drop_seed(out.s1.size(), 0);
            std::size_t excess = out.size() - budget;
            for (std::size_t i = 0; i < childless.size() && excess > 0; ++i, --excess) drop_seed[childless[i]] = 1;
            std::vector<char> drop_child(out.s2.size(), 0);
            if (excess > 0) {
                std::vector<std::size_t> kids(out.s2.size());
                std::iota(kids.begin(), kids.end(), std::size_t{0});
                std::shuffle(kids.begin(), kids.end(), rng);
                for (std::size_t i = 0; i < kids.size() && excess > 0; ++i, --excess) drop_child[kids[i]] = 1;
            }
            std::vector<int> remap(out.s1.size(), -1);
            std::vector<Pixel> s1;
            for (std::size_t i = 0; i < out.s1.size(); ++i) {
                if (drop_seed[i]) continue;
                remap[i] = static_cast<int>(s1.size());
                s1.push_back(out.s1[i]);
            }
            std::vector<Pixel> s2;
            std::vector<int> parent;
            for (std::size_t i = 0; i < out.s2.size(); ++i) {
                if (drop_child[i]) continue;
                s2.push_back(out.s2[i]);
                parent.push_back(remap[static_cast<std::size_t>(out.s2_parent[i])]);
            }
            out.s1 = std::move(s1);
            out.s2 = std::move(s2);
            out.s2_parent = std::move(parent);
        } else if (out.size() < budget && n1 < n_mask) {
            // Top up with further uniform mask pixels not yet drawn as seeds.
            const int extra = static_cast<int>(std::min<std::size_t>(budget - out.size(), static_cast<std::size_t>(n_mask - n1)));
            for (int i = n1; i < n1 + extra && i < n_mask - 1; ++i) {
                std::uniform_int_distribution<int> pick(i, n_mask - 1);
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
            }
            for (int i = n1; i < n1 + extra; ++i)
                out.s1.push_back(mask.pixels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
        }
    }

    out.points.reserve(out.size());
    for (const Pixel& p : out.s1) out.points.push_back(pixel_to_camera(p.u, p.v, frame.at(p.u, p.v), k));
    for (const Pixel& p : out.s2) out.points.push_back(pixel_to_camera(p.u, p.v, frame.at(p.u, p.v), k));
    return out;
}

}  // namespace handtrack
