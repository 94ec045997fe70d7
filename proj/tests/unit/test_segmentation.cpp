#include <gtest/gtest.h>

#include <queue>
#include <set>

#include "test_support.hpp"

using namespace testing_support;

namespace {

void fill_rect(ht::DepthFrame& f, int u0, int v0, int w, int h, std::uint16_t d) {
    for (int v = v0; v < v0 + h; ++v)
        for (int u = u0; u < u0 + w; ++u) f.at(u, v) = d;
}

std::set<std::pair<int, int>> pixel_set(const ht::HandMask& m) {
    std::set<std::pair<int, int>> s;
    for (const auto& p : m.pixels) s.insert({p.u, p.v});
    return s;
}

}  // namespace

TEST(ClosestPixel, SingleNonzeroPixel) {
    ht::DepthFrame f(64, 48);
    f.at(10, 20) = 300;
    EXPECT_EQ(ht::closest_valid_pixel(f), (ht::Pixel{10, 20}));
}

TEST(ClosestPixel, UniformFrameTiesBreakRowMajor) {
    EXPECT_EQ(ht::closest_valid_pixel(constant_frame(64, 48, 800)), (ht::Pixel{0, 0}));
}

TEST(ClosestPixel, AllVoidFrameIsEmptyFrameError) {
    try {
        ht::closest_valid_pixel(ht::DepthFrame(16, 16));
        FAIL();
    } catch (const ht::Error& e) {
        EXPECT_EQ(e.kind(), ht::ErrorKind::EmptyFrame);
    }
}

TEST(ClosestPixel, RenderedHandMatchesZBufferArgmin) {
    // Tilt the hand so the fingertips lean toward the camera; pick the tilt where the middle
    // fingertip sphere is the nearest surface.
    const auto tmpl = ht::default_template();
    for (double rx : {0.6, -0.6}) {
        ht::HandPose pose = open_hand();
        pose[ht::dof::kRx] = rx;
        const ht::SphereModel m = ht::pose_spheres(tmpl, {}, pose);
        int nearest = 0;
        for (int i = 1; i < ht::kNumSpheres; ++i) {
            const auto& s = m.spheres[static_cast<std::size_t>(i)];
            const auto& b = m.spheres[static_cast<std::size_t>(nearest)];
            if (s.center.z() - s.radius < b.center.z() - b.radius) nearest = i;
        }
        if (m.spheres[static_cast<std::size_t>(nearest)].part != ht::Part::Middle) continue;

        const ht::RenderOutput r = clean_render(pose);
        const ht::Pixel c = ht::closest_valid_pixel(r.frame);
        // z-buffer oracle: smallest quantised depth, first in row-major order
        int best = 0;
        ht::Pixel arg{};
        for (int v = 0; v < kH; ++v)
            for (int u = 0; u < kW; ++u) {
                const int d = r.frame.at(u, v);
                if (d != 0 && (best == 0 || d < best)) {
                    best = d;
                    arg = {u, v};
                }
            }
        EXPECT_EQ(c, arg);
        EXPECT_EQ(r.labels(c.u, c.v), ht::PixelLabel::Middle);
        return;
    }
    FAIL() << "no tilt brings the middle fingertip nearest";
}

TEST(Segmentation, ConstantSquareIsExactlyTheMask) {
    ht::DepthFrame f(64, 48);
    fill_rect(f, 10, 5, 20, 20, 600);
    const ht::HandMask m = ht::segment_hand(f);
    EXPECT_EQ(m.pixel_count, 400);
    for (int v = 0; v < 48; ++v)
        for (int u = 0; u < 64; ++u) EXPECT_EQ(m.contains(u, v), u >= 10 && u < 30 && v >= 5 && v < 25);
    EXPECT_EQ(m.closest_pixel, (ht::Pixel{10, 5}));
}

TEST(Segmentation, VoidRingSeparatesBlobs) {
    ht::DepthFrame f(80, 48);
    fill_rect(f, 2, 2, 20, 20, 500);
    fill_rect(f, 40, 2, 20, 20, 505);  // nearly the same depth, but not connected
    const ht::HandMask m = ht::segment_hand(f);
    EXPECT_EQ(m.pixel_count, 400);
    EXPECT_TRUE(m.contains(5, 5));
    EXPECT_FALSE(m.contains(45, 5));
}

TEST(Segmentation, DepthStepBeyondToleranceStopsGrowth) {
    ht::DepthFrame f(64, 48);
    fill_rect(f, 0, 0, 30, 48, 500);
    fill_rect(f, 30, 0, 34, 48, 521);  // 21 mm step, tolerance 20
    const ht::HandMask m = ht::segment_hand(f);
    EXPECT_EQ(m.pixel_count, 30 * 48);
    ht::DepthFrame g = f;
    fill_rect(g, 30, 0, 34, 48, 520);  // 20 mm step is within tolerance
    EXPECT_EQ(ht::segment_hand(g).pixel_count, 64 * 48);
}

TEST(Segmentation, FourConnectivityDoesNotLeakDiagonally) {
    ht::DepthFrame f(64, 64);
    fill_rect(f, 0, 0, 20, 20, 500);
    fill_rect(f, 20, 20, 20, 20, 500);  // touches only at a corner
    const ht::HandMask m = ht::segment_hand(f);
    EXPECT_EQ(m.pixel_count, 400);
    EXPECT_FALSE(m.contains(20, 20));
}

TEST(Segmentation, SmallOccludingFragmentIsMergedIntoLargerComponent) {
    ht::DepthFrame f(64, 48);
    fill_rect(f, 10, 10, 30, 30, 500);
    fill_rect(f, 18, 18, 5, 5, 440);  // a small blob in front, 60 mm closer
    const ht::HandMask m = ht::segment_hand(f);
    EXPECT_EQ(m.pixel_count, 900);
    EXPECT_TRUE(m.contains(20, 20));
    EXPECT_EQ(m.closest_pixel, (ht::Pixel{18, 18}));

    ht::SegmentationParams plain;
    plain.min_component = 0;
    EXPECT_EQ(ht::segment_hand(f, plain).pixel_count, 25);
}

TEST(Segmentation, DistantFragmentIsNotRestarted) {
    ht::DepthFrame f(64, 48);
    fill_rect(f, 0, 0, 4, 4, 300);         // small and near
    fill_rect(f, 20, 10, 30, 30, 700);     // far beyond the occluder range
    const ht::HandMask m = ht::segment_hand(f);
    EXPECT_EQ(m.pixel_count, 16);
}

TEST(Segmentation, FarBackgroundDoesNotChangeMask) {
    const ht::RenderOutput bare = clean_render(open_hand());
    const ht::RenderOutput wall = clean_render(open_hand(), {}, ht::SceneSpec{false, 650.0});
    const ht::HandMask a = ht::segment_hand(bare.frame);
    const ht::HandMask b = ht::segment_hand(wall.frame);
    EXPECT_EQ(pixel_set(a), pixel_set(b));
    // The mask is exactly the renderer's hand coverage.
    for (int v = 0; v < kH; ++v)
        for (int u = 0; u < kW; ++u) EXPECT_EQ(b.contains(u, v), ht::is_hand_label(wall.labels(u, v))) << u << "," << v;
}

TEST(Segmentation, GlobalDepthOffsetLeavesMaskUnchanged) {
    ht::HandPose pose = open_hand();
    pose[ht::dof::kRx] = 0.3;
    pose[ht::dof::mcp_flex(1)] = 0.8;
    const ht::DepthFrame f = clean_render(pose, {}, ht::SceneSpec{true, 800.0}).frame;
    ht::DepthFrame g = f;
    for (auto& d : g.data())
        if (d) d = static_cast<std::uint16_t>(d + 1234);
    EXPECT_EQ(pixel_set(ht::segment_hand(f)), pixel_set(ht::segment_hand(g)));
}

TEST(Segmentation, EveryMemberReachableFromClosestPixel) {
    ht::HandPose pose = open_hand();
    pose[ht::dof::mcp_flex(2)] = 1.2;
    pose[ht::dof::pip(2)] = 1.2;
    ht::RenderOutput r = clean_render(pose, {}, ht::SceneSpec{true, 900.0});
    ht::Rng rng(4);
    ht::apply_noise(r, ht::NoiseSpec{2.0, 0.01, true}, kCam, rng);
    const ht::HandMask m = ht::segment_hand(r.frame);
    std::vector<char> seen(static_cast<std::size_t>(kW * kH), 0);
    std::queue<ht::Pixel> q;
    q.push(m.closest_pixel);
    seen[static_cast<std::size_t>(m.closest_pixel.v * kW + m.closest_pixel.u)] = 1;
    int reached = 0;
    while (!q.empty()) {
        const auto p = q.front();
        q.pop();
        ++reached;
        const int du[4] = {1, -1, 0, 0}, dv[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
            const int u = p.u + du[k], v = p.v + dv[k];
            if (!m.contains(u, v) || seen[static_cast<std::size_t>(v * kW + u)]) continue;
            seen[static_cast<std::size_t>(v * kW + u)] = 1;
            q.push({u, v});
        }
    }
    EXPECT_EQ(reached, m.pixel_count);
    EXPECT_EQ(m.pixels.front(), m.closest_pixel);
}

TEST(Segmentation, PixelBudgetTruncates) {
    ht::SegmentationParams p;
    p.max_pixels = 100;
    const ht::HandMask m = ht::segment_hand(constant_frame(64, 48, 500), p);
    EXPECT_EQ(m.pixel_count, 100);
    EXPECT_TRUE(m.truncated);
}
