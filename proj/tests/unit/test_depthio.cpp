#include <gtest/gtest.h>

#include <fstream>

#include "test_support.hpp"

using namespace testing_support;
using ht::Vec3;

TEST(DepthIo, PrincipalPointIsOpticalAxis) {
    const Vec3 x = ht::pixel_to_camera(kCam.cx, kCam.cy, 500, kCam);
    EXPECT_DOUBLE_EQ(x.x(), 0.0);
    EXPECT_DOUBLE_EQ(x.y(), 0.0);
    EXPECT_DOUBLE_EQ(x.z(), 500.0);
}

TEST(DepthIo, OneFocalLengthRightIsFortyFiveDegrees) {
    const Vec3 x = ht::pixel_to_camera(kCam.cx + kCam.fx, kCam.cy, 400, kCam);
    EXPECT_NEAR(x.x(), 400.0, 1e-12);
    EXPECT_NEAR(x.y(), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(x.z(), 400.0);
}

TEST(DepthIo, ProjectionMatchesPinholeByHand) {
    const ht::CameraIntrinsics k{300.0, 310.0, 160.0, 120.0};
    const Vec3 p = ht::camera_to_pixel({100, -50, 250}, k);
    // u = 300*100/250 + 160 = 280, v = 310*(-50)/250 + 120 = 58
    EXPECT_NEAR(p.x(), 280.0, 1e-12);
    EXPECT_NEAR(p.y(), 58.0, 1e-12);
    EXPECT_DOUBLE_EQ(p.z(), 250.0);
    const Vec3 c = ht::camera_to_pixel({0, 0, 500}, k);
    EXPECT_DOUBLE_EQ(c.x(), k.cx);
    EXPECT_DOUBLE_EQ(c.y(), k.cy);
}

TEST(DepthIo, BackProjectionRoundTrip) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, kW - 1), v(0, kH - 1), d(1, 5000);
    for (int i = 0; i < 1000; ++i) {
        const double uu = u(rng), vv = v(rng), dd = d(rng);
        const Vec3 back = ht::camera_to_pixel(ht::pixel_to_camera(uu, vv, dd, kCam), kCam);
        EXPECT_NEAR(back.x(), uu, 1e-9);
        EXPECT_NEAR(back.y(), vv, 1e-9);
        EXPECT_NEAR(back.z(), dd, 1e-9 * dd);
    }
}

TEST(DepthIo, ProjectionRoundTripFromCameraSpace) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> xy(-300, 300), z(50, 3000);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 x{xy(rng), xy(rng), z(rng)};
        const Vec3 p = ht::camera_to_pixel(x, kCam);
        const Vec3 back = ht::pixel_to_camera(p.x(), p.y(), p.z(), kCam);
        EXPECT_LE((back - x).norm(), 1e-9 * x.norm());
    }
}

TEST(DepthIo, ConstantDepthBackProjectsCoplanar) {
    const ht::DepthFrame f = constant_frame(kW, kH, 731);
    for (int v = 0; v < kH; v += 7)
        for (int u = 0; u < kW; u += 7) EXPECT_DOUBLE_EQ(ht::pixel_to_camera(u, v, f.at(u, v), kCam).z(), 731.0);
}

TEST(DepthIo, ProjectionRejectsPointsBehindCamera) {
    try {
        ht::camera_to_pixel({0, 0, -1}, kCam);
        FAIL() << "expected an error";
    } catch (const ht::Error& e) {
        EXPECT_EQ(e.kind(), ht::ErrorKind::InvalidInput);
    }
}

TEST(DepthIo, SequenceRoundTripIsLossless) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> d(0, 65535);
    ht::Sequence seq;
    seq.intrinsics = {301.5, 299.25, 80.5, 60.25};
    for (int i = 0; i < 3; ++i) {
        ht::DepthFrame f(160, 120, i);
        for (auto& x : f.data()) x = static_cast<std::uint16_t>(d(rng));
        seq.frames.push_back(f);
    }
    const auto dir = temp_dir("seq_roundtrip");
    const auto path = dir / "a.htds";
    ht::save_sequence(path, seq);
    const ht::Sequence back = ht::load_sequence(path);
    ASSERT_EQ(back.frames.size(), 3u);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(back.frames[static_cast<std::size_t>(i)], seq.frames[static_cast<std::size_t>(i)]);
        EXPECT_EQ(back.frames[static_cast<std::size_t>(i)].frame_index(), i);
    }
    EXPECT_DOUBLE_EQ(back.intrinsics.fx, 301.5);
    EXPECT_DOUBLE_EQ(back.intrinsics.cy, 60.25);
    EXPECT_TRUE(back.labels.empty());
}

TEST(DepthIo, LabelsRoundTripAndEmptyLabelFile) {
    ht::Sequence seq;
    seq.frames.push_back(constant_frame(kW, kH, 500));
    seq.frames.push_back(constant_frame(kW, kH, 501));
    ht::GroundTruthLabel l;
    l.frame_index = 1;
    l.wrist = {1.25, -2.5, 400.125};
    for (int t = 0; t < 5; ++t) l.fingertips[static_cast<std::size_t>(t)] = {t * 1.0 / 3.0, -t * 7.0, 450.0 + t};
    seq.labels.push_back(l);
    const auto dir = temp_dir("labels");
    ht::save_sequence(dir / "s.htds", seq);
    const ht::Sequence back = ht::load_sequence(dir / "s.htds");
    ASSERT_EQ(back.labels.size(), 1u);
    EXPECT_EQ(back.labels[0].frame_index, 1);
    EXPECT_EQ(back.labels[0].wrist, l.wrist);
    for (int t = 0; t < 5; ++t) EXPECT_EQ(back.labels[0].fingertips[static_cast<std::size_t>(t)], l.fingertips[static_cast<std::size_t>(t)]);

    { std::ofstream(dir / "empty.csv"); }
    const ht::Sequence none = ht::load_sequence(dir / "s.htds", dir / "empty.csv");
    EXPECT_EQ(none.frames.size(), 2u);
    EXPECT_TRUE(none.labels.empty());
}

namespace {
ht::ErrorKind decode_error(const std::string& bytes) {
    try {
        ht::decode_sequence(bytes);
    } catch (const ht::Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "decode accepted malformed input";
    return ht::ErrorKind::InvalidInput;
}
}  // namespace

TEST(DepthIo, MalformedSequencesAreFormatErrors) {
    const std::string good = ht::encode_sequence({constant_frame(8, 6, 400)}, ht::CameraIntrinsics{10, 10, 4, 3});
    EXPECT_EQ(decode_error(good.substr(0, 10)), ht::ErrorKind::Format);
    std::string magic = good;
    magic[0] = 'X';
    EXPECT_EQ(decode_error(magic), ht::ErrorKind::Format);
    EXPECT_EQ(decode_error(good.substr(0, good.size() - 1)), ht::ErrorKind::Format);
    EXPECT_EQ(decode_error(good + "xx"), ht::ErrorKind::Format);
    std::string version = good;
    version[4] = 9;
    EXPECT_EQ(decode_error(version), ht::ErrorKind::Format);
}

TEST(DepthIo, MissingFileIsIoError) {
    try {
        ht::load_sequence("/nonexistent/dir/x.htds");
        FAIL();
    } catch (const ht::Error& e) {
        EXPECT_EQ(e.kind(), ht::ErrorKind::Io);
    }
}

TEST(DepthIo, BadLabelLineIsFormatError) {
    try {
        ht::decode_labels("frame,wx\n0,1,2\n");
        FAIL();
    } catch (const ht::Error& e) {
        EXPECT_EQ(e.kind(), ht::ErrorKind::Format);
    }
}

TEST(DepthIo, LongRenderedSequenceHasMonotoneIndices) {
    ht::TrajectoryScript script;
    ht::Keyframe a;
    a.frames = 250;
    a.pose = open_hand();
    ht::Keyframe b = a;
    b.pose[ht::dof::kTx] = 40;
    script.keys = {a, b};
    ht::SynthesisOptions opt;
    opt.width = 64;
    opt.height = 48;
    opt.intrinsics = {45, 45, 31.5, 23.5};
    ht::Rng rng(1);
    const auto synth = ht::synthesize_sequence(ht::default_template(), ht::expand_trajectory(script), opt, rng, false);
    const auto dir = temp_dir("long");
    ht::save_sequence(dir / "l.htds", synth.sequence);
    const ht::Sequence back = ht::load_sequence(dir / "l.htds");
    ASSERT_EQ(back.frames.size(), 500u);
    ASSERT_EQ(back.labels.size(), 500u);
    for (int i = 0; i < 500; ++i) {
        EXPECT_EQ(back.frames[static_cast<std::size_t>(i)].frame_index(), i);
        EXPECT_EQ(back.labels[static_cast<std::size_t>(i)].frame_index, i);
    }
}
