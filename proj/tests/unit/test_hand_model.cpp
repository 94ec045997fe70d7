#include <gtest/gtest.h>

#include <fstream>
#include <numbers>
#include <sstream>

#include "test_support.hpp"

using namespace testing_support;
using ht::Vec3;

namespace {

ht::HandPose random_pose(std::mt19937_64& rng, const ht::HandTemplate& t) {
    ht::HandPose p;
    for (int i = 0; i < ht::kPoseDofs; ++i) {
        const auto lim = t.pose_limits[static_cast<std::size_t>(i)];
        double lo = lim.lo, hi = lim.hi;
        if (i == ht::dof::kTz) lo = 300, hi = 700;
        else if (ht::dof::is_translation(i)) lo = -100, hi = 100;
        p[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    return p;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(HandModel, FixtureFileMatchesBuiltInTemplate) {
    const std::string text = read_text(data_path("hand_template_v1.txt"));
    ASSERT_FALSE(text.empty());
    EXPECT_EQ(text, ht::serialize_template(ht::default_template()));
    const ht::HandTemplate loaded = ht::load_template(data_path("hand_template_v1.txt"));
    const auto a = ht::pose_spheres(loaded, {}, {});
    const auto b = ht::pose_spheres(ht::default_template(), {}, {});
    for (int i = 0; i < ht::kNumSpheres; ++i) {
        EXPECT_EQ(a.spheres[static_cast<std::size_t>(i)].center, b.spheres[static_cast<std::size_t>(i)].center);
        EXPECT_EQ(a.spheres[static_cast<std::size_t>(i)].radius, b.spheres[static_cast<std::size_t>(i)].radius);
    }
}

TEST(HandModel, TemplateTextRoundTrip) {
    const ht::HandTemplate t = ht::default_template();
    EXPECT_EQ(ht::serialize_template(ht::parse_template(ht::serialize_template(t))), ht::serialize_template(t));
}

TEST(HandModel, MalformedTemplateIsFormatError) {
    for (const std::string bad : {"", "handtrack-template 2\n", "handtrack-template 1\npalm 1 2\n",
                                  "handtrack-template 1\nbogus 1 2 3\n"}) {
        try {
            ht::parse_template(bad);
            ADD_FAILURE() << "accepted: " << bad;
        } catch (const ht::Error& e) {
            EXPECT_EQ(e.kind(), ht::ErrorKind::Format);
        }
    }
}

TEST(HandModel, CanonicalLayout) {
    const ht::HandTemplate t = ht::default_template();
    const ht::SphereModel m = ht::pose_spheres(t, {}, {});
    int counts[7] = {};
    for (const auto& s : m.spheres) ++counts[static_cast<int>(s.part)];
    EXPECT_EQ(counts[0], 16);
    EXPECT_EQ(counts[1], 2);
    for (int f = 2; f < 7; ++f) EXPECT_EQ(counts[f], 6);
    for (int i = 0; i < ht::kPalmSpheres; ++i) EXPECT_EQ(m.spheres[static_cast<std::size_t>(i)].center, t.palm_centers[static_cast<std::size_t>(i)]);
    // Open hand: all centres in the z = 0 plane, fingertips above (image-up of) the palm.
    for (const auto& s : m.spheres) EXPECT_NEAR(s.center.z(), 0.0, 1e-12);
    for (int f = 1; f < ht::kNumFingers; ++f) EXPECT_LT(m.tips[static_cast<std::size_t>(f)].y(), -140.0);
    EXPECT_EQ(m.wrist, Vec3::Zero());
    // Middle fingertip: straight up from its base by the chain length minus the tip radius.
    EXPECT_NEAR(m.tips[2].x(), 8.5, 1e-12);
    EXPECT_NEAR(m.tips[2].y(), -94.0 - (44 + 26 + 20 - 8), 1e-12);
}

TEST(HandModel, SphereCentresLieOnPhalanxSegments) {
    const ht::HandTemplate t = ht::default_template();
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const ht::HandPose p = random_pose(rng, t);
        const ht::SphereModel m = ht::pose_spheres(t, {}, p);
        for (int f = 0; f < ht::kNumFingers; ++f) {
            // Each centre is within the chain's reach of the junction, in increasing order.
            double prev = -1;
            for (int k = 0; k < ht::kSpheresPerFinger; ++k) {
                const double d = (m.spheres[static_cast<std::size_t>(ht::finger_sphere(f, k))].center - m.junctions[static_cast<std::size_t>(f)]).norm();
                EXPECT_LE(d, t.finger_length(f) + 1e-9);
                if (p[ht::dof::pip(f)] == 0 && p[ht::dof::dip(f)] == 0) {
                    EXPECT_GT(d, prev);
                }
                prev = d;
            }
        }
    }
}

TEST(HandModel, TranslationShiftsEveryCentre) {
    const auto t = ht::default_template();
    const ht::SphereModel a = ht::pose_spheres(t, {}, {});
    ht::HandPose p;
    p[ht::dof::kTx] = 10;
    const ht::SphereModel b = ht::pose_spheres(t, {}, p);
    for (int i = 0; i < ht::kNumSpheres; ++i)
        EXPECT_LE((b.spheres[static_cast<std::size_t>(i)].center - a.spheres[static_cast<std::size_t>(i)].center - Vec3(10, 0, 0)).norm(), 1e-12);
}

TEST(HandModel, DoublingIndexScaleDoublesItsReach) {
    const auto t = ht::default_template();
    const ht::SphereModel a = ht::pose_spheres(t, {}, {});
    ht::HandSize l;
    l.l[2] = 2.0;
    const ht::SphereModel b = ht::pose_spheres(t, l, {});
    const double da = (a.tips[1] - a.junctions[1]).norm();
    const double db = (b.tips[1] - b.junctions[1]).norm();
    EXPECT_NEAR(db, 2 * da, 1e-9);
    // Direct accumulation along the straight chain: last arc = total length - tip radius.
    EXPECT_NEAR(da, 40 + 24 + 19 - 8, 1e-9);
    for (int i = 0; i < ht::kNumSpheres; ++i)
        if (a.spheres[static_cast<std::size_t>(i)].part != ht::Part::Index) {
            EXPECT_EQ(a.spheres[static_cast<std::size_t>(i)].center, b.spheres[static_cast<std::size_t>(i)].center);
        }
}

TEST(HandModel, SizeMonotonicityPerFinger) {
    const auto t = ht::default_template();
    ht::HandPose p = open_hand();
    p[ht::dof::mcp_flex(3)] = 0.4;
    for (int f = 0; f < ht::kNumFingers; ++f) {
        double prev = 0;
        for (double s : {0.6, 0.8, 1.0, 1.2, 1.4}) {
            ht::HandSize l;
            l.l[static_cast<std::size_t>(1 + f)] = s;
            const auto m = ht::pose_spheres(t, l, p);
            const double reach = (m.tips[static_cast<std::size_t>(f)] - m.junctions[static_cast<std::size_t>(f)]).norm();
            EXPECT_GT(reach, prev);
            prev = reach;
        }
    }
}

TEST(HandModel, FingertipsRotateWithTheHand) {
    const auto t = ht::default_template();
    ht::HandPose p;
    p[ht::dof::kRx] = 0.3;
    p[ht::dof::kRy] = -0.7;
    p[ht::dof::kRz] = 1.1;
    const auto R = ht::rotation_xyz(0.3, -0.7, 1.1);
    const auto a = ht::pose_spheres(t, {}, {});
    const auto b = ht::pose_spheres(t, {}, p);
    for (int f = 0; f < ht::kNumFingers; ++f)
        EXPECT_LE((b.tips[static_cast<std::size_t>(f)] - R * a.tips[static_cast<std::size_t>(f)]).norm(), 1e-9);
}

TEST(HandModel, NinetyDegreeMiddleFlexByHand) {
    const auto t = ht::default_template();
    ht::HandPose p;
    p[ht::dof::mcp_flex(2)] = std::numbers::pi / 2;
    const auto m = ht::pose_spheres(t, {}, p);
    // Base at (8.5, -94, 0); the whole chain now points at the camera (-z).
    EXPECT_NEAR(m.tips[2].x(), 8.5, 1e-9);
    EXPECT_NEAR(m.tips[2].y(), -94.0, 1e-9);
    EXPECT_NEAR(m.tips[2].z(), -(44.0 + 26.0 + 20.0 - 8.0), 1e-9);
}

TEST(HandModel, RigidEquivariance) {
    const auto t = ht::default_template();
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const ht::HandPose p = random_pose(rng, t);
        const Eigen::Matrix3d RT = ht::rotation_xyz(0.4 * trial / 100.0, -0.3, 0.2 + 0.01 * trial);
        const Vec3 tT{5.0 * trial, -20.0, 30.0};
        const Eigen::Matrix3d R = RT * ht::global_rotation(p);
        const Vec3 e = R.eulerAngles(0, 1, 2);
        ht::HandPose q = p;
        q[ht::dof::kRx] = e.x();
        q[ht::dof::kRy] = e.y();
        q[ht::dof::kRz] = e.z();
        q.set_translation(RT * p.translation() + tT);
        const auto a = ht::pose_spheres(t, {}, p);
        const auto b = ht::pose_spheres(t, {}, q);
        for (int i = 0; i < ht::kNumSpheres; ++i)
            EXPECT_LE((b.spheres[static_cast<std::size_t>(i)].center - (RT * a.spheres[static_cast<std::size_t>(i)].center + tT)).norm(), 1e-9);
    }
}

TEST(HandModel, LipschitzContinuity) {
    // Largest lever arm: global rotation about the wrist reaching the farthest fingertip.
    const auto t = ht::default_template();
    const double K = 250.0;
    std::mt19937_64 rng(23);
    const double eps = 1e-4;
    for (int trial = 0; trial < 50; ++trial) {
        const ht::HandPose p = random_pose(rng, t);
        const auto a = ht::pose_spheres(t, {}, p);
        for (int d = 0; d < ht::kPoseDofs; ++d) {
            ht::HandPose q = p;
            q[d] += eps;
            const auto b = ht::pose_spheres(t, {}, q);
            double worst = 0;
            for (int i = 0; i < ht::kNumSpheres; ++i)
                worst = std::max(worst, (a.spheres[static_cast<std::size_t>(i)].center - b.spheres[static_cast<std::size_t>(i)].center).norm());
            EXPECT_LE(worst, K * eps) << "dof " << d;
        }
    }
}

TEST(HandModel, ClampingBounds) {
    const auto t = ht::default_template();
    ht::HandSize l;
    l.l[0] = 9.0;
    l.l[1] = 0.1;
    const ht::HandSize c = ht::clamp_size(t, l);
    EXPECT_EQ(c.l[0], 1.6);
    EXPECT_EQ(c.l[1], 0.4);
    EXPECT_EQ(c.l[2], 1.0);

    ht::HandPose in = open_hand();
    in[ht::dof::mcp_flex(1)] = 0.5;
    EXPECT_EQ(ht::clamp_pose(t, in), in);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> wild(-10, 10);
    for (int trial = 0; trial < 200; ++trial) {
        ht::HandPose p;
        ht::HandSize s;
        for (int i = 0; i < ht::kPoseDofs; ++i) p[i] = wild(rng) * (ht::dof::is_translation(i) ? 300 : 1);
        for (double& x : s.l) x = wild(rng);
        const auto [s1, p1] = ht::clamp_params(t, s, p);
        const auto [s2, p2] = ht::clamp_params(t, s1, p1);
        EXPECT_EQ(s1, s2);
        EXPECT_EQ(p1, p2);
    }
}

TEST(HandModel, InPlaneAngleFollowsRotationAboutOpticalAxis) {
    for (double a : {-2.0, -0.5, 0.0, 0.3, 1.4, 3.0}) {
        ht::HandPose p;
        p[ht::dof::kRz] = a;
        EXPECT_NEAR(ht::in_plane_angle(p), a, 1e-12);
    }
    EXPECT_NEAR(ht::wrap_angle(3 * std::numbers::pi), std::numbers::pi, 1e-12);
    EXPECT_NEAR(ht::wrap_angle(-0.25), -0.25, 1e-15);
}

TEST(HandModel, NeutralPosePlacesPalmSurface) {
    const auto t = ht::default_template();
    const Vec3 target{12, 40, 455};
    const ht::HandPose p = ht::neutral_pose_at(t, {}, target);
    const auto m = ht::pose_spheres(t, {}, p);
    EXPECT_LE((m.palm_center - Vec3(0, 0, t.palm_radius) - target).norm(), 1e-9);
}
