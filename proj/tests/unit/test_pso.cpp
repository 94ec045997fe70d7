#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace testing_support;
using ht::Vec3;

namespace {

struct Problem {
    ht::HandTemplate tmpl = ht::default_template();
    ht::HandPose truth;
    ht::RenderOutput render;
    ht::HandMask mask;
    ht::SampleSet samples;
    std::unique_ptr<ht::Observation> obs;

    explicit Problem(const ht::HandPose& gt, std::uint64_t seed = 1) : truth(gt) {
        render = clean_render(gt);
        mask = ht::segment_hand(render.frame);
        ht::Rng rng(seed);
        samples = ht::sample(render.frame, mask, ht::gradient_map(render.frame, mask), kCam, {}, rng);
        obs = std::make_unique<ht::Observation>(render.frame, mask, kCam);
    }
};

ht::TrackState state_at(const ht::HandPose& p, const ht::HandSize& s = {}) {
    ht::TrackState st;
    st.pose = p;
    st.size = s;
    return st;
}

ht::HandPose articulated() {
    ht::HandPose p = open_hand(5, 55, 460);
    p[ht::dof::kRz] = 0.15;
    p[ht::dof::mcp_flex(1)] = 0.4;
    p[ht::dof::mcp_flex(3)] = 0.7;
    p[ht::dof::pip(3)] = 0.5;
    return p;
}

double mean_tip_error(const ht::HandTemplate& t, const ht::HandSize& sa, const ht::HandPose& a, const ht::HandPose& b) {
    const auto ma = ht::pose_spheres(t, sa, a);
    const auto mb = ht::pose_spheres(t, {}, b);
    double e = 0;
    for (int f = 0; f < 5; ++f) e += (ma.tips[static_cast<std::size_t>(f)] - mb.tips[static_cast<std::size_t>(f)]).norm();
    return e / 5;
}

}  // namespace

TEST(Swarm, WeightsAlwaysSumToTwo) {
    ht::Rng rng(1);
    for (int i = 0; i < 100000; ++i) {
        const auto w = ht::draw_weights(rng);
        ASSERT_EQ(w.a1 + w.a2, 2.0);
        ASSERT_GE(w.a1, 0.5);
        ASSERT_LE(w.a1, 1.5);
    }
}

TEST(Swarm, PersonalAndGlobalBestAtCurrentPoseIsAFixedPoint) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 100; ++i) {
        ht::HandPose p;
        for (double& x : p.p) x = std::uniform_real_distribution<double>(-2, 2)(rng);
        const double a1 = std::uniform_real_distribution<double>(0.5, 1.5)(rng);
        EXPECT_EQ(ht::move_pose(p, p, p, {a1, 2 - a1}), p);
    }
}

TEST(Swarm, MoveFollowsUpdateRule) {
    ht::HandPose p, b, g;
    for (int d = 0; d < ht::kPoseDofs; ++d) {
        p[d] = 0.1 * d;
        b[d] = 0.3 - 0.05 * d;
        g[d] = 1.0;
    }
    const auto q = ht::move_pose(p, b, g, {0.7, 1.3});
    for (int d = 0; d < ht::kPoseDofs; ++d) EXPECT_EQ(q[d], p[d] + (0.7 * (b[d] - p[d]) + 1.3 * (g[d] - p[d])));
}

TEST(Swarm, ZeroNoiseWithoutHintsCopiesPrevious) {
    const auto t = ht::default_template();
    ht::SwarmConfig cfg;
    cfg.sigma_translation = cfg.sigma_angle = 0;
    const ht::TrackState prev = state_at(articulated(), ht::HandSize{{1.1, 0.9, 1, 1.05, 1, 0.95}});
    ht::Rng rng(4);
    const auto particles = ht::init_particles(t, prev, {}, cfg, rng, 0.0);
    ASSERT_EQ(particles.size(), 256u);
    for (const auto& pt : particles) {
        EXPECT_EQ(pt.pose, prev.pose);
        EXPECT_EQ(pt.size, prev.size);
        EXPECT_FALSE(pt.hinted);
    }
}

TEST(Swarm, HintsGoToAQuarterOfTheSwarm) {
    const auto t = ht::default_template();
    ht::SwarmConfig cfg;
    cfg.sigma_angle = 0;
    ht::ReinitHints hints;
    for (int f = 0; f < 5; ++f) hints.fingers[static_cast<std::size_t>(f)] = ht::FingerHint{Vec3::Zero(), 0.2 + 0.1 * f, 0.05, 0.3, 0.2};
    const ht::TrackState prev = state_at(open_hand());
    ht::Rng rng(5);
    const auto particles = ht::init_particles(t, prev, hints, cfg, rng, 0.0);
    int hinted = 0;
    for (const auto& pt : particles) {
        if (!pt.hinted) continue;
        ++hinted;
        for (int f = 0; f < 5; ++f) {
            EXPECT_DOUBLE_EQ(pt.pose[ht::dof::mcp_flex(f)], 0.2 + 0.1 * f);
            EXPECT_DOUBLE_EQ(pt.pose[ht::dof::mcp_abduct(f)], 0.05);
            EXPECT_DOUBLE_EQ(pt.pose[ht::dof::pip(f)], 0.3);
            EXPECT_DOUBLE_EQ(pt.pose[ht::dof::dip(f)], 0.2);
        }
    }
    EXPECT_EQ(hinted, 64);
}

TEST(Swarm, PalmHintTurnsInPlaneAngle) {
    const auto t = ht::default_template();
    ht::SwarmConfig cfg;
    cfg.sigma_angle = 0;
    cfg.sigma_translation = 0;
    ht::ReinitHints hints;
    hints.palm_orientation = 0.5;
    ht::Rng rng(6);
    const auto particles = ht::init_particles(t, state_at(open_hand()), hints, cfg, rng, 0.0);
    int hinted = 0;
    for (const auto& pt : particles)
        if (pt.hinted) {
            ++hinted;
            EXPECT_NEAR(ht::in_plane_angle(pt.pose), 0.5, 1e-12);
        } else {
            EXPECT_NEAR(ht::in_plane_angle(pt.pose), 0.0, 1e-12);
        }
    EXPECT_EQ(hinted, 64);
}

TEST(Swarm, SizeNoiseHasRequestedSpread) {
    const auto t = ht::default_template();
    ht::SwarmConfig cfg;
    double sum = 0, sum2 = 0;
    long n = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        ht::Rng rng(seed);
        for (const auto& pt : ht::init_particles(t, state_at(open_hand()), {}, cfg, rng, 0.01)) {
            const double x = pt.size.l[0] - 1.0;
            sum += x;
            sum2 += x * x;
            ++n;
        }
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sum2 / n - mean * mean);
    const double se = 0.01 / std::sqrt(2.0 * n);
    EXPECT_NEAR(sd, 0.01, 3 * se);
}

TEST(Swarm, SingleGenerationOfIdenticalParticlesReturnsThem) {
    const Problem pr(articulated());
    ht::SwarmConfig cfg;
    cfg.n_generations = 1;
    cfg.sigma_translation = cfg.sigma_angle = 0;
    const ht::HandPose start = open_hand(0, 60, 455);
    const ht::TrackState prev = state_at(start, ht::HandSize::uniform(1.05));
    ht::Rng rng(7);
    auto particles = ht::init_particles(pr.tmpl, prev, {}, cfg, rng, 0.0);
    const auto res = ht::run_generations(particles, pr.samples.points, *pr.obs, pr.tmpl, {}, cfg, prev, rng);
    EXPECT_EQ(res.pose, start);
    EXPECT_EQ(res.size, prev.size);
    const auto c = ht::total_cost(pr.samples.points, *pr.obs, pr.tmpl, prev.size, start, {});
    EXPECT_EQ(res.cost.total, c.total);
    EXPECT_EQ(res.best_particle, 0);
}

TEST(Swarm, DegenerateSwarmReturnsPreviousParameters) {
    const Problem pr(articulated());
    ht::SwarmConfig cfg;
    cfg.sigma_translation = cfg.sigma_angle = cfg.sigma_size = 0;
    cfg.hint_fraction = 0;
    ht::ReinitHints hints;
    hints.palm_orientation = 1.0;  // ignored: no particle may carry it
    const ht::TrackState prev = state_at(open_hand(3, 58, 452), ht::HandSize{{1.1, 0.9, 1, 1.05, 1, 0.95}});
    ht::Rng rng(8);
    auto particles = ht::init_particles(pr.tmpl, prev, hints, cfg, rng, cfg.sigma_size);
    const auto res = ht::run_generations(particles, pr.samples.points, *pr.obs, pr.tmpl, {}, cfg, prev, rng);
    EXPECT_EQ(res.pose, prev.pose);
    EXPECT_EQ(res.size, prev.size);
}

TEST(Swarm, GlobalBestIsMonotoneAndSizesNeverMove) {
    const Problem pr(articulated());
    ht::SwarmConfig cfg;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ht::HandPose start = articulated();
        start[ht::dof::kTx] += 12;
        start[ht::dof::mcp_flex(3)] -= 0.3;
        const ht::TrackState prev = state_at(start);
        ht::Rng rng(seed);
        auto particles = ht::init_particles(pr.tmpl, prev, {}, cfg, rng, 0.01);
        std::vector<ht::HandSize> sizes;
        for (const auto& p : particles) sizes.push_back(p.size);
        const auto res = ht::run_generations(particles, pr.samples.points, *pr.obs, pr.tmpl, {}, cfg, prev, rng);
        ASSERT_EQ(res.best_cost_history.size(), 6u);
        for (std::size_t g = 1; g < res.best_cost_history.size(); ++g)
            EXPECT_LE(res.best_cost_history[g], res.best_cost_history[g - 1]);
        EXPECT_EQ(res.best_cost_history.back(), res.cost.total);
        for (std::size_t i = 0; i < particles.size(); ++i) EXPECT_EQ(particles[i].size, sizes[i]);
    }
}

TEST(Swarm, FirstGenerationScoresWithPreviousSize) {
    const Problem pr(articulated());
    ht::SwarmConfig cfg;
    cfg.n_generations = 1;
    const ht::TrackState prev = state_at(articulated(), ht::HandSize::uniform(0.97));
    ht::Rng rng(2);
    auto particles = ht::init_particles(pr.tmpl, prev, {}, cfg, rng, 0.05);
    const auto res = ht::run_generations(particles, pr.samples.points, *pr.obs, pr.tmpl, {}, cfg, prev, rng);
    EXPECT_EQ(res.size, prev.size);
}

TEST(Swarm, DeterministicAcrossRunsAndThreadCounts) {
    const Problem pr(articulated());
    ht::SwarmConfig cfg;
    ht::HandPose start = articulated();
    start[ht::dof::kTy] -= 10;
    const ht::TrackState prev = state_at(start);
    auto run = [&](ht::ThreadPool* pool) {
        ht::Rng rng(42);
        auto particles = ht::init_particles(pr.tmpl, prev, {}, cfg, rng, 0.01);
        return ht::run_generations(particles, pr.samples.points, *pr.obs, pr.tmpl, {}, cfg, prev, rng, pool);
    };
    const auto a = run(nullptr);
    const auto b = run(nullptr);
    ht::ThreadPool pool4(4);
    const auto c = run(&pool4);
    for (const auto* r : {&b, &c}) {
        EXPECT_EQ(r->pose, a.pose);
        EXPECT_EQ(r->size, a.size);
        EXPECT_EQ(r->cost.total, a.cost.total);
        EXPECT_EQ(r->best_cost_history, a.best_cost_history);
    }
}

TEST(Swarm, RecoversFifteenMillimetreOffset) {
    const ht::HandPose gt = articulated();
    const Problem pr(gt);
    ht::SwarmConfig cfg;
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 dir_rng(1000 + seed);
        std::normal_distribution<double> n(0, 1);
        Vec3 d{n(dir_rng), n(dir_rng), n(dir_rng)};
        ht::HandPose start = gt;
        start.set_translation(gt.translation() + 15.0 * d.normalized());
        const ht::TrackState prev = state_at(start);
        ht::Rng rng(seed);
        auto particles = ht::init_particles(pr.tmpl, prev, {}, cfg, rng, 0.0);
        const auto res = ht::run_generations(particles, pr.samples.points, *pr.obs, pr.tmpl, {}, cfg, prev, rng);
        ok += mean_tip_error(pr.tmpl, res.size, res.pose, gt) <= 5.0;
    }
    EXPECT_GE(ok, 90);
}

TEST(Swarm, InvalidConfigurationIsRejected) {
    ht::SwarmConfig cfg;
    cfg.n_particles = 1;
    EXPECT_THROW(cfg.validate(), ht::Error);
    cfg = {};
    cfg.hint_fraction = 1.5;
    EXPECT_THROW(cfg.validate(), ht::Error);
    cfg = {};
    cfg.sigma_size = -0.1;
    EXPECT_THROW(cfg.validate(), ht::Error);
}
