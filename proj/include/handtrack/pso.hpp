#pragma once

// Modified particle swarm over (pose, size).
//
// Poses move by  p <- p + a1 (b - p) + a2 (g - p),  a1 ~ U[0.5, 1.5], a2 = 2 - a1,
// with no velocity term. Sizes are drawn once at initialisation and never move. The
// first generation is scored with the previous frame's size for every particle. The
// result is the (pose, size) of the lowest-cost evaluation over all particles and
// generations.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "handtrack/hand_model.hpp"
#include "handtrack/objective.hpp"
#include "handtrack/parallel.hpp"

namespace handtrack {

struct SwarmConfig {
    int n_particles = 256;
    int n_generations = 6;
    double sigma_translation = 10.0;  // mm
    double sigma_angle = 0.08;        // rad, global rotation and finger joints
    double sigma_size = 0.01;         // size noise std-dev
    double hint_fraction = 0.25;

    void validate() const {
        if (n_particles < 2) fail(ErrorKind::Config, "n_particles must be >= 2");
        if (n_generations < 1) fail(ErrorKind::Config, "n_generations must be >= 1");
        if (!(sigma_size >= 0) || !(sigma_translation >= 0) || !(sigma_angle >= 0))
            fail(ErrorKind::Config, "swarm noise scales must be >= 0");
        if (!(hint_fraction >= 0 && hint_fraction <= 1)) fail(ErrorKind::Config, "hint_fraction must be in [0,1]");
    }
    double sigma_for(int dof_index) const { return dof::is_translation(dof_index) ? sigma_translation : sigma_angle; }
};

struct FingerHint {
    Vec3 tip = Vec3::Zero();
    double mcp_flex = 0.0;
    double mcp_abduct = 0.0;
    double pip = 0.0;
    double dip = 0.0;
};

struct ReinitHints {
    std::array<std::optional<FingerHint>, kNumFingers> fingers{};
    std::optional<double> palm_orientation;  // in-plane angle, rad

    int finger_count() const {
        return static_cast<int>(std::count_if(fingers.begin(), fingers.end(), [](const auto& f) { return f.has_value(); }));
    }
};

struct TrackState {
    HandPose pose;
    HandSize size;
    int frame_index = -1;
};

struct Particle {
    HandPose pose;
    HandSize size;
    HandPose best_pose;
    double best_cost = std::numeric_limits<double>::infinity();
    bool hinted = false;
};

struct SwarmResult {
    HandPose pose;
    HandSize size;
    CostBreakdown cost;
    int best_particle = -1;
    int best_generation = -1;
    std::vector<double> best_cost_history;  // global best after each generation
};

// Pose with its in-plane angle turned to `theta` about the hand's own orientation.
inline HandPose with_in_plane_angle(HandPose p, double theta) {
    p[dof::kRz] = wrap_angle(p[dof::kRz] + wrap_angle(theta - in_plane_angle(p)));
    return p;
}

// `size_noise` lets the caller freeze size exploration (0) for a frame.
inline std::vector<Particle> init_particles(const HandTemplate& tmpl, const TrackState& prev, const ReinitHints& hints,
                                            const SwarmConfig& cfg, Rng& rng, double size_noise) {
    cfg.validate();
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<Particle> particles(static_cast<std::size_t>(cfg.n_particles));
    for (Particle& pt : particles) {
        for (int i = 0; i < kPoseDofs; ++i) pt.pose[i] = prev.pose[i] + cfg.sigma_for(i) * unit(rng);
        for (int i = 0; i < kSizeDofs; ++i)
            pt.size.l[static_cast<std::size_t>(i)] = prev.size.l[static_cast<std::size_t>(i)] + size_noise * unit(rng);
    }

    const bool any_hint = hints.finger_count() > 0 || hints.palm_orientation.has_value();
    const int n_hinted = static_cast<int>(std::floor(cfg.hint_fraction * cfg.n_particles));
    if (any_hint && n_hinted > 0) {
        std::vector<int> order(particles.size());
        std::iota(order.begin(), order.end(), 0);
        for (int i = 0; i < n_hinted; ++i) {
            std::uniform_int_distribution<int> pick(i, cfg.n_particles - 1);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
        }
        for (int i = 0; i < n_hinted; ++i) {
            Particle& pt = particles[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
            pt.hinted = true;
            if (hints.palm_orientation) {
                const HandPose rotated = with_in_plane_angle(prev.pose, *hints.palm_orientation);
                pt.pose[dof::kRz] = rotated[dof::kRz] + cfg.sigma_angle * unit(rng);
            }
            for (int f = 0; f < kNumFingers; ++f) {
                const auto& h = hints.fingers[static_cast<std::size_t>(f)];
                if (!h) continue;
                const double values[4] = {h->mcp_flex, h->mcp_abduct, h->pip, h->dip};
                for (int d = 0; d < 4; ++d) pt.pose[dof::finger(f) + d] = values[d] + cfg.sigma_angle * unit(rng);
            }
        }
    }
    for (Particle& pt : particles) {
        pt.pose = clamp_pose(tmpl, pt.pose);
        pt.size = clamp_size(tmpl, pt.size);
        pt.best_pose = pt.pose;
    }
    return particles;
}

struct SwarmWeights {
    double a1 = 1.0;
    double a2 = 1.0;
};

inline SwarmWeights draw_weights(Rng& rng) {
    std::uniform_real_distribution<double> alpha(0.5, 1.5);
    const double a1 = alpha(rng);
    return {a1, 2.0 - a1};
}

inline HandPose move_pose(const HandPose& pose, const HandPose& personal_best, const HandPose& global_best,
                          const SwarmWeights& w) {
    HandPose out = pose;
    for (int d = 0; d < kPoseDofs; ++d)
        out[d] += w.a1 * (personal_best[d] - pose[d]) + w.a2 * (global_best[d] - pose[d]);
    return out;
}

inline SwarmResult run_generations(std::vector<Particle>& particles, std::span<const Vec3> points, const Observation& obs,
                                   const HandTemplate& tmpl, const ObjectiveParams& objective, const SwarmConfig& cfg,
                                   const TrackState& prev, Rng& rng, ThreadPool* pool = nullptr) {
    cfg.validate();
    const int n = static_cast<int>(particles.size());
    SwarmResult best;
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<CostBreakdown> costs(particles.size());

    for (int gen = 0; gen < cfg.n_generations; ++gen) {
        const bool first = gen == 0;
        auto evaluate = [&](int i) {
            const Particle& pt = particles[static_cast<std::size_t>(i)];
            costs[static_cast<std::size_t>(i)] = total_cost(points, obs, tmpl, first ? prev.size : pt.size, pt.pose, objective);
        };
        if (pool) pool->parallel_for(n, evaluate);
        else
            for (int i = 0; i < n; ++i) evaluate(i);

        // Serial reduction in particle order; strict comparisons keep the lowest index on ties.
        for (int i = 0; i < n; ++i) {
            Particle& pt = particles[static_cast<std::size_t>(i)];
            const CostBreakdown& c = costs[static_cast<std::size_t>(i)];
            if (c.total < pt.best_cost) {
                pt.best_cost = c.total;
                pt.best_pose = pt.pose;
            }
            if (c.total < best_total) {
                best_total = c.total;
                best.pose = pt.pose;
                best.size = first ? prev.size : pt.size;
                best.cost = c;
                best.best_particle = i;
                best.best_generation = gen;
            }
        }
        best.best_cost_history.push_back(best_total);

        if (gen + 1 == cfg.n_generations) break;
        for (Particle& pt : particles)
            pt.pose = clamp_pose(tmpl, move_pose(pt.pose, pt.best_pose, best.pose, draw_weights(rng)));
    }
    return best;
}

}  // namespace handtrack
