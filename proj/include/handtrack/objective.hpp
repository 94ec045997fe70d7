#pragma once

// Three-term model fitting cost, all terms in mm:
//   d2m      mean over sample points of the clamped absolute distance to the nearest sphere surface
//   m2d      mean over spheres of the clamped penalty for spheres that project off the hand
//            segment or float in front of the measured surface
//   overlap  summed interpenetration between spheres of different fingers / finger and palm
// total = w_d2m * d2m + w_m2d * m2d + w_overlap * overlap

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "handtrack/depth_io.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/image_ops.hpp"
#include "handtrack/segmentation.hpp"

namespace handtrack {

struct CostWeights {
    double d2m = 1.0;
    double m2d = 1.0;
    double overlap = 1.0;

    void validate() const {
        if (d2m < 0 || m2d < 0 || overlap < 0) fail(ErrorKind::Config, "cost weights must be non-negative");
        if (d2m == 0 && m2d == 0 && overlap == 0) fail(ErrorKind::Config, "cost weights must not all be zero");
    }
};

struct ObjectiveParams {
    CostWeights weights;
    double d_max = 100.0;  // per-addend clamp, mm
};

struct CostBreakdown {
    double d2m = 0.0;
    double m2d = 0.0;
    double overlap = 0.0;
    double total = 0.0;
};

inline double point_to_model(const Vec3& x, const SphereModel& m) {
    double best = std::numeric_limits<double>::infinity();
    for (const Sphere& s : m.spheres) {
        const double dx = x.x() - s.center.x(), dy = x.y() - s.center.y(), dz = x.z() - s.center.z();
        best = std::min(best, std::abs(std::sqrt(dx * dx + dy * dy + dz * dz) - s.radius));
    }
    return best;
}

namespace detail {

// Structure-of-arrays copy of the sphere set for the inner distance loop.
struct SphereSoA {
    alignas(32) std::array<double, kNumSpheres> x, y, z, r;
    explicit SphereSoA(const SphereModel& m) {
        for (int j = 0; j < kNumSpheres; ++j) {
            const auto& s = m.spheres[static_cast<std::size_t>(j)];
            x[static_cast<std::size_t>(j)] = s.center.x();
            y[static_cast<std::size_t>(j)] = s.center.y();
            z[static_cast<std::size_t>(j)] = s.center.z();
            r[static_cast<std::size_t>(j)] = s.radius;
        }
    }
    double surface_distance(double px, double py, double pz) const {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < kNumSpheres; ++j) {
            const double dx = px - x[j], dy = py - y[j], dz = pz - z[j];
            const double d = std::abs(std::sqrt(dx * dx + dy * dy + dz * dz) - r[j]);
            best = d < best ? d : best;
        }
        return best;
    }
};

}  // namespace detail

inline double cost_data_to_model(std::span<const Vec3> points, const SphereModel& m, double d_max) {
    if (points.empty()) fail(ErrorKind::InvalidInput, "cost_data_to_model: no sample points");
    const detail::SphereSoA soa(m);
    double sum = 0.0;
    for (const Vec3& p : points) sum += std::min(d_max, soa.surface_distance(p.x(), p.y(), p.z()));
    return sum / static_cast<double>(points.size());
}

// Per-frame data shared by every cost evaluation of that frame.
struct Observation {
    const DepthFrame* frame = nullptr;
    const HandMask* mask = nullptr;
    CameraIntrinsics intrinsics;
    Grid<double> distance_to_mask;  // px; 0 inside the mask, +inf everywhere when the mask is empty

    Observation(const DepthFrame& f, const HandMask& m, const CameraIntrinsics& k)
        : frame(&f), mask(&m), intrinsics(k),
          distance_to_mask(euclidean_distance_transform(f.width(), f.height(),
                                                        [&](int u, int v) { return m.contains(u, v); })) {}
};

inline double sphere_data_penalty(const Sphere& s, const Observation& obs, double d_max) {
    const Vec3& c = s.center;
    if (!(c.z() > 0.0)) return d_max;
    const auto& k = obs.intrinsics;
    const double u = k.fx * c.x() / c.z() + k.cx;
    const double v = k.fy * c.y() / c.z() + k.cy;
    const int w = obs.frame->width(), h = obs.frame->height();
    const double uc = std::clamp(u, 0.0, static_cast<double>(w - 1));
    const double vc = std::clamp(v, 0.0, static_cast<double>(h - 1));
    const int pu = static_cast<int>(std::floor(uc + 0.5));
    const int pv = static_cast<int>(std::floor(vc + 0.5));
    const bool inside_image = uc == u && vc == v;
    if (inside_image && obs.mask->contains(pu, pv)) {
        const double observed = obs.frame->at(pu, pv);
        if (c.z() >= observed - s.radius) return 0.0;
        return std::min(d_max, observed - (c.z() - s.radius));
    }
    const double px = obs.distance_to_mask(pu, pv) + std::hypot(u - pu, v - pv);
    if (!std::isfinite(px)) return d_max;
    return std::min(d_max, px * c.z() / k.fx);
}

inline double cost_model_to_data(const SphereModel& m, const Observation& obs, double d_max) {
    double sum = 0.0;
    for (const Sphere& s : m.spheres) sum += sphere_data_penalty(s, obs, d_max);
    return sum / kNumSpheres;
}

inline double cost_model_to_data(const SphereModel& m, const DepthFrame& frame, const HandMask& mask,
                                 const CameraIntrinsics& k, double d_max) {
    return cost_model_to_data(m, Observation(frame, mask, k), d_max);
}

// Whether the pair (i, j) is checked for interpenetration. Excluded: spheres of the same
// part, the rigid palm/thumb-base block, and each finger's first sphere against the palm block.
inline bool overlap_pair_checked(int i, int j, Part pi, Part pj) {
    if (pi == pj) return false;
    const bool rigid_i = pi == Part::Palm || pi == Part::ThumbBase;
    const bool rigid_j = pj == Part::Palm || pj == Part::ThumbBase;
    if (rigid_i && rigid_j) return false;
    auto is_base = [](int idx) { return idx >= kFirstFingerSphere && (idx - kFirstFingerSphere) % kSpheresPerFinger == 0; };
    if ((rigid_i && is_base(j)) || (rigid_j && is_base(i))) return false;
    return true;
}

inline const std::vector<std::pair<int, int>>& overlap_pairs() {
    static const std::vector<std::pair<int, int>> pairs = [] {
        std::vector<std::pair<int, int>> out;
        const SphereModel m = pose_spheres(default_template(), HandSize{}, HandPose{});
        for (int i = 0; i < kNumSpheres; ++i)
            for (int j = i + 1; j < kNumSpheres; ++j)
                if (overlap_pair_checked(i, j, m.spheres[static_cast<std::size_t>(i)].part, m.spheres[static_cast<std::size_t>(j)].part))
                    out.emplace_back(i, j);
        return out;
    }();
    return pairs;
}

inline double cost_overlap(const SphereModel& m) {
    double sum = 0.0;
    for (const auto& [i, j] : overlap_pairs()) {
        const Sphere& a = m.spheres[static_cast<std::size_t>(i)];
        const Sphere& b = m.spheres[static_cast<std::size_t>(j)];
        const double reach = a.radius + b.radius;
        const Vec3 d = a.center - b.center;
        const double d2 = d.squaredNorm();
        if (d2 < reach * reach) sum += reach - std::sqrt(d2);
    }
    return sum;
}

inline CostBreakdown combine(double d2m, double m2d, double overlap, const CostWeights& w) {
    return {d2m, m2d, overlap, w.d2m * d2m + w.m2d * m2d + w.overlap * overlap};
}

inline CostBreakdown total_cost(std::span<const Vec3> points, const Observation& obs, const HandTemplate& tmpl,
                                const HandSize& size, const HandPose& pose, const ObjectiveParams& params) {
    const SphereModel m = pose_spheres(tmpl, size, pose);
    const double d2m = params.weights.d2m != 0 ? cost_data_to_model(points, m, params.d_max) : 0.0;
    const double m2d = params.weights.m2d != 0 ? cost_model_to_data(m, obs, params.d_max) : 0.0;
    const double ov = params.weights.overlap != 0 ? cost_overlap(m) : 0.0;
    return combine(d2m, m2d, ov, params.weights);
}

}  // namespace handtrack
