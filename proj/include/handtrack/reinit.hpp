#pragma once

// Per-frame re-initialisation: palm centre, planar and orthogonal finger detection,
// palm-orientation prediction and junction-matching finger classification.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include <Eigen/Eigenvalues>

#include "handtrack/depth_io.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/image_ops.hpp"
#include "handtrack/pso.hpp"
#include "handtrack/segmentation.hpp"

namespace handtrack {

struct ReinitParams {
    double planar_area_lo = 0.4;        // x expected finger footprint (length x width)
    double planar_area_hi = 2.5;
    double extreme_margin = 0.5;        // extreme point must lie beyond palm radius + margin * finger length
    double ortho_window = 1.5;          // window side, x expected finger width
    double ortho_area_lo = 0.4;         // x expected fingertip disk area
    double ortho_area_hi = 2.0;
    double ortho_protrusion_mm = 25.0;  // min height of an orthogonal tip above the palm surface
    int max_candidates = 12;
    double e_init = 0.1;                // initial e_m, e_o (rad)
    double a1 = 0.5;
    double a2 = 0.5;
    bool use_prediction = true;         // false: classify with the raw measured orientation
};

enum class FingerKind { Planar, Orthogonal };

struct DetectedFinger {
    Pixel tip_px;
    Vec3 tip = Vec3::Zero();
    Vec3 direction = Vec3::Zero();  // unit, tip-ward
    FingerKind kind = FingerKind::Planar;
    std::vector<Pixel> region;
    Vec3 junction = Vec3::Zero();
};

struct PalmCenter {
    Pixel px;
    Vec3 point = Vec3::Zero();
    double radius_px = 0.0;  // distance-transform maximum
};

struct PalmState {
    PalmCenter center;
    double theta_m = 0.0;       // measured this frame
    double theta_p = 0.0;       // predicted this frame
    double theta_o = 0.0;       // optimiser estimate of the previous frame
    double prior_prev = 0.0;    // prior used for the previous frame (theta_o,t-2 + c_t-2)
    double c = 0.0;             // theta_o,t-1 - theta_o,t-2
    double prev_theta_m = 0.0;
    double e_m = 0.1;
    double e_o = 0.1;
    int history = 0;            // optimised frames seen so far

    static PalmState initial(double e_init) {
        PalmState s;
        s.e_m = s.e_o = e_init;
        return s;
    }
};

struct Classification {
    std::vector<int> assignment;  // detected index -> class 0..4 (thumb..pinky)
    std::vector<int> initial;     // nearest-junction classes before conflict resolution
};

// Geometry the detector derives from the current size estimate, in pixels at palm depth.
struct FingerScale {
    double length_mm = 80.0;
    double width_mm = 17.0;
    double length_px = 40.0;
    double width_px = 9.0;
};

inline FingerScale finger_scale(const HandTemplate& tmpl, const HandSize& size, double palm_depth_mm,
                                const CameraIntrinsics& k) {
    FingerScale s;
    double len = 0.0, rad = 0.0;
    for (int f = 1; f < kNumFingers; ++f) {
        len += tmpl.finger_length(f) * size.finger(f);
        const auto& r = tmpl.fingers[static_cast<std::size_t>(f)].radii;
        for (double x : r) rad += x;
    }
    s.length_mm = len / (kNumFingers - 1);
    s.width_mm = 2.0 * rad / ((kNumFingers - 1) * kSpheresPerFinger);
    s.length_px = s.length_mm * k.fx / palm_depth_mm;
    s.width_px = s.width_mm * k.fx / palm_depth_mm;
    return s;
}

// Mask plus every non-member region not connected to the image border (sensor dropouts
// inside the hand would otherwise pull the distance transform down).
inline Grid<std::uint8_t> fill_holes(const HandMask& mask) {
    Grid<std::uint8_t> outside(mask.width, mask.height, 0);
    std::vector<Pixel> stack;
    auto push = [&](int u, int v) {
        if (!outside.in_bounds(u, v) || outside(u, v) || mask.contains(u, v)) return;
        outside(u, v) = 1;
        stack.push_back({u, v});
    };
    for (int u = 0; u < mask.width; ++u) {
        push(u, 0);
        push(u, mask.height - 1);
    }
    for (int v = 0; v < mask.height; ++v) {
        push(0, v);
        push(mask.width - 1, v);
    }
    while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        push(p.u + 1, p.v);
        push(p.u - 1, p.v);
        push(p.u, p.v + 1);
        push(p.u, p.v - 1);
    }
    for (auto& x : outside.values) x = !x;
    return outside;
}

inline PalmCenter palm_center(const HandMask& mask, const DepthFrame& frame, const CameraIntrinsics& k) {
    if (mask.empty()) fail(ErrorKind::InvalidInput, "palm_center: empty mask");
    const Grid<std::uint8_t> solid = fill_holes(mask);
    const auto dt = euclidean_distance_transform(mask.width, mask.height, [&](int u, int v) { return !solid(u, v); });
    PalmCenter pc;
    double best = -1.0;
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u)
            if (mask.contains(u, v) && dt(u, v) > best) {
                best = dt(u, v);
                pc.px = {u, v};
            }
    pc.radius_px = best;
    pc.point = pixel_to_camera(pc.px.u, pc.px.v, frame.at(pc.px.u, pc.px.v), k);
    return pc;
}

// 8-connected chamfer geodesic distance inside `allowed`, from `source`, up to `limit`.
template <typename Allowed>
Grid<double> geodesic_distance(int width, int height, Pixel source, Allowed allowed,
                               double limit = std::numeric_limits<double>::infinity()) {
    Grid<double> dist(width, height, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist(source.u, source.v) = 0.0;
    queue.push({0.0, source.v * width + source.u});
    constexpr int du[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    constexpr int dv[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    constexpr double step[8] = {1, 1, 1, 1, std::numbers::sqrt2, std::numbers::sqrt2, std::numbers::sqrt2, std::numbers::sqrt2};
    while (!queue.empty()) {
        const auto [d, idx] = queue.top();
        queue.pop();
        const int u = idx % width, v = idx / width;
        if (d > dist(u, v)) continue;
        for (int n = 0; n < 8; ++n) {
            const int nu = u + du[n], nv = v + dv[n];
            if (nu < 0 || nv < 0 || nu >= width || nv >= height || !allowed(nu, nv)) continue;
            const double nd = d + step[n];
            if (nd > limit || nd >= dist(nu, nv)) continue;
            dist(nu, nv) = nd;
            queue.push({nd, nv * width + nu});
        }
    }
    return dist;
}

namespace detail {

inline Vec3 back_project_near(const DepthFrame& frame, Pixel p, const CameraIntrinsics& k) {
    for (int r = 0; r <= 3; ++r)
        for (int dv = -r; dv <= r; ++dv)
            for (int du = -r; du <= r; ++du) {
                const int d = frame.at_or_zero(p.u + du, p.v + dv);
                if (d > 0) return pixel_to_camera(p.u, p.v, d, k);
            }
    fail(ErrorKind::InvalidInput, "no valid depth near detected point");
}

// Principal axis of the region's back-projected points, signed toward `toward`.
inline Vec3 principal_axis(const std::vector<Pixel>& region, const DepthFrame& frame, const CameraIntrinsics& k,
                           const Vec3& toward) {
    Vec3 mean = Vec3::Zero();
    std::vector<Vec3> pts;
    pts.reserve(region.size());
    for (const Pixel& p : region) {
        const int d = frame.at(p.u, p.v);
        if (d == 0) continue;
        pts.push_back(pixel_to_camera(p.u, p.v, d, k));
        mean += pts.back();
    }
    if (pts.size() < 2) return Vec3::UnitY() * -1.0;
    mean /= static_cast<double>(pts.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const Vec3& x : pts) cov += (x - mean) * (x - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Vec3 axis = eig.eigenvectors().col(2).normalized();
    if (axis.dot(toward - mean) < 0) axis = -axis;
    return axis;
}

}  // namespace detail

struct DetectionResult {
    std::vector<DetectedFinger> fingers;
    Grid<std::uint8_t> claimed;  // 1 = finger region, 2 = rejected candidate region
};

inline DetectionResult detect_planar_fingers(const HandMask& mask, const DepthFrame& frame, const CameraIntrinsics& k,
                                             const PalmCenter& palm, const FingerScale& scale,
                                             const ReinitParams& params = {}) {
    DetectionResult out;
    out.claimed = Grid<std::uint8_t>(mask.width, mask.height, 0);
    if (mask.empty()) return out;
    const auto in_mask = [&](int u, int v) { return mask.contains(u, v); };
    const Grid<double> geo = geodesic_distance(mask.width, mask.height, palm.px, in_mask);
    const double threshold = palm.radius_px + params.extreme_margin * scale.length_px;

    for (int attempt = 0; attempt < params.max_candidates && out.fingers.size() < 5; ++attempt) {
        Pixel tip{-1, -1};
        double far = -1.0;
        for (const Pixel& p : mask.pixels) {
            const double g = geo(p.u, p.v);
            if (!out.claimed(p.u, p.v) && std::isfinite(g) && g > far) {
                far = g;
                tip = p;
            }
        }
        if (tip.u < 0 || far < threshold) break;

        const auto free_px = [&](int u, int v) { return mask.contains(u, v) && !out.claimed(u, v); };
        const Grid<double> from_tip = geodesic_distance(mask.width, mask.height, tip, free_px, scale.length_px);
        std::vector<Pixel> region;
        for (const Pixel& p : mask.pixels)
            if (std::isfinite(from_tip(p.u, p.v))) region.push_back(p);

        // A candidate starting right next to an earlier region is that region's leftover.
        bool touches_claimed = false;
        for (int dv = -2; dv <= 2 && !touches_claimed; ++dv)
            for (int du = -2; du <= 2; ++du)
                if (out.claimed.in_bounds(tip.u + du, tip.v + dv) && out.claimed(tip.u + du, tip.v + dv)) {
                    touches_claimed = true;
                    break;
                }
        const double expected = scale.length_px * scale.width_px;
        const double area = static_cast<double>(region.size());
        const bool accept = !touches_claimed && area >= params.planar_area_lo * expected &&
                            area <= params.planar_area_hi * expected;
        for (const Pixel& p : region) out.claimed(p.u, p.v) = accept ? 1 : 2;
        if (!accept) continue;

        // Tip estimate: centroid of the pixels within half a finger width of the extreme point.
        double su = 0, sv = 0;
        int cnt = 0;
        for (const Pixel& p : region)
            if (from_tip(p.u, p.v) <= 0.5 * scale.width_px) {
                su += p.u;
                sv += p.v;
                ++cnt;
            }
        DetectedFinger f;
        f.kind = FingerKind::Planar;
        f.tip_px = {static_cast<int>(std::lround(su / cnt)), static_cast<int>(std::lround(sv / cnt))};
        if (!mask.contains(f.tip_px.u, f.tip_px.v)) f.tip_px = tip;
        f.tip = detail::back_project_near(frame, f.tip_px, k);
        // Axis from the shaft only: the rounded cap and the palm edge both bias the depth slope.
        std::vector<Pixel> shaft;
        for (const Pixel& p : region) {
            const double g = from_tip(p.u, p.v);
            if (g >= 0.5 * scale.width_px && g <= 0.6 * scale.length_px) shaft.push_back(p);
        }
        const Vec3 full = detail::principal_axis(region, frame, k, f.tip);
        f.direction = full;
        if (shaft.size() >= 8) {
            // image-plane heading from the whole region, depth slope from the shaft
            const Vec3 a = detail::principal_axis(shaft, frame, k, f.tip);
            const double flat = std::hypot(full.x(), full.y()), flat_a = std::hypot(a.x(), a.y());
            if (flat > 1e-9) f.direction = Vec3(full.x() / flat * flat_a, full.y() / flat * flat_a, a.z()).normalized();
        }
        f.junction = f.tip - scale.length_mm * f.direction;
        f.region = std::move(region);
        out.fingers.push_back(std::move(f));
    }
    return out;
}

inline void detect_orthogonal_fingers(const HandMask& mask, const DepthFrame& frame, const CameraIntrinsics& k,
                                      const PalmCenter& palm, const FingerScale& scale, DetectionResult& det,
                                      const ReinitParams& params = {}) {
    if (mask.empty()) return;
    if (det.claimed.values.empty()) det.claimed = Grid<std::uint8_t>(mask.width, mask.height, 0);
    const double palm_depth = palm.point.z();
    const int half = std::max(1, static_cast<int>(std::lround(0.5 * params.ortho_window * scale.width_px)));
    const double disk = std::numbers::pi * 0.25 * scale.width_px * scale.width_px;
    // Planar rejects stay eligible: a finger aimed at the camera fails the planar test.
    Grid<std::uint8_t> tried(mask.width, mask.height, 0);

    for (int attempt = 0; attempt < params.max_candidates && det.fingers.size() < 5; ++attempt) {
        Pixel tip{-1, -1};
        int closest = std::numeric_limits<int>::max();
        for (const Pixel& p : mask.pixels) {
            const int d = frame.at(p.u, p.v);
            if (det.claimed(p.u, p.v) != 1 && !tried(p.u, p.v) && d > 0 && d < closest) {
                closest = d;
                tip = p;
            }
        }
        if (tip.u < 0 || palm_depth - closest < params.ortho_protrusion_mm) break;

        // Depth-continuous component around the tip, confined to the window.
        std::vector<Pixel> region{tip};
        Grid<std::uint8_t> seen(mask.width, mask.height, 0);
        seen(tip.u, tip.v) = 1;
        for (std::size_t i = 0; i < region.size(); ++i) {
            const Pixel c = region[i];
            constexpr int du[4] = {1, -1, 0, 0};
            constexpr int dv[4] = {0, 0, 1, -1};
            for (int n = 0; n < 4; ++n) {
                const int u = c.u + du[n], v = c.v + dv[n];
                if (std::abs(u - tip.u) > half || std::abs(v - tip.v) > half) continue;
                if (!mask.contains(u, v) || seen(u, v) || det.claimed(u, v) == 1 || tried(u, v)) continue;
                if (frame.at(u, v) - closest > scale.width_mm) continue;
                seen(u, v) = 1;
                region.push_back({u, v});
            }
        }
        const double area = static_cast<double>(region.size());
        const bool accept = area >= params.ortho_area_lo * disk && area <= params.ortho_area_hi * disk;
        for (const Pixel& p : region) {
            tried(p.u, p.v) = 1;
            det.claimed(p.u, p.v) = accept ? 1 : 2;
        }
        if (!accept) continue;

        DetectedFinger f;
        f.kind = FingerKind::Orthogonal;
        f.tip_px = tip;
        f.tip = pixel_to_camera(tip.u, tip.v, closest, k);
        f.direction = Vec3{0.0, 0.0, -1.0};
        f.junction = f.tip - scale.length_mm * f.direction;
        f.region = std::move(region);
        det.fingers.push_back(std::move(f));
    }
}

// In-plane orientation (0 = image up) of the palm segment's principal axis: the mask minus
// accepted finger regions. Signed toward the detected fingertips, else toward image up.
inline double measure_palm_orientation(const HandMask& mask, const DetectionResult& det, const PalmCenter& palm) {
    double mu = 0, mv = 0;
    int n = 0;
    for (const Pixel& p : mask.pixels)
        if (det.claimed.values.empty() || det.claimed(p.u, p.v) != 1) {
            mu += p.u;
            mv += p.v;
            ++n;
        }
    if (n < 3) return 0.0;
    mu /= n;
    mv /= n;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const Pixel& p : mask.pixels)
        if (det.claimed.values.empty() || det.claimed(p.u, p.v) != 1) {
            const Vec2 d{p.u - mu, p.v - mv};
            cov += d * d.transpose();
        }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    Vec2 axis = eig.eigenvectors().col(1);
    Vec2 toward{0.0, -1.0};
    if (!det.fingers.empty()) {
        Vec2 tips = Vec2::Zero();
        for (const auto& f : det.fingers) tips += Vec2{static_cast<double>(f.tip_px.u), static_cast<double>(f.tip_px.v)};
        tips /= static_cast<double>(det.fingers.size());
        toward = tips - Vec2{static_cast<double>(palm.px.u), static_cast<double>(palm.px.v)};
    }
    if (axis.dot(toward) < 0) axis = -axis;
    return std::atan2(axis.x(), -axis.y());
}

// Weighted blend of the prior (theta_o + c) and the measurement: the prior is weighted by
// e_m and the measurement by e_o, each normalised by e_m + e_o.
inline double blend_palm_orientation(double prior, double measured, double e_m, double e_o) {
    if (e_m + e_o <= 0.0) return wrap_angle(measured);
    if (e_m == 0.0) return wrap_angle(measured);
    if (e_o == 0.0) return wrap_angle(prior);
    return wrap_angle(prior + e_o / (e_m + e_o) * wrap_angle(measured - prior));
}

inline PalmState predict_palm_orientation(PalmState state, double theta_m, const ReinitParams& params = {}) {
    state.theta_m = wrap_angle(theta_m);
    if (state.history == 0) {
        state.theta_p = state.theta_m;
        return state;
    }
    state.e_m = std::abs(wrap_angle(state.theta_o - state.prev_theta_m)) + params.a1 * state.e_m;
    state.e_o = std::abs(wrap_angle(state.theta_o - state.prior_prev)) + params.a2 * state.e_o;
    state.theta_p = blend_palm_orientation(state.theta_o + state.c, state.theta_m, state.e_m, state.e_o);
    return state;
}

// Records the optimiser's orientation for the frame just finished.
inline PalmState commit_optimized_orientation(PalmState state, double theta_o) {
    theta_o = wrap_angle(theta_o);
    if (state.history == 0) {
        state.prior_prev = theta_o;
        state.c = 0.0;
    } else {
        state.prior_prev = wrap_angle(state.theta_o + state.c);
        state.c = wrap_angle(theta_o - state.theta_o);
    }
    state.theta_o = theta_o;
    state.prev_theta_m = state.theta_m;
    ++state.history;
    return state;
}

// Model junctions (finger bases) with the previous pose turned to `theta_p` and its palm
// centre moved onto the measured palm centre.
inline std::array<Vec3, kNumFingers> model_junctions(const HandTemplate& tmpl, const HandSize& size, const HandPose& pose,
                                                     double theta_p, const Vec3& palm_surface) {
    HandPose q = with_in_plane_angle(pose, theta_p);
    const SphereModel m0 = pose_spheres(tmpl, size, q);
    const Vec3 target = palm_surface + Vec3{0.0, 0.0, size.palm() * tmpl.palm_radius};
    q.set_translation(q.translation() + (target - m0.palm_center));
    return pose_spheres(tmpl, size, q).junctions;
}

inline Classification classify_fingers(const std::vector<Vec3>& detected, const std::array<Vec3, kNumFingers>& model) {
    Classification out;
    const int n = static_cast<int>(detected.size());
    if (n > kNumFingers) fail(ErrorKind::InvalidInput, "classify_fingers: more than five detections");
    std::array<std::array<double, kNumFingers>, kNumFingers> dist{};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < kNumFingers; ++j)
            dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = (detected[static_cast<std::size_t>(i)] - model[static_cast<std::size_t>(j)]).norm();
    for (int i = 0; i < n; ++i) {
        const auto& row = dist[static_cast<std::size_t>(i)];
        out.initial.push_back(static_cast<int>(std::min_element(row.begin(), row.end()) - row.begin()));
    }
    std::array<bool, kNumFingers> used{};
    bool injective = true;
    for (int c : out.initial) {
        if (used[static_cast<std::size_t>(c)]) injective = false;
        used[static_cast<std::size_t>(c)] = true;
    }
    if (injective) {
        out.assignment = out.initial;
        return out;
    }

    // Depth-first search over injective assignments, keyed by (sum |v_i|^2, sum of distances),
    // pruning on the change cost.
    std::vector<int> current(static_cast<std::size_t>(n), -1), best;
    int best_change = std::numeric_limits<int>::max();
    double best_dist = std::numeric_limits<double>::infinity();
    used.fill(false);
    auto dfs = [&](auto&& self, int i, int change, double total) -> void {
        if (change > best_change) return;
        if (i == n) {
            if (change < best_change || total < best_dist) {
                best_change = change;
                best_dist = total;
                best = current;
            }
            return;
        }
        for (int c = 0; c < kNumFingers; ++c) {
            if (used[static_cast<std::size_t>(c)]) continue;
            const int v = c - out.initial[static_cast<std::size_t>(i)];
            used[static_cast<std::size_t>(c)] = true;
            current[static_cast<std::size_t>(i)] = c;
            self(self, i + 1, change + v * v, total + dist[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]);
            used[static_cast<std::size_t>(c)] = false;
        }
    };
    dfs(dfs, 0, 0, 0.0);
    out.assignment = best;
    return out;
}

// Joint rotations reproducing a finger direction given in camera space, for a hand with
// global rotation `R`.
inline FingerHint finger_hint_from_direction(const HandTemplate& tmpl, int finger, const Eigen::Matrix3d& R,
                                             const Vec3& direction, const Vec3& tip) {
    const auto& ft = tmpl.fingers[static_cast<std::size_t>(finger)];
    const Vec3 d = R.transpose() * direction.normalized();
    const Vec3 n = Vec3::UnitZ();
    const Vec3 u0{std::sin(ft.rest_angle), -std::cos(ft.rest_angle), 0.0};
    const Vec3 s0 = n.cross(u0);
    const double along = d.dot(u0), side = d.dot(s0);
    FingerHint h;
    h.tip = tip;
    h.mcp_abduct = std::hypot(along, side) < 1e-9 ? 0.0 : std::atan2(side, along);
    h.mcp_flex = std::atan2(-d.dot(n), std::hypot(along, side));
    if (std::abs(h.mcp_abduct) > std::numbers::pi / 2) {
        // Pointing backwards in the palm plane is reached by over-extension, not abduction.
        h.mcp_abduct = 0.0;
    }
    const auto& lim = tmpl.pose_limits;
    h.mcp_flex = lim[static_cast<std::size_t>(dof::mcp_flex(finger))].clamp(h.mcp_flex);
    h.mcp_abduct = lim[static_cast<std::size_t>(dof::mcp_abduct(finger))].clamp(h.mcp_abduct);
    return h;
}

inline ReinitHints build_hints(const HandTemplate& tmpl, const Classification& cls, const std::vector<DetectedFinger>& found,
                               const HandPose& prev_pose, double theta_p) {
    ReinitHints hints;
    hints.palm_orientation = theta_p;
    const Eigen::Matrix3d R = global_rotation(with_in_plane_angle(prev_pose, theta_p));
    for (std::size_t i = 0; i < cls.assignment.size() && i < found.size(); ++i) {
        const int f = cls.assignment[i];
        hints.fingers[static_cast<std::size_t>(f)] = finger_hint_from_direction(tmpl, f, R, found[i].direction, found[i].tip);
    }
    return hints;
}

struct ReinitResult {
    PalmCenter palm;
    DetectionResult detection;
    Classification classification;
    PalmState palm_state;  // with theta_m / theta_p of this frame
    ReinitHints hints;
};

inline ReinitResult reinitialize(const HandTemplate& tmpl, const HandMask& mask, const DepthFrame& frame,
                                 const CameraIntrinsics& k, const TrackState& prev, const PalmState& palm_state,
                                 const ReinitParams& params = {}) {
    ReinitResult r;
    r.palm = palm_center(mask, frame, k);
    const FingerScale scale = finger_scale(tmpl, prev.size, r.palm.point.z(), k);
    r.detection = detect_planar_fingers(mask, frame, k, r.palm, scale, params);
    detect_orthogonal_fingers(mask, frame, k, r.palm, scale, r.detection, params);
    const double theta_m = measure_palm_orientation(mask, r.detection, r.palm);
    r.palm_state = predict_palm_orientation(palm_state, theta_m, params);
    if (!params.use_prediction) r.palm_state.theta_p = r.palm_state.theta_m;
    r.palm_state.center = r.palm;
    const auto model = model_junctions(tmpl, prev.size, prev.pose, r.palm_state.theta_p, r.palm.point);
    std::vector<Vec3> junctions;
    for (const auto& f : r.detection.fingers) junctions.push_back(f.junction);
    r.classification = classify_fingers(junctions, model);
    r.hints = build_hints(tmpl, r.classification, r.detection.fingers, prev.pose, r.palm_state.theta_p);
    return r;
}

}  // namespace handtrack
