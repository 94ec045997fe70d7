#pragma once

// Analytic depth renderer for the sphere hand model, plus synthetic sequence generation.
//
// Depth is the camera-space z of the nearest ray/sphere hit. Each sphere is rasterised
// over the bounding box of its silhouette and resolved with a z-buffer, which is
// equivalent to testing every pixel against every sphere.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "handtrack/depth_io.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/image_ops.hpp"

namespace handtrack {

enum class PixelLabel : std::uint8_t { None = 0, Palm, ThumbBase, Thumb, Index, Middle, Ring, Pinky, Arm, Backdrop };

inline constexpr PixelLabel label_of(Part p) { return static_cast<PixelLabel>(static_cast<int>(p) + 1); }
inline constexpr bool is_hand_label(PixelLabel l) { return l >= PixelLabel::Palm && l <= PixelLabel::Pinky; }
// Finger index 0..4 for thumb..pinky labels, -1 otherwise.
inline constexpr int label_finger(PixelLabel l) {
    return l >= PixelLabel::Thumb && l <= PixelLabel::Pinky ? static_cast<int>(l) - static_cast<int>(PixelLabel::Thumb) : -1;
}

struct SceneSpec {
    bool arm = false;            // forearm spheres attached below the wrist
    double backdrop_z = 0.0;     // fronto-parallel wall at this depth (mm); 0 = none
};

struct NoiseSpec {
    double sigma = 0.0;              // gaussian depth noise, mm
    double void_probability = 0.0;   // per valid pixel
    bool wrist_band = false;         // void the slab around the wrist (hand-local y in [band_lo, band_hi])
    double band_lo = -4.0;
    double band_hi = 12.0;
    double band_half_width = 60.0;   // |x_local| limit of the band

    void validate() const {
        if (!(sigma >= 0)) fail(ErrorKind::Config, "noise sigma must be >= 0");
        if (!(void_probability >= 0 && void_probability <= 1)) fail(ErrorKind::Config, "void probability must be in [0,1]");
    }
};

struct GroundTruth {
    HandSize size;
    HandPose pose;
    Vec3 wrist = Vec3::Zero();
    std::array<Vec3, kNumFingers> fingertips{};
};

struct RenderOutput {
    DepthFrame frame;
    Grid<double> exact_depth;             // unquantised z, 0 where nothing was hit
    Grid<PixelLabel> labels;
    GroundTruth ground_truth;
};

// Forearm proxy in hand-local coordinates; not part of the tracked model.
inline std::vector<Sphere> arm_spheres(const HandSize& size, const HandPose& pose) {
    std::vector<Sphere> out;
    const Eigen::Matrix3d R = global_rotation(pose);
    const Vec3 t = pose.translation();
    for (int i = 0; i < 7; ++i)
        for (double x : {-13.0, 13.0}) {
            const Vec3 local = size.palm() * Vec3{x, 22.0 + 22.0 * i, 8.0};
            out.push_back({R * local + t, 17.0 * size.palm(), Part::Palm});
        }
    return out;
}

// Nearest positive z of the ray through pixel (u, v) hitting the sphere; negative if missed.
inline double ray_sphere_depth(double u, double v, const Vec3& center, double radius, const CameraIntrinsics& k) {
    const Vec3 d{(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
    const double a = d.squaredNorm();
    const double b = d.dot(center);
    const double c = center.squaredNorm() - radius * radius;
    const double disc = b * b - a * c;
    if (disc < 0.0) return -1.0;
    return (b - std::sqrt(disc)) / a;
}

namespace detail {

inline void raster_sphere(const Vec3& center, double radius, PixelLabel label, const CameraIntrinsics& k,
                          Grid<double>& depth, Grid<PixelLabel>& labels) {
    if (!(center.z() > radius)) fail(ErrorKind::InvalidInput, "render: sphere not in front of the camera");
    // The silhouette lies inside the projection of the sphere's bounding cube (all corners have z > 0).
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (int corner = 0; corner < 8; ++corner) {
        const Vec3 p = center + radius * Vec3{corner & 1 ? 1.0 : -1.0, corner & 2 ? 1.0 : -1.0, corner & 4 ? 1.0 : -1.0};
        const double u = k.fx * p.x() / p.z() + k.cx, v = k.fy * p.y() / p.z() + k.cy;
        umin = std::min(umin, u); umax = std::max(umax, u);
        vmin = std::min(vmin, v); vmax = std::max(vmax, v);
    }
    if (umax < 0 || vmax < 0 || umin > depth.width - 1 || vmin > depth.height - 1) return;
    const int ua = std::max(0, static_cast<int>(std::floor(umin)));
    const int ub = std::min(depth.width - 1, static_cast<int>(std::ceil(umax)));
    const int va = std::max(0, static_cast<int>(std::floor(vmin)));
    const int vb = std::min(depth.height - 1, static_cast<int>(std::ceil(vmax)));
    for (int v = va; v <= vb; ++v)
        for (int u = ua; u <= ub; ++u) {
            const double z = ray_sphere_depth(u, v, center, radius, k);
            if (z <= 0.0) continue;
            double& cur = depth(u, v);
            if (cur == 0.0 || z < cur) {
                cur = z;
                labels(u, v) = label;
            }
        }
}

}  // namespace detail

inline RenderOutput render(const SphereModel& m, const CameraIntrinsics& k, int width, int height,
                           const SceneSpec& scene = {}, const std::vector<Sphere>& extra = {}) {
    RenderOutput out;
    out.exact_depth = Grid<double>(width, height, 0.0);
    out.labels = Grid<PixelLabel>(width, height, PixelLabel::None);
    for (const Sphere& s : m.spheres) detail::raster_sphere(s.center, s.radius, label_of(s.part), k, out.exact_depth, out.labels);
    if (scene.arm)
        for (const Sphere& s : extra) detail::raster_sphere(s.center, s.radius, PixelLabel::Arm, k, out.exact_depth, out.labels);
    if (scene.backdrop_z > 0.0)
        for (int v = 0; v < height; ++v)
            for (int u = 0; u < width; ++u)
                if (out.exact_depth(u, v) == 0.0 || out.exact_depth(u, v) > scene.backdrop_z) {
                    out.exact_depth(u, v) = scene.backdrop_z;
                    out.labels(u, v) = PixelLabel::Backdrop;
                }
    out.frame = DepthFrame(width, height);
    for (int v = 0; v < height; ++v)
        for (int u = 0; u < width; ++u) {
            const double z = out.exact_depth(u, v);
            out.frame.at(u, v) = z > 0.0 ? static_cast<std::uint16_t>(std::clamp(std::lround(z), 1L, 65535L)) : 0;
        }
    out.ground_truth.wrist = m.wrist;
    out.ground_truth.fingertips = m.tips;
    return out;
}

inline RenderOutput render_hand(const HandTemplate& tmpl, const HandSize& size, const HandPose& pose,
                                const CameraIntrinsics& k, int width, int height, const SceneSpec& scene = {}) {
    const SphereModel m = pose_spheres(tmpl, size, pose);
    RenderOutput out = render(m, k, width, height, scene, scene.arm ? arm_spheres(size, pose) : std::vector<Sphere>{});
    out.ground_truth.size = size;
    out.ground_truth.pose = pose;
    return out;
}

// Applies gaussian noise, then random voids, then the wrist void band, to out.frame.
inline void apply_noise(RenderOutput& out, const NoiseSpec& noise, const CameraIntrinsics& k, Rng& rng) {
    noise.validate();
    DepthFrame& f = out.frame;
    std::normal_distribution<double> gauss(0.0, noise.sigma > 0 ? noise.sigma : 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int v = 0; v < f.height(); ++v)
        for (int u = 0; u < f.width(); ++u) {
            if (f.at(u, v) == 0) continue;
            if (noise.sigma > 0) {
                const double z = out.exact_depth(u, v) + gauss(rng);
                f.at(u, v) = static_cast<std::uint16_t>(std::clamp(std::lround(z), 1L, 65535L));
            }
            if (noise.void_probability > 0 && unit(rng) < noise.void_probability) f.at(u, v) = 0;
        }
    if (noise.wrist_band) {
        const Eigen::Matrix3d Rt = global_rotation(out.ground_truth.pose).transpose();
        const Vec3 t = out.ground_truth.pose.translation();
        for (int v = 0; v < f.height(); ++v)
            for (int u = 0; u < f.width(); ++u) {
                const PixelLabel l = out.labels(u, v);
                if (!(is_hand_label(l) || l == PixelLabel::Arm)) continue;
                const Vec3 local = Rt * (pixel_to_camera(u, v, out.exact_depth(u, v), k) - t);
                if (local.y() >= noise.band_lo && local.y() <= noise.band_hi && std::abs(local.x()) <= noise.band_half_width)
                    f.at(u, v) = 0;
            }
    }
}

// ---------------------------------------------------------------------------
// Trajectory scripts
//
//   # comment
//   size l0 l1 l2 l3 l4 l5                      size used by the following keys
//   key N tx ty tz rx ry rz  (f flex abd pip dip) x 5     angles in degrees
//
// The first key is held for N frames; each later key is reached after N frames of
// linear interpolation from the previous key (the key frame itself included).

struct Keyframe {
    int frames = 1;
    HandSize size;
    HandPose pose;
};

struct TrajectoryScript {
    std::vector<Keyframe> keys;
};

inline TrajectoryScript parse_trajectory(const std::string& text) {
    TrajectoryScript script;
    HandSize size;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        auto bad = [&](const std::string& why) {
            fail(ErrorKind::Format, "trajectory: line " + std::to_string(line_no) + ": " + why);
        };
        if (key == "size") {
            for (double& x : size.l)
                if (!(ls >> x)) bad("size needs 6 values");
        } else if (key == "key") {
            Keyframe kf;
            kf.size = size;
            if (!(ls >> kf.frames) || kf.frames < 1) bad("key needs a positive frame count");
            for (int i = 0; i < kPoseDofs; ++i) {
                double x = 0;
                if (!(ls >> x)) bad("key needs 26 pose values");
                kf.pose[i] = dof::is_translation(i) ? x : deg(x);
            }
            std::string extra;
            if (ls >> extra) bad("trailing field '" + extra + "'");
            script.keys.push_back(kf);
        } else {
            bad("unknown directive '" + key + "'");
        }
    }
    if (script.keys.empty()) fail(ErrorKind::Format, "trajectory: no keys");
    return script;
}

inline TrajectoryScript load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open trajectory " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_trajectory(ss.str());
}

inline std::vector<std::pair<HandSize, HandPose>> expand_trajectory(const TrajectoryScript& script) {
    std::vector<std::pair<HandSize, HandPose>> out;
    if (script.keys.empty()) return out;
    for (int i = 0; i < script.keys.front().frames; ++i) out.emplace_back(script.keys.front().size, script.keys.front().pose);
    for (std::size_t k = 1; k < script.keys.size(); ++k) {
        const Keyframe& a = script.keys[k - 1];
        const Keyframe& b = script.keys[k];
        for (int i = 1; i <= b.frames; ++i) {
            const double s = static_cast<double>(i) / b.frames;
            HandSize l;
            HandPose p;
            for (int j = 0; j < kSizeDofs; ++j) l.l[static_cast<std::size_t>(j)] = (1 - s) * a.size.l[static_cast<std::size_t>(j)] + s * b.size.l[static_cast<std::size_t>(j)];
            for (int j = 0; j < kPoseDofs; ++j) p[j] = (1 - s) * a.pose[j] + s * b.pose[j];
            out.emplace_back(l, p);
        }
    }
    return out;
}

struct SynthesisOptions {
    int width = 320;
    int height = 240;
    CameraIntrinsics intrinsics;
    SceneSpec scene{true, 900.0};
    NoiseSpec noise{2.0, 0.01, true};
};

struct SynthesizedSequence {
    Sequence sequence;
    std::vector<GroundTruth> truth;
    std::vector<Grid<PixelLabel>> labels;  // per-frame part labels (hand-finger identity oracle)
};

inline SynthesizedSequence synthesize_sequence(const HandTemplate& tmpl,
                                               const std::vector<std::pair<HandSize, HandPose>>& trajectory,
                                               const SynthesisOptions& opt, Rng& rng, bool keep_labels = true) {
    opt.intrinsics.validate(opt.width, opt.height);
    SynthesizedSequence out;
    out.sequence.intrinsics = opt.intrinsics;
    int index = 0;
    for (const auto& [size, pose] : trajectory) {
        RenderOutput r = render_hand(tmpl, size, pose, opt.intrinsics, opt.width, opt.height, opt.scene);
        apply_noise(r, opt.noise, opt.intrinsics, rng);
        r.frame.set_frame_index(index);
        GroundTruthLabel label;
        label.frame_index = index;
        label.wrist = r.ground_truth.wrist;
        label.fingertips = r.ground_truth.fingertips;
        out.sequence.frames.push_back(std::move(r.frame));
        out.sequence.labels.push_back(label);
        out.truth.push_back(r.ground_truth);
        if (keep_labels) out.labels.push_back(std::move(r.labels));
        ++index;
    }
    return out;
}

}  // namespace handtrack
