#pragma once

// Adaptive sphere hand model.
//
// Size vector l (6): palm scale, then finger-length scales thumb -> pinky.
// Pose vector p (26): translation (mm), intrinsic XYZ Euler rotation (rad),
// then per finger thumb -> pinky: MCP flex, MCP abduction, PIP flex, DIP flex (rad).
//
// Hand-local frame at the neutral pose coincides with the camera frame: the wrist
// is the origin, fingers point along -y (image up), the palm faces the camera
// (-z) and positive flexion curls fingers toward the camera.
//
// Sphere layout (48): 16 palm spheres on a 4x4 plate, 2 thumb-base connectors,
// 6 spheres per finger. Finger spheres sit at fixed arc lengths along the finger
// chain so that every center lies on its phalanx segment.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Geometry>

#include "handtrack/depth_io.hpp"
#include "handtrack/error.hpp"

namespace handtrack {

enum class Part : std::uint8_t { Palm, ThumbBase, Thumb, Index, Middle, Ring, Pinky };

constexpr int kNumFingers = 5;
constexpr int kNumSpheres = 48;
constexpr int kPalmSpheres = 16;
constexpr int kThumbBaseSpheres = 2;
constexpr int kSpheresPerFinger = 6;
constexpr int kFirstFingerSphere = kPalmSpheres + kThumbBaseSpheres;
constexpr int kPoseDofs = 26;
constexpr int kSizeDofs = 6;

constexpr std::array<std::string_view, kNumFingers> kFingerNames = {"thumb", "index", "middle", "ring", "pinky"};

inline constexpr Part finger_part(int finger) { return static_cast<Part>(static_cast<int>(Part::Thumb) + finger); }
inline constexpr int part_finger(Part p) {
    return p >= Part::Thumb ? static_cast<int>(p) - static_cast<int>(Part::Thumb) : -1;
}
inline constexpr int finger_sphere(int finger, int k) { return kFirstFingerSphere + kSpheresPerFinger * finger + k; }

// Pose vector layout.
namespace dof {
constexpr int kTx = 0, kTy = 1, kTz = 2, kRx = 3, kRy = 4, kRz = 5;
constexpr int finger(int f) { return 6 + 4 * f; }
constexpr int mcp_flex(int f) { return finger(f) + 0; }
constexpr int mcp_abduct(int f) { return finger(f) + 1; }
constexpr int pip(int f) { return finger(f) + 2; }
constexpr int dip(int f) { return finger(f) + 3; }
constexpr bool is_translation(int i) { return i < 3; }
}  // namespace dof

struct HandSize {
    std::array<double, kSizeDofs> l{1, 1, 1, 1, 1, 1};

    double palm() const { return l[0]; }
    double finger(int f) const { return l[static_cast<std::size_t>(1 + f)]; }
    static HandSize uniform(double s) { return {{s, s, s, s, s, s}}; }
    friend bool operator==(const HandSize&, const HandSize&) = default;
};

struct HandPose {
    std::array<double, kPoseDofs> p{};

    Vec3 translation() const { return {p[0], p[1], p[2]}; }
    void set_translation(const Vec3& t) { p[0] = t.x(); p[1] = t.y(); p[2] = t.z(); }
    double& operator[](int i) { return p[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return p[static_cast<std::size_t>(i)]; }
    friend bool operator==(const HandPose&, const HandPose&) = default;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double clamp(double x) const { return std::clamp(x, lo, hi); }
};

struct FingerTemplate {
    Vec3 base = Vec3::Zero();                       // MCP (thumb: root) in palm-local mm at l0 = 1
    double rest_angle = 0.0;                        // in-plane fan angle from "up" toward +x, rad
    std::array<double, 3> lengths{};                // proximal, middle, distal phalanx, mm
    std::array<double, kSpheresPerFinger> arcs{};   // sphere positions along the chain, mm
    std::array<double, kSpheresPerFinger> radii{};  // mm, not scaled by l
};

struct HandTemplate {
    std::array<Vec3, kPalmSpheres> palm_centers{};
    double palm_radius = 13.0;
    std::array<Vec3, kThumbBaseSpheres> thumb_base_centers{};
    std::array<double, kThumbBaseSpheres> thumb_base_radii{};
    std::array<FingerTemplate, kNumFingers> fingers{};
    std::array<Interval, kPoseDofs> pose_limits{};
    Interval size_limits{0.4, 1.6};

    double finger_length(int f) const {
        const auto& L = fingers[static_cast<std::size_t>(f)].lengths;
        return L[0] + L[1] + L[2];
    }
    Vec3 palm_center() const {
        Vec3 c = Vec3::Zero();
        for (const auto& p : palm_centers) c += p;
        return c / kPalmSpheres;
    }
};

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

inline std::array<Interval, kPoseDofs> default_pose_limits() {
    std::array<Interval, kPoseDofs> lim{};
    lim[dof::kTx] = {-600.0, 600.0};
    lim[dof::kTy] = {-600.0, 600.0};
    lim[dof::kTz] = {100.0, 2000.0};
    for (int i = dof::kRx; i <= dof::kRz; ++i) lim[static_cast<std::size_t>(i)] = {-std::numbers::pi, std::numbers::pi};
    for (int f = 0; f < kNumFingers; ++f) {
        lim[static_cast<std::size_t>(dof::mcp_flex(f))] = {deg(-30), deg(100)};
        lim[static_cast<std::size_t>(dof::mcp_abduct(f))] = {deg(-25), deg(25)};
        lim[static_cast<std::size_t>(dof::pip(f))] = {deg(0), deg(110)};
        lim[static_cast<std::size_t>(dof::dip(f))] = {deg(0), deg(90)};
    }
    return lim;
}

namespace detail {

inline FingerTemplate make_finger(Vec3 base, double rest_deg, std::array<double, 3> lengths,
                                  std::array<double, kSpheresPerFinger> radii, double first_arc) {
    FingerTemplate f;
    f.base = base;
    f.rest_angle = deg(rest_deg);
    f.lengths = lengths;
    f.radii = radii;
    const double last = lengths[0] + lengths[1] + lengths[2] - radii.back();
    for (int k = 0; k < kSpheresPerFinger; ++k)
        f.arcs[static_cast<std::size_t>(k)] = first_arc + (last - first_arc) * k / (kSpheresPerFinger - 1);
    return f;
}

}  // namespace detail

// Built-in template, identical to data/hand_template_v1.txt.
inline HandTemplate default_template() {
    HandTemplate t;
    t.palm_radius = 13.0;
    const double xs[4] = {-28.5, -9.5, 9.5, 28.5};
    const double ys[4] = {-14.0, -36.0, -58.0, -80.0};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) t.palm_centers[static_cast<std::size_t>(4 * r + c)] = {xs[c], ys[r], 0.0};
    t.thumb_base_centers = {Vec3{33.0, -17.0, 0.0}, Vec3{38.0, -27.0, 0.0}};
    t.thumb_base_radii = {11.0, 10.0};
    t.fingers[0] = detail::make_finger({41.0, -30.0, 0.0}, 50.0, {38.0, 30.0, 24.0}, {10, 10, 9.5, 9, 8.5, 8}, 8.0);
    t.fingers[1] = detail::make_finger({27.0, -93.0, 0.0}, 8.0, {40.0, 24.0, 19.0}, {9, 9, 8.5, 8.5, 8.5, 8}, 5.0);
    t.fingers[2] = detail::make_finger({8.5, -94.0, 0.0}, 0.0, {44.0, 26.0, 20.0}, {9, 9, 8.5, 8.5, 8.5, 8}, 5.0);
    t.fingers[3] = detail::make_finger({-10.0, -93.0, 0.0}, -6.0, {42.0, 26.0, 19.0}, {9, 9, 8.5, 8.5, 8.5, 8}, 5.0);
    t.fingers[4] = detail::make_finger({-27.5, -89.0, 0.0}, -14.0, {32.0, 19.0, 17.0}, {8, 8, 7.5, 7.5, 7.5, 7}, 5.0);
    t.pose_limits = default_pose_limits();
    return t;
}

struct Sphere {
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
    Part part = Part::Palm;
};

struct SphereModel {
    std::array<Sphere, kNumSpheres> spheres{};
    Vec3 wrist = Vec3::Zero();
    Vec3 palm_center = Vec3::Zero();
    std::array<Vec3, kNumFingers> junctions{};   // finger bases (MCP / thumb root)
    std::array<Vec3, kNumFingers> tips{};        // distal-most sphere centers
};

inline Eigen::Matrix3d rotation_xyz(double rx, double ry, double rz) {
    return (Eigen::AngleAxisd(rx, Vec3::UnitX()) * Eigen::AngleAxisd(ry, Vec3::UnitY()) *
            Eigen::AngleAxisd(rz, Vec3::UnitZ()))
        .toRotationMatrix();
}

inline Eigen::Matrix3d global_rotation(const HandPose& p) { return rotation_xyz(p[dof::kRx], p[dof::kRy], p[dof::kRz]); }

// Unit direction of each phalanx in hand-local coordinates.
inline std::array<Vec3, 3> phalanx_directions(const FingerTemplate& ft, double flex, double abduct, double pip,
                                              double dip) {
    const Vec3 n = Vec3::UnitZ();
    const Vec3 u0{std::sin(ft.rest_angle), -std::cos(ft.rest_angle), 0.0};
    const Vec3 s0 = n.cross(u0);
    const Vec3 u1 = std::cos(abduct) * u0 + std::sin(abduct) * s0;
    const double a1 = flex, a2 = flex + pip, a3 = flex + pip + dip;
    return {std::cos(a1) * u1 - std::sin(a1) * n, std::cos(a2) * u1 - std::sin(a2) * n,
            std::cos(a3) * u1 - std::sin(a3) * n};
}

inline SphereModel pose_spheres(const HandTemplate& tmpl, const HandSize& size, const HandPose& pose) {
    SphereModel m;
    const Eigen::Matrix3d R = global_rotation(pose);
    const Vec3 t = pose.translation();
    const double l0 = size.palm();
    auto world = [&](const Vec3& local) -> Vec3 { return R * local + t; };

    int idx = 0;
    for (const Vec3& c : tmpl.palm_centers) m.spheres[static_cast<std::size_t>(idx++)] = {world(l0 * c), l0 * tmpl.palm_radius, Part::Palm};
    for (int k = 0; k < kThumbBaseSpheres; ++k)
        m.spheres[static_cast<std::size_t>(idx++)] = {world(l0 * tmpl.thumb_base_centers[static_cast<std::size_t>(k)]),
                                                      l0 * tmpl.thumb_base_radii[static_cast<std::size_t>(k)], Part::ThumbBase};

    for (int f = 0; f < kNumFingers; ++f) {
        const FingerTemplate& ft = tmpl.fingers[static_cast<std::size_t>(f)];
        const double lf = size.finger(f);
        const auto dirs = phalanx_directions(ft, pose[dof::mcp_flex(f)], pose[dof::mcp_abduct(f)], pose[dof::pip(f)],
                                             pose[dof::dip(f)]);
        const Vec3 j0 = l0 * ft.base;
        const Vec3 j1 = j0 + lf * ft.lengths[0] * dirs[0];
        const Vec3 j2 = j1 + lf * ft.lengths[1] * dirs[1];
        const double b1 = lf * ft.lengths[0];
        const double b2 = b1 + lf * ft.lengths[1];
        for (int k = 0; k < kSpheresPerFinger; ++k) {
            const double a = lf * ft.arcs[static_cast<std::size_t>(k)];
            Vec3 local;
            if (a < b1) local = j0 + a * dirs[0];
            else if (a < b2) local = j1 + (a - b1) * dirs[1];
            else local = j2 + (a - b2) * dirs[2];
            m.spheres[static_cast<std::size_t>(idx++)] = {world(local), ft.radii[static_cast<std::size_t>(k)], finger_part(f)};
        }
        m.junctions[static_cast<std::size_t>(f)] = world(j0);
        m.tips[static_cast<std::size_t>(f)] = m.spheres[static_cast<std::size_t>(finger_sphere(f, kSpheresPerFinger - 1))].center;
    }
    m.wrist = t;
    m.palm_center = world(l0 * tmpl.palm_center());
    return m;
}

inline std::array<Vec3, kNumFingers> fingertip_positions(const SphereModel& m) { return m.tips; }

// In-plane (about the optical axis) orientation of the hand's "up" axis; 0 at the neutral pose.
inline double in_plane_angle(const HandPose& pose) {
    const Vec3 up = global_rotation(pose) * Vec3{0.0, -1.0, 0.0};
    return std::atan2(up.x(), -up.y());
}

inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

inline HandSize clamp_size(const HandTemplate& tmpl, HandSize l) {
    for (double& x : l.l) x = tmpl.size_limits.clamp(x);
    return l;
}

inline HandPose clamp_pose(const HandTemplate& tmpl, HandPose p) {
    for (int i = 0; i < kPoseDofs; ++i) p[i] = tmpl.pose_limits[static_cast<std::size_t>(i)].clamp(p[i]);
    return p;
}

inline std::pair<HandSize, HandPose> clamp_params(const HandTemplate& tmpl, const HandSize& l, const HandPose& p) {
    return {clamp_size(tmpl, l), clamp_pose(tmpl, p)};
}

// Pose with the neutral open hand whose palm-plate front surface centre lands on `palm_surface`.
inline HandPose neutral_pose_at(const HandTemplate& tmpl, const HandSize& size, const Vec3& palm_surface) {
    HandPose p;
    const Vec3 pc = size.palm() * tmpl.palm_center();
    p.set_translation(palm_surface - pc + Vec3{0.0, 0.0, size.palm() * tmpl.palm_radius});
    return clamp_pose(tmpl, p);
}

// ---------------------------------------------------------------------------
// Template fixture file

inline std::string serialize_template(const HandTemplate& t) {
    std::ostringstream out;
    out.precision(10);
    out << "handtrack-template 1\n";
    out << "# palm sphere centers (mm, hand-local), shared palm radius\n";
    out << "palm_radius " << t.palm_radius << '\n';
    for (const auto& c : t.palm_centers) out << "palm " << c.x() << ' ' << c.y() << ' ' << c.z() << '\n';
    for (int k = 0; k < kThumbBaseSpheres; ++k) {
        const auto& c = t.thumb_base_centers[static_cast<std::size_t>(k)];
        out << "thumb_base " << c.x() << ' ' << c.y() << ' ' << c.z() << ' ' << t.thumb_base_radii[static_cast<std::size_t>(k)] << '\n';
    }
    out << "# finger <name> base_x base_y base_z rest_deg len_proximal len_middle len_distal\n";
    for (int f = 0; f < kNumFingers; ++f) {
        const auto& ft = t.fingers[static_cast<std::size_t>(f)];
        out << "finger " << kFingerNames[static_cast<std::size_t>(f)] << ' ' << ft.base.x() << ' ' << ft.base.y() << ' '
            << ft.base.z() << ' ' << ft.rest_angle * 180.0 / std::numbers::pi << ' ' << ft.lengths[0] << ' '
            << ft.lengths[1] << ' ' << ft.lengths[2] << '\n';
        out << "arcs " << kFingerNames[static_cast<std::size_t>(f)];
        for (double a : ft.arcs) out << ' ' << a;
        out << "\nradii " << kFingerNames[static_cast<std::size_t>(f)];
        for (double r : ft.radii) out << ' ' << r;
        out << '\n';
    }
    out << "# limit <dof> lo hi   (translation mm, angles deg)\n";
    for (int i = 0; i < kPoseDofs; ++i) {
        const auto& lim = t.pose_limits[static_cast<std::size_t>(i)];
        const double s = dof::is_translation(i) ? 1.0 : 180.0 / std::numbers::pi;
        out << "limit " << i << ' ' << lim.lo * s << ' ' << lim.hi * s << '\n';
    }
    out << "size_limit " << t.size_limits.lo << ' ' << t.size_limits.hi << '\n';
    return out.str();
}

inline HandTemplate parse_template(const std::string& text) {
    HandTemplate t;
    t.pose_limits = default_pose_limits();
    std::istringstream in(text);
    std::string line;
    int palm = 0, thumb_base = 0, line_no = 0;
    bool header = false;
    auto finger_index = [&](const std::string& name) {
        for (int f = 0; f < kNumFingers; ++f)
            if (kFingerNames[static_cast<std::size_t>(f)] == name) return f;
        fail(ErrorKind::Format, "template: line " + std::to_string(line_no) + ": unknown finger '" + name + "'");
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        auto bad = [&] { fail(ErrorKind::Format, "template: line " + std::to_string(line_no) + ": malformed '" + key + "'"); };
        if (key == "handtrack-template") {
            int v = 0;
            if (!(ls >> v) || v != 1) bad();
            header = true;
        } else if (key == "palm_radius") {
            if (!(ls >> t.palm_radius)) bad();
        } else if (key == "palm") {
            if (palm >= kPalmSpheres) bad();
            Vec3& c = t.palm_centers[static_cast<std::size_t>(palm++)];
            if (!(ls >> c.x() >> c.y() >> c.z())) bad();
        } else if (key == "thumb_base") {
            if (thumb_base >= kThumbBaseSpheres) bad();
            Vec3& c = t.thumb_base_centers[static_cast<std::size_t>(thumb_base)];
            if (!(ls >> c.x() >> c.y() >> c.z() >> t.thumb_base_radii[static_cast<std::size_t>(thumb_base)])) bad();
            ++thumb_base;
        } else if (key == "finger") {
            std::string name;
            double rest = 0;
            ls >> name;
            auto& ft = t.fingers[static_cast<std::size_t>(finger_index(name))];
            if (!(ls >> ft.base.x() >> ft.base.y() >> ft.base.z() >> rest >> ft.lengths[0] >> ft.lengths[1] >> ft.lengths[2])) bad();
            ft.rest_angle = deg(rest);
        } else if (key == "arcs" || key == "radii") {
            std::string name;
            ls >> name;
            auto& ft = t.fingers[static_cast<std::size_t>(finger_index(name))];
            auto& arr = key == "arcs" ? ft.arcs : ft.radii;
            for (double& x : arr)
                if (!(ls >> x)) bad();
        } else if (key == "limit") {
            int i = -1;
            double lo = 0, hi = 0;
            if (!(ls >> i >> lo >> hi) || i < 0 || i >= kPoseDofs || lo > hi) bad();
            const double s = dof::is_translation(i) ? 1.0 : std::numbers::pi / 180.0;
            t.pose_limits[static_cast<std::size_t>(i)] = {lo * s, hi * s};
        } else if (key == "size_limit") {
            if (!(ls >> t.size_limits.lo >> t.size_limits.hi) || t.size_limits.lo > t.size_limits.hi) bad();
        } else {
            fail(ErrorKind::Format, "template: line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    if (!header) fail(ErrorKind::Format, "template: missing 'handtrack-template 1' header");
    if (palm != kPalmSpheres || thumb_base != kThumbBaseSpheres)
        fail(ErrorKind::Format, "template: expected 16 palm and 2 thumb_base spheres");
    if (!(t.palm_radius > 0)) fail(ErrorKind::Format, "template: palm radius must be positive");
    for (const auto& ft : t.fingers) {
        for (double x : ft.lengths)
            if (!(x > 0)) fail(ErrorKind::Format, "template: phalanx lengths must be positive");
        for (double r : ft.radii)
            if (!(r > 0)) fail(ErrorKind::Format, "template: radii must be positive");
    }
    return t;
}

inline HandTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open template " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_template(ss.str());
}

}  // namespace handtrack
