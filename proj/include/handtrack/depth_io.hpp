#pragma once

// Depth frames, pinhole projection and the on-disk sequence/label formats.
//
// Sequence file (little-endian):
//   "HTDS" u32 version=1 u32 width u32 height u32 frame_count f32 fx fy cx cy
//   then frame_count blobs of width*height u16 depths (mm), row-major.
// Label file: CSV with a header row, one row per labeled frame:
//   frame,wx,wy,wz,t0x,t0y,t0z,...,t4x,t4y,t4z   (mm, camera coordinates)

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "handtrack/error.hpp"

namespace handtrack {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Rng = std::mt19937_64;

struct Pixel {
    int u = 0;
    int v = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct CameraIntrinsics {
    double fx = 224.5;
    double fy = 224.5;
    double cx = 159.5;
    double cy = 119.5;

    void validate(int width, int height) const {
        if (!(fx > 0.0) || !(fy > 0.0))
            fail(ErrorKind::InvalidInput, "intrinsics: focal lengths must be positive");
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
            fail(ErrorKind::InvalidInput, "intrinsics: principal point outside the image");
    }
};

class DepthFrame {
public:
    DepthFrame() = default;
    DepthFrame(int width, int height, int frame_index = 0)
        : width_(width), height_(height), frame_index_(frame_index),
          depth_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0) {
        if (width <= 0 || height <= 0) fail(ErrorKind::InvalidInput, "depth frame: non-positive dimensions");
    }
    DepthFrame(int width, int height, std::vector<std::uint16_t> depth, int frame_index = 0)
        : width_(width), height_(height), frame_index_(frame_index), depth_(std::move(depth)) {
        if (width <= 0 || height <= 0) fail(ErrorKind::InvalidInput, "depth frame: non-positive dimensions");
        if (depth_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            fail(ErrorKind::InvalidInput, "depth frame: array length != width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int frame_index() const noexcept { return frame_index_; }
    void set_frame_index(int i) noexcept { frame_index_ = i; }
    std::size_t size() const noexcept { return depth_.size(); }

    bool in_bounds(int u, int v) const noexcept { return u >= 0 && v >= 0 && u < width_ && v < height_; }
    std::size_t index(int u, int v) const noexcept {
        return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(u);
    }
    std::uint16_t at(int u, int v) const noexcept { return depth_[index(u, v)]; }
    std::uint16_t& at(int u, int v) noexcept { return depth_[index(u, v)]; }
    // Zero outside the image, matching the void convention.
    std::uint16_t at_or_zero(int u, int v) const noexcept { return in_bounds(u, v) ? at(u, v) : 0; }

    const std::vector<std::uint16_t>& data() const noexcept { return depth_; }
    std::vector<std::uint16_t>& data() noexcept { return depth_; }

    friend bool operator==(const DepthFrame& a, const DepthFrame& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.depth_ == b.depth_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int frame_index_ = 0;
    std::vector<std::uint16_t> depth_;
};

struct GroundTruthLabel {
    int frame_index = 0;
    Vec3 wrist = Vec3::Zero();
    std::array<Vec3, 5> fingertips{};  // thumb -> pinky

    std::array<Vec3, 6> joints() const {
        return {wrist, fingertips[0], fingertips[1], fingertips[2], fingertips[3], fingertips[4]};
    }
};

struct Sequence {
    CameraIntrinsics intrinsics;
    std::vector<DepthFrame> frames;
    std::vector<GroundTruthLabel> labels;  // ascending frame_index, may be empty

    const GroundTruthLabel* label_for(int frame_index) const {
        for (const auto& l : labels)
            if (l.frame_index == frame_index) return &l;
        return nullptr;
    }
};

inline Vec3 pixel_to_camera(double u, double v, double depth_mm, const CameraIntrinsics& k) {
    if (!(depth_mm > 0.0)) fail(ErrorKind::InvalidInput, "pixel_to_camera: void depth");
    return {(u - k.cx) * depth_mm / k.fx, (v - k.cy) * depth_mm / k.fy, depth_mm};
}

inline Vec3 camera_to_pixel(const Vec3& x, const CameraIntrinsics& k) {
    if (!(x.z() > 0.0)) fail(ErrorKind::InvalidInput, "camera_to_pixel: point behind camera");
    return {k.fx * x.x() / x.z() + k.cx, k.fy * x.y() / x.z() + k.cy, x.z()};
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace detail

constexpr std::uint32_t kSequenceVersion = 1;
constexpr std::size_t kSequenceHeaderBytes = 4 + 4 * 4 + 4 * 4;

inline std::string encode_sequence(const std::vector<DepthFrame>& frames, const CameraIntrinsics& k) {
    const int w = frames.empty() ? 0 : frames.front().width();
    const int h = frames.empty() ? 0 : frames.front().height();
    std::string out;
    out.reserve(kSequenceHeaderBytes + frames.size() * static_cast<std::size_t>(w) * h * 2);
    out.append("HTDS");
    detail::put_u32(out, kSequenceVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(w));
    detail::put_u32(out, static_cast<std::uint32_t>(h));
    detail::put_u32(out, static_cast<std::uint32_t>(frames.size()));
    detail::put_f32(out, static_cast<float>(k.fx));
    detail::put_f32(out, static_cast<float>(k.fy));
    detail::put_f32(out, static_cast<float>(k.cx));
    detail::put_f32(out, static_cast<float>(k.cy));
    for (const auto& f : frames) {
        if (f.width() != w || f.height() != h)
            fail(ErrorKind::InvalidInput, "encode_sequence: frames differ in dimensions");
        for (std::uint16_t d : f.data()) {
            out.push_back(static_cast<char>(d & 0xffu));
            out.push_back(static_cast<char>(d >> 8));
        }
    }
    return out;
}

inline Sequence decode_sequence(const std::string& bytes) {
    if (bytes.size() < kSequenceHeaderBytes)
        fail(ErrorKind::Format, "sequence: malformed header (file shorter than header)");
    if (bytes.compare(0, 4, "HTDS") != 0) fail(ErrorKind::Format, "sequence: malformed header (bad magic)");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = detail::get_u32(p + 4);
    if (version != kSequenceVersion)
        fail(ErrorKind::Format, "sequence: malformed header (unsupported version " + std::to_string(version) + ")");
    const std::uint32_t w = detail::get_u32(p + 8);
    const std::uint32_t h = detail::get_u32(p + 12);
    const std::uint32_t n = detail::get_u32(p + 16);
    Sequence seq;
    seq.intrinsics.fx = std::bit_cast<float>(detail::get_u32(p + 20));
    seq.intrinsics.fy = std::bit_cast<float>(detail::get_u32(p + 24));
    seq.intrinsics.cx = std::bit_cast<float>(detail::get_u32(p + 28));
    seq.intrinsics.cy = std::bit_cast<float>(detail::get_u32(p + 32));
    if (n > 0 && (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15))
        fail(ErrorKind::Format, "sequence: dimension mismatch (width/height out of range)");
    const std::size_t frame_bytes = static_cast<std::size_t>(w) * h * 2;
    const std::size_t expected = kSequenceHeaderBytes + frame_bytes * n;
    if (bytes.size() < expected)
        fail(ErrorKind::Format, "sequence: truncated payload (" + std::to_string(bytes.size()) + " of " +
                                    std::to_string(expected) + " bytes)");
    if (bytes.size() > expected)
        fail(ErrorKind::Format, "sequence: dimension mismatch (" + std::to_string(bytes.size() - expected) +
                                    " trailing bytes for declared " + std::to_string(w) + "x" +
                                    std::to_string(h) + "x" + std::to_string(n) + ")");
    seq.frames.reserve(n);
    const unsigned char* q = p + kSequenceHeaderBytes;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::vector<std::uint16_t> depth(static_cast<std::size_t>(w) * h);
        for (auto& d : depth) {
            d = static_cast<std::uint16_t>(q[0] | (q[1] << 8));
            q += 2;
        }
        seq.frames.emplace_back(static_cast<int>(w), static_cast<int>(h), std::move(depth), static_cast<int>(i));
    }
    if (n > 0) seq.intrinsics.validate(static_cast<int>(w), static_cast<int>(h));
    return seq;
}

inline std::string encode_labels(const std::vector<GroundTruthLabel>& labels) {
    std::ostringstream out;
    out << "frame,wx,wy,wz";
    for (int t = 0; t < 5; ++t) out << ",t" << t << "x,t" << t << "y,t" << t << "z";
    out << '\n';
    out.precision(17);
    for (const auto& l : labels) {
        out << l.frame_index;
        for (const auto& j : l.joints()) out << ',' << j.x() << ',' << j.y() << ',' << j.z();
        out << '\n';
    }
    return out.str();
}

inline std::vector<GroundTruthLabel> decode_labels(const std::string& text) {
    std::vector<GroundTruthLabel> labels;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("frame", 0) == 0) continue;
        std::vector<double> values;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                fail(ErrorKind::Format, "labels: line " + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (values.size() != 19)
            fail(ErrorKind::Format, "labels: line " + std::to_string(line_no) + ": expected 19 fields, got " +
                                        std::to_string(values.size()));
        GroundTruthLabel l;
        l.frame_index = static_cast<int>(values[0]);
        l.wrist = {values[1], values[2], values[3]};
        for (int t = 0; t < 5; ++t) l.fingertips[t] = {values[4 + 3 * t], values[5 + 3 * t], values[6 + 3 * t]};
        labels.push_back(l);
    }
    std::stable_sort(labels.begin(), labels.end(),
                     [](const auto& a, const auto& b) { return a.frame_index < b.frame_index; });
    return labels;
}

// Label file path convention: <sequence>.labels.csv next to the sequence.
inline std::filesystem::path label_path_for(const std::filesystem::path& sequence_path) {
    auto p = sequence_path;
    p += ".labels.csv";
    return p;
}

inline void save_sequence(const std::filesystem::path& path, const Sequence& seq) {
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
        const std::string bytes = encode_sequence(seq.frames, seq.intrinsics);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorKind::Io, "short write to " + path.string());
    }
    if (!seq.labels.empty()) {
        std::ofstream out(label_path_for(path), std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + label_path_for(path).string());
        out << encode_labels(seq.labels);
    }
}

// Loads the sequence and, if present, the sibling label file (or an explicit one).
inline Sequence load_sequence(const std::filesystem::path& path,
                              std::optional<std::filesystem::path> labels_path = std::nullopt) {
    Sequence seq = decode_sequence(detail::read_file(path));
    const auto lp = labels_path.value_or(label_path_for(path));
    if (std::filesystem::exists(lp)) {
        seq.labels = decode_labels(detail::read_file(lp));
        for (const auto& l : seq.labels)
            if (l.frame_index < 0 || l.frame_index >= static_cast<int>(seq.frames.size()))
                fail(ErrorKind::Format, "labels: frame " + std::to_string(l.frame_index) + " not in sequence");
    } else if (labels_path) {
        fail(ErrorKind::Io, "cannot open " + lp.string());
    }
    return seq;
}

}  // namespace handtrack
