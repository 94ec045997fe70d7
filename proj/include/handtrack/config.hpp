#pragma once

// key = value run configuration. Blank lines and '#' comments are ignored; unknown
// keys and out-of-range values are rejected.

#include <charconv>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "handtrack/error.hpp"
#include "handtrack/pipeline.hpp"
#include "handtrack/renderer.hpp"

namespace handtrack {

struct RunConfig {
    TrackerConfig tracker;
    std::optional<CameraIntrinsics> camera;  // overrides the intrinsics stored in a sequence
    SynthesisOptions synth;

    void validate() const {
        tracker.validate();
        synth.noise.validate();
        if (synth.width < 1 || synth.height < 1) fail(ErrorKind::Config, "synth size must be positive");
        if (synth.scene.backdrop_z < 0) fail(ErrorKind::Config, "synth.backdrop must be >= 0");
        try {
            synth.intrinsics.validate(synth.width, synth.height);
        } catch (const Error& e) {
            fail(ErrorKind::Config, e.what());
        }
        if (camera && !(camera->fx > 0 && camera->fy > 0)) fail(ErrorKind::Config, "camera focal lengths must be > 0");
    }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& s) {
    double v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(ErrorKind::Config, "config: '" + key + "' expects a number, got '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& key, const std::string& s) {
    long long v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) fail(ErrorKind::Config, "config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    fail(ErrorKind::Config, "config: '" + key + "' expects a boolean, got '" + s + "'");
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct ConfigField {
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
};

inline std::vector<ConfigField> config_fields(RunConfig& c) {
    std::vector<ConfigField> f;
    auto num = [&](std::string key, double& ref) {
        f.push_back({key, [key, &ref](const std::string& s) { ref = parse_double(key, s); },
                     [&ref] { return format_double(ref); }});
    };
    auto integer = [&](std::string key, int& ref) {
        f.push_back({key, [key, &ref](const std::string& s) { ref = static_cast<int>(parse_int(key, s)); },
                     [&ref] { return std::to_string(ref); }});
    };
    auto flag = [&](std::string key, bool& ref) {
        f.push_back({key, [key, &ref](const std::string& s) { ref = parse_bool(key, s); },
                     [&ref] { return std::string(ref ? "true" : "false"); }});
    };
    TrackerConfig& t = c.tracker;
    f.push_back({"seed", [&t](const std::string& s) {
                     const long long v = parse_int("seed", s);
                     if (v < 0) fail(ErrorKind::Config, "seed must be >= 0");
                     t.seed = static_cast<std::uint64_t>(v);
                 },
                 [&t] { return std::to_string(t.seed); }});
    integer("threads", t.threads);

    integer("segmentation.depth_tolerance", t.segmentation.depth_tolerance_mm);
    integer("segmentation.max_pixels", t.segmentation.max_pixels);
    integer("segmentation.min_component", t.segmentation.min_component);
    integer("segmentation.occluder_range", t.segmentation.occluder_range_mm);
    integer("segmentation.max_restarts", t.segmentation.max_restarts);

    f.push_back({"sampling.mode",
                 [&t](const std::string& s) {
                     if (s == "random") t.sampling.mode = SamplingMode::Random;
                     else if (s == "hierarchical") t.sampling.mode = SamplingMode::Hierarchical;
                     else fail(ErrorKind::Config, "sampling.mode must be random or hierarchical");
                 },
                 [&t] { return std::string(t.sampling.mode == SamplingMode::Random ? "random" : "hierarchical"); }});
    integer("sampling.n_samples", t.sampling.n_samples);
    integer("sampling.n_seeds", t.sampling.n_seeds);
    num("sampling.t1", t.sampling.t1);
    num("sampling.t2", t.sampling.t2);
    integer("sampling.window", t.sampling.window);

    num("objective.w_data_to_model", t.objective.weights.d2m);
    num("objective.w_model_to_data", t.objective.weights.m2d);
    num("objective.w_overlap", t.objective.weights.overlap);
    num("objective.d_max", t.objective.d_max);

    integer("pso.particles", t.swarm.n_particles);
    integer("pso.generations", t.swarm.n_generations);
    num("pso.sigma_translation", t.swarm.sigma_translation);
    num("pso.sigma_angle", t.swarm.sigma_angle);
    num("pso.sigma_size", t.swarm.sigma_size);
    num("pso.hint_fraction", t.swarm.hint_fraction);

    flag("reinit.enabled", t.use_reinit);
    flag("reinit.prediction", t.reinit.use_prediction);
    num("reinit.planar_area_lo", t.reinit.planar_area_lo);
    num("reinit.planar_area_hi", t.reinit.planar_area_hi);
    num("reinit.extreme_margin", t.reinit.extreme_margin);
    num("reinit.ortho_window", t.reinit.ortho_window);
    num("reinit.ortho_area_lo", t.reinit.ortho_area_lo);
    num("reinit.ortho_area_hi", t.reinit.ortho_area_hi);
    num("reinit.ortho_protrusion", t.reinit.ortho_protrusion_mm);
    integer("reinit.max_candidates", t.reinit.max_candidates);
    num("reinit.e_init", t.reinit.e_init);
    num("reinit.a1", t.reinit.a1);
    num("reinit.a2", t.reinit.a2);

    flag("track.size_gate", t.size_gate);
    num("track.initial_size", t.initial_size);
    integer("track.eval_skip", t.eval_skip);

    auto cam = [&](std::string key, double CameraIntrinsics::*member) {
        f.push_back({key,
                     [key, &c, member](const std::string& s) {
                         if (!c.camera) c.camera = CameraIntrinsics{};
                         (*c.camera).*member = parse_double(key, s);
                     },
                     [&c, member] { return c.camera ? format_double((*c.camera).*member) : std::string("sequence"); }});
    };
    cam("camera.fx", &CameraIntrinsics::fx);
    cam("camera.fy", &CameraIntrinsics::fy);
    cam("camera.cx", &CameraIntrinsics::cx);
    cam("camera.cy", &CameraIntrinsics::cy);

    integer("synth.width", c.synth.width);
    integer("synth.height", c.synth.height);
    num("synth.fx", c.synth.intrinsics.fx);
    num("synth.fy", c.synth.intrinsics.fy);
    num("synth.cx", c.synth.intrinsics.cx);
    num("synth.cy", c.synth.intrinsics.cy);
    num("synth.noise_sigma", c.synth.noise.sigma);
    num("synth.void_probability", c.synth.noise.void_probability);
    flag("synth.wrist_band", c.synth.noise.wrist_band);
    flag("synth.arm", c.synth.scene.arm);
    num("synth.backdrop", c.synth.scene.backdrop_z);
    return f;
}

}  // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
    for (auto& field : detail::config_fields(c))
        if (field.key == key) {
            field.set(detail::trim(value));
            return;
        }
    fail(ErrorKind::Config, "config: unknown key '" + key + "'");
}

// Applies "key=value" assignments, one per line, on top of `c`.
inline void apply_config_text(RunConfig& c, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::Config, "config line " + std::to_string(lineno) + ": expected key = value");
        set_config_value(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
}

inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    apply_config_text(c, text);
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(detail::read_file(path));
}

// Effective configuration, one key=value per line, in a fixed order; parse_config of the
// output reproduces the configuration.
inline std::string format_config(const RunConfig& c) {
    RunConfig copy = c;
    std::string out;
    for (const auto& field : detail::config_fields(copy)) {
        const std::string v = field.get();
        if (v == "sequence") continue;
        out += field.key + " = " + v + "\n";
    }
    return out;
}

inline std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& c) {
    RunConfig copy = c;
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& field : detail::config_fields(copy)) out.emplace_back(field.key, field.get());
    return out;
}

}  // namespace handtrack
