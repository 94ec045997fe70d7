// handtrack command-line front end: track, synth, bench, ablate, overlay.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "handtrack.hpp"
#include "handtrack/overlay.hpp"
#include "handtrack/results_io.hpp"

namespace fs = std::filesystem;
using namespace handtrack;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kFormat = 4, kConfig = 5, kInput = 6 };

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::Io: return kIo;
        case ErrorKind::Format: return kFormat;
        case ErrorKind::Config: return kConfig;
        case ErrorKind::InvalidInput:
        case ErrorKind::EmptyFrame: return kInput;
    }
    return kFailure;
}

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string template_path;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", o.overrides, "override one configuration key (key=value), repeatable");
    cmd->add_option("--seed", o.seed, "random seed (overrides config)");
    cmd->add_option("--threads", o.threads, "cost-evaluation threads (overrides config)")->check(CLI::PositiveNumber);
    cmd->add_option("--template", o.template_path, "hand template file (default: built-in)");
}

// Precedence: built-in defaults < --config file < --set < --seed/--threads.
RunConfig effective_config(const CommonOptions& o) {
    RunConfig c;
    if (!o.config_path.empty()) apply_config_text(c, detail::read_file(o.config_path));
    for (const std::string& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
        set_config_value(c, detail::trim(kv.substr(0, eq)), kv.substr(eq + 1));
    }
    if (o.seed) c.tracker.seed = *o.seed;
    if (o.threads) c.tracker.threads = *o.threads;
    c.validate();
    return c;
}

HandTemplate template_for(const CommonOptions& o) {
    return o.template_path.empty() ? default_template() : load_template(o.template_path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    return out;
}

Sequence load_input(const std::string& path, const RunConfig& c) {
    Sequence seq = load_sequence(path);
    if (c.camera) seq.intrinsics = *c.camera;
    return seq;
}

// A .traj input is synthesised on the fly (with part labels for classification scoring);
// anything else is read as a sequence file.
struct Prepared {
    Sequence sequence;
    std::vector<Grid<PixelLabel>> part_labels;
};

Prepared prepare(const std::string& path, const HandTemplate& tmpl, const RunConfig& c, std::uint64_t synth_seed) {
    Prepared p;
    if (fs::path(path).extension() == ".traj") {
        Rng rng(synth_seed);
        SynthesizedSequence s = synthesize_sequence(tmpl, expand_trajectory(load_trajectory(path)), c.synth, rng, true);
        p.sequence = std::move(s.sequence);
        p.part_labels = std::move(s.labels);
    } else {
        p.sequence = load_input(path, c);
    }
    return p;
}

EvalReport score(const std::vector<FrameResult>& results, const Prepared& p, int skip) {
    const DetectionTruth truth = p.part_labels.empty() ? truth_from_fingertips(results, p.sequence)
                                                       : truth_from_part_labels(results, p.part_labels);
    return evaluate(results, p.sequence.labels, skip, &truth);
}

std::string fmt(double v, int prec = 2) {
    if (!std::isfinite(v)) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

// ---------------------------------------------------------------------------

struct TrackArgs {
    CommonOptions common;
    std::string sequence;
    std::string labels;
    std::string out;
};

int cmd_track(const TrackArgs& a) {
    const RunConfig c = effective_config(a.common);
    const HandTemplate tmpl = template_for(a.common);
    Sequence seq = a.labels.empty() ? load_sequence(a.sequence) : load_sequence(a.sequence, fs::path(a.labels));
    if (c.camera) seq.intrinsics = *c.camera;

    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    std::ostream& out = a.out.empty() ? std::cout : file;
    write_line(out, config_json(c));

    Tracker tracker(tmpl, c.tracker, seq.intrinsics);
    std::vector<FrameResult> results;
    for (const DepthFrame& f : seq.frames) {
        results.push_back(tracker.track(f));
        write_line(out, frame_json(results.back()));
    }
    if (seq.labels.empty()) {
        write_line(out, Json{{"type", "report"}, {"status", "no labels"}});
        std::cerr << "tracked " << results.size() << " frames (no labels)\n";
        return kOk;
    }
    const DetectionTruth truth = truth_from_fingertips(results, seq);
    const EvalReport rep = evaluate(results, seq.labels, c.tracker.eval_skip, &truth);
    write_line(out, report_json(rep));
    std::cerr << "tracked " << results.size() << " frames, evaluated " << rep.frames_evaluated
              << ", mean fingertip error " << fmt(rep.fingertip_error) << " mm, mean joint error "
              << fmt(rep.mean_error) << " mm, CCR " << fmt(rep.ccr_average, 1) << " %\n";
    return kOk;
}

struct SynthArgs {
    CommonOptions common;
    std::string trajectory;
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    const RunConfig c = effective_config(a.common);
    const HandTemplate tmpl = template_for(a.common);
    Rng rng(c.tracker.seed);
    const SynthesizedSequence s = synthesize_sequence(tmpl, expand_trajectory(load_trajectory(a.trajectory)), c.synth, rng, false);
    save_sequence(a.out, s.sequence);
    auto cfg_out = open_out(a.out + ".config");
    cfg_out << "# effective configuration for " << fs::path(a.out).filename().string() << " from "
            << fs::path(a.trajectory).filename().string() << "\n"
            << format_config(c);
    std::cerr << "wrote " << s.sequence.frames.size() << " frames to " << a.out << " and labels to "
              << label_path_for(a.out).string() << "\n";
    return kOk;
}

struct BenchArgs {
    CommonOptions common;
    std::string sequence;
    int repetitions = 1;
    std::string out;
};

struct StageStats {
    double mean = 0, p50 = 0, p95 = 0;
};

StageStats stats_of(std::vector<double> v) {
    StageStats s;
    if (v.empty()) return s;
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    auto pct = [&](double q) { return v[std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5))]; };
    s.p50 = pct(0.5);
    s.p95 = pct(0.95);
    return s;
}

int cmd_bench(const BenchArgs& a) {
    if (a.repetitions < 1) fail(ErrorKind::Config, "repetitions must be >= 1");
    const RunConfig c = effective_config(a.common);
    const HandTemplate tmpl = template_for(a.common);
    const Prepared p = prepare(a.sequence, tmpl, c, c.tracker.seed);

    std::array<std::vector<double>, 4> samples;
    for (int rep = 0; rep < a.repetitions; ++rep) {
        Tracker tracker(tmpl, c.tracker, p.sequence.intrinsics);
        for (const DepthFrame& f : p.sequence.frames) {
            const FrameResult r = tracker.track(f);
            samples[0].push_back(r.timings.reinit_ms);
            samples[1].push_back(r.timings.optimization_ms);
            samples[2].push_back(r.timings.other_ms);
            samples[3].push_back(r.timings.total_ms);
        }
    }
    const char* rows[4] = {"Finger detection/classification", "Optimization", "Others", "Total"};
    const char* keys[4] = {"reinit", "optimization", "other", "total"};
    std::cout << "# " << p.sequence.frames.size() << " frames x " << a.repetitions << " repetitions, "
              << c.tracker.threads << " thread(s), " << c.tracker.swarm.n_particles << " particles, "
              << c.tracker.swarm.n_generations << " generations\n";
    std::cout << std::left << std::setw(34) << "stage" << std::right << std::setw(10) << "mean ms" << std::setw(10)
              << "p50 ms" << std::setw(10) << "p95 ms" << "\n";
    Json j{{"type", "bench"}, {"frames", p.sequence.frames.size()}, {"repetitions", a.repetitions}};
    Json stages = Json::object();
    for (int i = 0; i < 4; ++i) {
        const StageStats s = stats_of(samples[static_cast<std::size_t>(i)]);
        std::cout << std::left << std::setw(34) << rows[i] << std::right << std::setw(10) << fmt(s.mean) << std::setw(10)
                  << fmt(s.p50) << std::setw(10) << fmt(s.p95) << "\n";
        stages[keys[i]] = {{"label", rows[i]}, {"mean_ms", s.mean}, {"p50_ms", s.p50}, {"p95_ms", s.p95}};
    }
    j["stages"] = stages;
    const double mean_total = stats_of(samples[3]).mean;
    j["fps"] = mean_total > 0 ? 1000.0 / mean_total : 0.0;
    std::cout << "fps " << fmt(mean_total > 0 ? 1000.0 / mean_total : 0.0, 1) << "\n";
    if (!a.out.empty()) {
        auto out = open_out(a.out);
        write_line(out, config_json(c));
        write_line(out, j);
    }
    return kOk;
}

struct AblateArgs {
    CommonOptions common;
    std::string study;
    std::vector<std::string> sequences;
    int seeds = 1;
    std::string out;
};

int cmd_ablate(const AblateArgs& a) {
    if (a.seeds < 1) fail(ErrorKind::Config, "seeds must be >= 1");
    const RunConfig base = effective_config(a.common);
    const HandTemplate tmpl = template_for(a.common);

    std::vector<std::pair<std::string, std::function<void(RunConfig&)>>> cells;
    if (a.study == "sampling") {
        cells.push_back({"random", [](RunConfig& c) { c.tracker.sampling.mode = SamplingMode::Random; }});
        cells.push_back({"hierarchical", [](RunConfig& c) { c.tracker.sampling.mode = SamplingMode::Hierarchical; }});
    } else if (a.study == "sigma2") {
        for (double s : {0.0, 0.005, 0.01, 0.015})
            cells.push_back({fmt(s, 3), [s](RunConfig& c) { c.tracker.swarm.sigma_size = s; }});
    } else if (a.study == "prediction") {
        cells.push_back({"without", [](RunConfig& c) { c.tracker.reinit.use_prediction = false; }});
        cells.push_back({"with", [](RunConfig& c) { c.tracker.reinit.use_prediction = true; }});
    } else {
        fail(ErrorKind::Config, "unknown study '" + a.study + "' (sampling, sigma2, prediction)");
    }

    std::ofstream file;
    if (!a.out.empty()) file = open_out(a.out);
    if (file) write_line(file, config_json(base));

    std::cout << "# study " << a.study << ", " << a.sequences.size() << " sequence(s) x " << a.seeds << " seed(s)\n";
    std::cout << std::left << std::setw(14) << "cell" << std::right << std::setw(16) << "fingertip mm" << std::setw(14)
              << "joint mm" << std::setw(10) << "CCR %" << "\n";
    for (const auto& [name, apply] : cells) {
        double tip = 0, joint = 0, ccr = 0;
        int runs = 0, ccr_runs = 0;
        for (const std::string& path : a.sequences) {
            for (int s = 0; s < a.seeds; ++s) {
                RunConfig c = base;
                apply(c);
                c.tracker.seed = base.tracker.seed + static_cast<std::uint64_t>(s);
                // The sequence (and its noise) depends on the seed only, never on the cell.
                const Prepared p = prepare(path, tmpl, c, c.tracker.seed);
                const std::vector<FrameResult> results = track_sequence(tmpl, c.tracker, p.sequence);
                const EvalReport rep = score(results, p, c.tracker.eval_skip);
                tip += rep.fingertip_error;
                joint += rep.mean_error;
                ++runs;
                if (std::isfinite(rep.ccr_average)) {
                    ccr += rep.ccr_average;
                    ++ccr_runs;
                }
                if (file) {
                    Json j = report_json(rep);
                    j["type"] = "ablation_run";
                    j["study"] = a.study;
                    j["cell"] = name;
                    j["sequence"] = path;
                    j["seed"] = c.tracker.seed;
                    write_line(file, j);
                }
            }
        }
        const double ccr_mean = ccr_runs ? ccr / ccr_runs : std::numeric_limits<double>::quiet_NaN();
        std::cout << std::left << std::setw(14) << name << std::right << std::setw(16) << fmt(tip / runs) << std::setw(14)
                  << fmt(joint / runs) << std::setw(10) << fmt(ccr_mean, 1) << "\n";
        if (file)
            write_line(file, Json{{"type", "ablation_cell"}, {"study", a.study}, {"cell", name},
                                  {"fingertip_error_mm", tip / runs}, {"mean_error_mm", joint / runs},
                                  {"ccr_average_percent", nan_to_null(ccr_mean)}, {"runs", runs}});
    }
    return kOk;
}

struct OverlayArgs {
    CommonOptions common;
    std::string sequence;
    std::string out_dir;
    int every = 1;
    int first = 0;
    int last = -1;
};

int cmd_overlay(const OverlayArgs& a) {
    if (a.every < 1) fail(ErrorKind::Config, "--every must be >= 1");
    const RunConfig c = effective_config(a.common);
    if (!c.tracker.use_reinit) fail(ErrorKind::Config, "overlay needs reinit.enabled = true");
    const HandTemplate tmpl = template_for(a.common);
    const Prepared p = prepare(a.sequence, tmpl, c, c.tracker.seed);
    std::error_code ec;
    fs::create_directories(a.out_dir, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + a.out_dir + ": " + ec.message());
    {
        auto cfg_out = open_out((fs::path(a.out_dir) / "config.txt").string());
        cfg_out << format_config(c);
    }

    Tracker tracker(tmpl, c.tracker, p.sequence.intrinsics);
    int written = 0;
    tracker.set_reinit_observer([&](const DepthFrame& f, const HandMask& mask, const ReinitResult& re, const TrackState& prev) {
        const int i = f.frame_index();
        if (i < a.first || (a.last >= 0 && i > a.last) || (i - a.first) % a.every != 0) return;
        const auto q = model_junctions(tmpl, prev.size, prev.pose, re.palm_state.theta_p, re.palm.point);
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05d.ppm", i);
        write_ppm(fs::path(a.out_dir) / name, render_overlay(f, mask, re, q, p.sequence.intrinsics));
        ++written;
    });
    for (const DepthFrame& f : p.sequence.frames) {
        if (a.last >= 0 && f.frame_index() > a.last) break;
        tracker.track(f);
    }
    std::cerr << "wrote " << written << " overlay(s) to " << a.out_dir << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Depth-based hand articulation tracker"};
    app.require_subcommand(1);

    TrackArgs track;
    auto* t = app.add_subcommand("track", "track a sequence and write an NDJSON result stream");
    t->add_option("sequence", track.sequence, "sequence file")->required();
    t->add_option("--labels", track.labels, "label CSV (default: <sequence>.labels.csv when present)");
    t->add_option("-o,--out", track.out, "result stream path (default: stdout)");
    add_common(t, track.common);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "render a trajectory script to a sequence with labels");
    s->add_option("trajectory", synth.trajectory, "trajectory script")->required();
    s->add_option("-o,--out", synth.out, "output sequence path")->required();
    add_common(s, synth.common);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "per-stage timing over repeated runs");
    b->add_option("sequence", bench.sequence, "sequence file or trajectory script")->required();
    b->add_option("-r,--repetitions", bench.repetitions, "repetitions");
    b->add_option("-o,--out", bench.out, "JSON output path");
    add_common(b, bench.common);

    AblateArgs ablate;
    auto* ab = app.add_subcommand("ablate", "compare configurations over labelled sequences");
    ab->add_option("--study", ablate.study, "sampling | sigma2 | prediction")->required();
    ab->add_option("sequences", ablate.sequences, "sequence files or trajectory scripts")->required();
    ab->add_option("--seeds", ablate.seeds, "seeds per sequence");
    ab->add_option("-o,--out", ablate.out, "NDJSON output path");
    add_common(ab, ablate.common);

    OverlayArgs overlay;
    auto* ov = app.add_subcommand("overlay", "write re-initialisation debug images while tracking");
    ov->add_option("sequence", overlay.sequence, "sequence file or trajectory script")->required();
    ov->add_option("--out-dir", overlay.out_dir, "output directory")->required();
    ov->add_option("--every", overlay.every, "write every n-th frame");
    ov->add_option("--first", overlay.first, "first frame to write");
    ov->add_option("--last", overlay.last, "last frame to process (-1 = all)");
    add_common(ov, overlay.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*t) return cmd_track(track);
        if (*s) return cmd_synth(synth);
        if (*b) return cmd_bench(bench);
        if (*ab) return cmd_ablate(ablate);
        if (*ov) return cmd_overlay(overlay);
    } catch (const Error& e) {
        std::cerr << "handtrack: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "handtrack: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
