#pragma once

// Frame-by-frame tracker and evaluation metrics.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "handtrack/depth_io.hpp"
#include "handtrack/hand_model.hpp"
#include "handtrack/objective.hpp"
#include "handtrack/parallel.hpp"
#include "handtrack/pso.hpp"
#include "handtrack/reinit.hpp"
#include "handtrack/renderer.hpp"
#include "handtrack/sampling.hpp"
#include "handtrack/segmentation.hpp"

namespace handtrack {

struct TrackerConfig {
    SegmentationParams segmentation;
    SamplingParams sampling;
    ObjectiveParams objective;
    SwarmConfig swarm;
    ReinitParams reinit;
    bool use_reinit = true;
    bool size_gate = true;       // explore size only on frames where all five fingers were classified
    double initial_size = 1.0;   // bootstrap value of every size component
    int threads = 1;
    std::uint64_t seed = 1;
    int eval_skip = 100;         // leading frames left out of accuracy aggregation

    void validate() const {
        swarm.validate();
        objective.weights.validate();
        if (!(objective.d_max > 0)) fail(ErrorKind::Config, "d_max must be > 0");
        if (segmentation.depth_tolerance_mm < 0) fail(ErrorKind::Config, "depth tolerance must be >= 0");
        if (segmentation.max_pixels < 1) fail(ErrorKind::Config, "max_pixels must be >= 1");
        if (segmentation.min_component < 0 || segmentation.occluder_range_mm < 0 || segmentation.max_restarts < 0)
            fail(ErrorKind::Config, "segmentation fragment parameters must be >= 0");
        if (sampling.n_seeds < 1) fail(ErrorKind::Config, "n_seeds must be >= 1");
        if (sampling.n_samples < 0) fail(ErrorKind::Config, "n_samples must be >= 0");
        if (sampling.window < 0) fail(ErrorKind::Config, "sampling window must be >= 0");
        if (!(initial_size > 0)) fail(ErrorKind::Config, "initial_size must be > 0");
        if (threads < 1) fail(ErrorKind::Config, "threads must be >= 1");
        if (eval_skip < 0) fail(ErrorKind::Config, "eval_skip must be >= 0");
        if (!(reinit.planar_area_lo > 0 && reinit.planar_area_lo <= reinit.planar_area_hi))
            fail(ErrorKind::Config, "planar area band must satisfy 0 < lo <= hi");
        if (!(reinit.ortho_area_lo > 0 && reinit.ortho_area_lo <= reinit.ortho_area_hi))
            fail(ErrorKind::Config, "orthogonal area band must satisfy 0 < lo <= hi");
        if (!(reinit.ortho_window > 0)) fail(ErrorKind::Config, "orthogonal window must be > 0");
        if (!(reinit.e_init > 0)) fail(ErrorKind::Config, "initial orientation error must be > 0");
    }
};

struct StageTimings {
    double reinit_ms = 0.0;
    double optimization_ms = 0.0;
    double other_ms = 0.0;
    double total_ms = 0.0;
};

struct DetectionRecord {
    Pixel tip_px;
    Vec3 tip = Vec3::Zero();
    FingerKind kind = FingerKind::Planar;
    int assigned = -1;
    int initial = -1;
    std::vector<Pixel> region;
};

struct FrameResult {
    int frame_index = 0;
    bool lost = false;
    bool tracking = false;  // an estimate exists (false only before the first valid frame)
    HandPose pose;
    HandSize size;
    CostBreakdown cost;
    Vec3 wrist = Vec3::Zero();
    std::array<Vec3, kNumFingers> fingertips{};
    StageTimings timings;
    std::vector<DetectionRecord> detections;
    double theta_m = 0.0;
    double theta_p = 0.0;
    double theta_o = 0.0;
    int n_samples = 0;
    bool mask_truncated = false;
};

namespace detail {

using Clock = std::chrono::steady_clock;
inline double ms_since(Clock::time_point t) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

}  // namespace detail

class Tracker {
public:
    Tracker(HandTemplate tmpl, TrackerConfig cfg, CameraIntrinsics k)
        : tmpl_(std::move(tmpl)), cfg_(std::move(cfg)), k_(k), rng_(cfg_.seed),
          pool_(std::make_unique<ThreadPool>(cfg_.threads)), palm_(PalmState::initial(cfg_.reinit.e_init)) {
        cfg_.validate();
    }

    const TrackerConfig& config() const noexcept { return cfg_; }
    const HandTemplate& hand_template() const noexcept { return tmpl_; }
    const std::optional<TrackState>& state() const noexcept { return state_; }
    const PalmState& palm_state() const noexcept { return palm_; }

    // Called after re-initialisation with the frame, its mask, the result and the state it used.
    using ReinitObserver = std::function<void(const DepthFrame&, const HandMask&, const ReinitResult&, const TrackState&)>;
    void set_reinit_observer(ReinitObserver fn) { observer_ = std::move(fn); }

    FrameResult track(const DepthFrame& frame) {
        const auto t0 = detail::Clock::now();
        FrameResult r;
        r.frame_index = frame.frame_index();
        k_.validate(frame.width(), frame.height());

        HandMask mask;
        try {
            mask = segment_hand(frame, cfg_.segmentation);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EmptyFrame) throw;
            return lost_result(r, t0);
        }
        r.mask_truncated = mask.truncated;
        if (!state_) bootstrap(frame, mask);

        const GradientMap grad = gradient_map(frame, mask);
        const SampleSet samples = sample(frame, mask, grad, k_, cfg_.sampling, rng_);
        r.n_samples = static_cast<int>(samples.size());
        const Observation obs(frame, mask, k_);

        ReinitHints hints;
        PalmState palm_next = palm_;
        const auto t_reinit = detail::Clock::now();
        if (cfg_.use_reinit) {
            ReinitResult re = reinitialize(tmpl_, mask, frame, k_, *state_, palm_, cfg_.reinit);
            if (observer_) observer_(frame, mask, re, *state_);
            hints = re.hints;
            palm_next = re.palm_state;
            for (std::size_t i = 0; i < re.detection.fingers.size(); ++i) {
                auto& f = re.detection.fingers[i];
                r.detections.push_back({f.tip_px, f.tip, f.kind, re.classification.assignment[i],
                                        re.classification.initial[i], std::move(f.region)});
            }
        }
        r.timings.reinit_ms = detail::ms_since(t_reinit);

        const auto t_opt = detail::Clock::now();
        const double size_noise = cfg_.size_gate && hints.finger_count() < kNumFingers ? 0.0 : cfg_.swarm.sigma_size;
        std::vector<Particle> particles = init_particles(tmpl_, *state_, hints, cfg_.swarm, rng_, size_noise);
        const SwarmResult best = run_generations(particles, samples.points, obs, tmpl_, cfg_.objective, cfg_.swarm,
                                                 *state_, rng_, pool_.get());
        r.timings.optimization_ms = detail::ms_since(t_opt);

        state_->pose = best.pose;
        state_->size = best.size;
        state_->frame_index = r.frame_index;
        palm_ = commit_optimized_orientation(palm_next, in_plane_angle(best.pose));

        r.tracking = true;
        r.pose = best.pose;
        r.size = best.size;
        r.cost = best.cost;
        fill_joints(r);
        r.theta_m = palm_.theta_m;
        r.theta_p = palm_.theta_p;
        r.theta_o = palm_.theta_o;
        r.timings.total_ms = detail::ms_since(t0);
        r.timings.other_ms = std::max(0.0, r.timings.total_ms - r.timings.reinit_ms - r.timings.optimization_ms);
        return r;
    }

private:
    void bootstrap(const DepthFrame& frame, const HandMask& mask) {
        double su = 0, sv = 0;
        std::vector<int> depths;
        depths.reserve(mask.pixels.size());
        for (const Pixel& p : mask.pixels) {
            su += p.u;
            sv += p.v;
            depths.push_back(frame.at(p.u, p.v));
        }
        const double n = static_cast<double>(mask.pixels.size());
        std::nth_element(depths.begin(), depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2), depths.end());
        const double z = depths[depths.size() / 2];
        TrackState s;
        s.size = clamp_size(tmpl_, HandSize::uniform(cfg_.initial_size));
        s.pose = neutral_pose_at(tmpl_, s.size, pixel_to_camera(su / n, sv / n, z, k_));
        s.frame_index = frame.frame_index() - 1;
        state_ = s;
    }

    void fill_joints(FrameResult& r) const {
        const SphereModel m = pose_spheres(tmpl_, r.size, r.pose);
        r.wrist = m.wrist;
        r.fingertips = m.tips;
    }

    FrameResult lost_result(FrameResult& r, detail::Clock::time_point t0) const {
        r.lost = true;
        if (state_) {
            r.tracking = true;
            r.pose = state_->pose;
            r.size = state_->size;
            fill_joints(r);
        }
        r.theta_o = palm_.theta_o;
        r.timings.total_ms = detail::ms_since(t0);
        r.timings.other_ms = r.timings.total_ms;
        return r;
    }

    HandTemplate tmpl_;
    TrackerConfig cfg_;
    CameraIntrinsics k_;
    Rng rng_;
    std::unique_ptr<ThreadPool> pool_;
    std::optional<TrackState> state_;
    PalmState palm_;
    ReinitObserver observer_;
};

inline std::vector<FrameResult> track_sequence(const HandTemplate& tmpl, const TrackerConfig& cfg, const Sequence& seq) {
    Tracker tracker(tmpl, cfg, seq.intrinsics);
    std::vector<FrameResult> out;
    out.reserve(seq.frames.size());
    for (const DepthFrame& f : seq.frames) out.push_back(tracker.track(f));
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

inline constexpr std::array<const char*, 6> kJointNames{"wrist", "thumb", "index", "middle", "ring", "pinky"};

struct EvalReport {
    int frames_evaluated = 0;
    double mean_error = 0.0;                 // over all six joints
    double fingertip_error = 0.0;            // over the five fingertips
    std::array<double, 6> joint_error{};     // wrist then thumb..pinky tips
    std::array<int, kNumFingers> detections{};
    std::array<int, kNumFingers> correct{};
    std::array<double, kNumFingers> ccr{};   // %, NaN when a finger was never detected
    double ccr_average = std::numeric_limits<double>::quiet_NaN();  // mean of the defined per-finger rates
    int spurious_detections = 0;             // detections with no true finger identity
    double fps = 0.0;
    StageTimings mean_timings;
    std::vector<int> frame_index;            // evaluated frames
    std::vector<double> frame_error;         // mean fingertip error per evaluated frame
};

// True finger identity of each detection, one inner vector per result (-1 = not a finger).
using DetectionTruth = std::vector<std::vector<int>>;

// Identity = majority finger label over the detection region.
inline DetectionTruth truth_from_part_labels(const std::vector<FrameResult>& results,
                                             const std::vector<Grid<PixelLabel>>& labels) {
    DetectionTruth out(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto idx = static_cast<std::size_t>(results[i].frame_index);
        for (const auto& d : results[i].detections) {
            int id = -1;
            if (idx < labels.size()) {
                std::array<int, kNumFingers> votes{};
                int other = 0;
                for (const Pixel& p : d.region) {
                    const int f = label_finger(labels[idx](p.u, p.v));
                    if (f >= 0) ++votes[static_cast<std::size_t>(f)];
                    else ++other;
                }
                const auto top = std::max_element(votes.begin(), votes.end());
                if (*top > other) id = static_cast<int>(top - votes.begin());
            }
            out[i].push_back(id);
        }
    }
    return out;
}

// Identity = nearest labelled fingertip to the detected tip.
inline DetectionTruth truth_from_fingertips(const std::vector<FrameResult>& results, const Sequence& seq) {
    DetectionTruth out(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        const GroundTruthLabel* gt = seq.label_for(results[i].frame_index);
        for (const auto& d : results[i].detections) {
            int id = -1;
            if (gt) {
                double best = std::numeric_limits<double>::infinity();
                for (int f = 0; f < kNumFingers; ++f) {
                    const double dist = (d.tip - gt->fingertips[static_cast<std::size_t>(f)]).norm();
                    if (dist < best) {
                        best = dist;
                        id = f;
                    }
                }
            }
            out[i].push_back(id);
        }
    }
    return out;
}

inline EvalReport evaluate(const std::vector<FrameResult>& results, const std::vector<GroundTruthLabel>& labels,
                           int skip, const DetectionTruth* truth = nullptr) {
    EvalReport rep;
    std::array<double, 6> joint_sum{};
    double total_ms = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const FrameResult& r = results[i];
        rep.mean_timings.reinit_ms += r.timings.reinit_ms;
        rep.mean_timings.optimization_ms += r.timings.optimization_ms;
        rep.mean_timings.other_ms += r.timings.other_ms;
        rep.mean_timings.total_ms += r.timings.total_ms;
        total_ms += r.timings.total_ms;
        if (r.frame_index < skip || !r.tracking) continue;
        const auto it = std::find_if(labels.begin(), labels.end(),
                                     [&](const GroundTruthLabel& l) { return l.frame_index == r.frame_index; });
        if (it == labels.end()) continue;
        const auto gt = it->joints();
        double tips = 0.0;
        for (int j = 0; j < 6; ++j) {
            const Vec3& est = j == 0 ? r.wrist : r.fingertips[static_cast<std::size_t>(j - 1)];
            const double e = (est - gt[static_cast<std::size_t>(j)]).norm();
            joint_sum[static_cast<std::size_t>(j)] += e;
            if (j > 0) tips += e;
        }
        rep.frame_index.push_back(r.frame_index);
        rep.frame_error.push_back(tips / kNumFingers);
        ++rep.frames_evaluated;

        if (truth && i < truth->size()) {
            const auto& ids = (*truth)[i];
            for (std::size_t d = 0; d < r.detections.size() && d < ids.size(); ++d) {
                if (ids[d] < 0) {
                    ++rep.spurious_detections;
                    continue;
                }
                ++rep.detections[static_cast<std::size_t>(ids[d])];
                if (r.detections[d].assigned == ids[d]) ++rep.correct[static_cast<std::size_t>(ids[d])];
            }
        }
    }
    if (rep.frames_evaluated == 0) fail(ErrorKind::InvalidInput, "evaluate: no labelled frames to evaluate");

    const double n = rep.frames_evaluated;
    double all = 0.0, tips = 0.0;
    for (int j = 0; j < 6; ++j) {
        rep.joint_error[static_cast<std::size_t>(j)] = joint_sum[static_cast<std::size_t>(j)] / n;
        all += rep.joint_error[static_cast<std::size_t>(j)];
        if (j > 0) tips += rep.joint_error[static_cast<std::size_t>(j)];
    }
    rep.mean_error = all / 6.0;
    rep.fingertip_error = tips / kNumFingers;

    double ccr_sum = 0.0;
    int ccr_n = 0;
    for (int f = 0; f < kNumFingers; ++f) {
        const auto fi = static_cast<std::size_t>(f);
        rep.ccr[fi] = rep.detections[fi] > 0 ? 100.0 * rep.correct[fi] / rep.detections[fi]
                                             : std::numeric_limits<double>::quiet_NaN();
        if (rep.detections[fi] > 0) {
            ccr_sum += rep.ccr[fi];
            ++ccr_n;
        }
    }
    if (ccr_n > 0) rep.ccr_average = ccr_sum / ccr_n;

    if (!results.empty()) {
        const double m = static_cast<double>(results.size());
        rep.mean_timings.reinit_ms /= m;
        rep.mean_timings.optimization_ms /= m;
        rep.mean_timings.other_ms /= m;
        rep.mean_timings.total_ms /= m;
    }
    rep.fps = total_ms > 0 ? 1000.0 * static_cast<double>(results.size()) / total_ms : 0.0;
    return rep;
}

}  // namespace handtrack
