#pragma once

// Newline-delimited JSON result stream.
//
// Every line is one object with a "type" field:
//   config  {"type":"config", "entries":{key: value, ...}, ...}
//   frame   {"type":"frame", "frame":i, "lost":b, "pose":[26], "size":[6],
//            "cost":{"data_to_model","model_to_data","overlap","total"},
//            "joints":[[x,y,z] x 6] (wrist, thumb..pinky tips),
//            "timings_ms":{"reinit","optimization","other","total"},
//            "palm":{"measured","predicted","optimized"} (rad),
//            "detections":[{"u","v","kind","class","initial"}]}
//   report  {"type":"report", ...EvalReport fields...} or {"type":"report","status":"no labels"}

#include <cmath>
#include <ostream>
#include <string>

#include <json.hpp>

#include "handtrack/config.hpp"
#include "handtrack/pipeline.hpp"

namespace handtrack {

using Json = nlohmann::ordered_json;

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json nan_to_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json config_json(const RunConfig& c) {
    Json entries = Json::object();
    for (const auto& [k, v] : config_entries(c)) entries[k] = v;
    return Json{{"type", "config"}, {"entries", entries}};
}

inline Json frame_json(const FrameResult& r) {
    Json j;
    j["type"] = "frame";
    j["frame"] = r.frame_index;
    j["lost"] = r.lost;
    j["tracking"] = r.tracking;
    j["pose"] = r.pose.p;
    j["size"] = r.size.l;
    j["cost"] = {{"data_to_model", r.cost.d2m},
                 {"model_to_data", r.cost.m2d},
                 {"overlap", r.cost.overlap},
                 {"total", r.cost.total}};
    Json joints = Json::array({vec_json(r.wrist)});
    for (const auto& t : r.fingertips) joints.push_back(vec_json(t));
    j["joints"] = joints;
    j["timings_ms"] = {{"reinit", r.timings.reinit_ms},
                       {"optimization", r.timings.optimization_ms},
                       {"other", r.timings.other_ms},
                       {"total", r.timings.total_ms}};
    j["palm"] = {{"measured", r.theta_m}, {"predicted", r.theta_p}, {"optimized", r.theta_o}};
    Json det = Json::array();
    for (const auto& d : r.detections)
        det.push_back({{"u", d.tip_px.u},
                       {"v", d.tip_px.v},
                       {"kind", d.kind == FingerKind::Planar ? "planar" : "orthogonal"},
                       {"class", d.assigned >= 0 ? Json(kFingerNames[static_cast<std::size_t>(d.assigned)]) : Json(nullptr)},
                       {"initial", d.initial >= 0 ? Json(kFingerNames[static_cast<std::size_t>(d.initial)]) : Json(nullptr)}});
    j["detections"] = det;
    j["samples"] = r.n_samples;
    return j;
}

inline Json report_json(const EvalReport& rep) {
    Json j;
    j["type"] = "report";
    j["frames_evaluated"] = rep.frames_evaluated;
    j["mean_error_mm"] = rep.mean_error;
    j["fingertip_error_mm"] = rep.fingertip_error;
    Json per_joint = Json::object();
    for (std::size_t i = 0; i < kJointNames.size(); ++i) per_joint[kJointNames[i]] = rep.joint_error[i];
    j["joint_error_mm"] = per_joint;
    Json ccr = Json::object();
    for (int f = 0; f < kNumFingers; ++f)
        ccr[std::string(kFingerNames[static_cast<std::size_t>(f)])] = nan_to_null(rep.ccr[static_cast<std::size_t>(f)]);
    j["ccr_percent"] = ccr;
    j["ccr_average_percent"] = nan_to_null(rep.ccr_average);
    j["spurious_detections"] = rep.spurious_detections;
    j["fps"] = rep.fps;
    j["mean_timings_ms"] = {{"reinit", rep.mean_timings.reinit_ms},
                            {"optimization", rep.mean_timings.optimization_ms},
                            {"other", rep.mean_timings.other_ms},
                            {"total", rep.mean_timings.total_ms}};
    return j;
}

inline void write_line(std::ostream& os, const Json& j) { os << j.dump() << '\n'; }

}  // namespace handtrack
