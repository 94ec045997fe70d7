// Renders a scripted trajectory, tracks it and prints the per-frame fingertip error.
//
//   track_synthetic [trajectory.traj] [seed]

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>

#include "handtrack.hpp"

int main(int argc, char** argv) {
    using namespace handtrack;
    const std::string script = argc > 1 ? argv[1] : "data/open_then_wiggle.traj";
    const std::uint64_t seed = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 1;

    try {
        const HandTemplate tmpl = default_template();
        Rng rng(seed);
        const SynthesizedSequence synth =
            synthesize_sequence(tmpl, expand_trajectory(load_trajectory(script)), SynthesisOptions{}, rng);

        TrackerConfig cfg;
        cfg.seed = seed;
        const std::vector<FrameResult> results = track_sequence(tmpl, cfg, synth.sequence);

        for (const FrameResult& r : results) {
            if (r.frame_index % 20 != 0) continue;
            const GroundTruth& gt = synth.truth[static_cast<std::size_t>(r.frame_index)];
            double err = 0;
            for (int f = 0; f < kNumFingers; ++f)
                err += (r.fingertips[static_cast<std::size_t>(f)] - gt.fingertips[static_cast<std::size_t>(f)]).norm();
            std::cout << "frame " << std::setw(4) << r.frame_index << "  fingertip error " << std::fixed
                      << std::setprecision(1) << err / kNumFingers << " mm  detections " << r.detections.size()
                      << "  " << std::setprecision(1) << r.timings.total_ms << " ms\n";
        }

        const DetectionTruth truth = truth_from_part_labels(results, synth.labels);
        const EvalReport rep = evaluate(results, synth.sequence.labels, cfg.eval_skip, &truth);
        std::cout << "evaluated " << rep.frames_evaluated << " frames: mean fingertip error " << std::setprecision(2)
                  << rep.fingertip_error << " mm, CCR " << std::setprecision(1) << rep.ccr_average << " %, "
                  << rep.fps << " fps\n";
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
