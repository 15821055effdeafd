// Copyright 2026 The handfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "handfit/fitting.hpp"
#include "handfit/metrics.hpp"
#include "handfit/session_io.hpp"

#include <cmath>
#include <sstream>
#include <string_view>

namespace handfit {

/// One term/view configuration of the annotation-quality ablation. The limit penalty is
/// always on; ego-view configurations see camera 0 only.
struct AblationConfig {
    std::string_view name;
    bool ego = false;
    bool j2d = false;
    bool mask = false;
    bool j3d = false;
    bool mesh = false;
};

inline constexpr std::array<AblationConfig, 6> kAblationConfigs = {{
    {"ego:mask+j2d", true, true, true, false, false},
    {"ego:mask+j2d+mesh", true, true, true, false, true},
    {"multi:mask", false, false, true, false, false},
    {"multi:mask+j2d", false, true, true, false, false},
    {"multi:mask+j2d+mesh", false, true, true, false, true},
    {"multi:mask+j2d+mesh+j3d", false, true, true, true, true},
}};

struct AblationRow {
    std::string name;
    double mean_cm = 0.0;
    double std_cm = 0.0;
    std::size_t frames = 0;      // annotated frames entering the statistics
    std::size_t unannotated = 0;
};

inline EnergyWeights ablation_weights(const EnergyWeights& base, const AblationConfig& a)
{
    EnergyWeights w = base;
    w.j2d = a.j2d ? base.j2d : 0.0;
    w.mask = a.mask ? base.mask : 0.0;
    w.j3d = a.j3d ? base.j3d : 0.0;
    w.mesh = a.mesh ? base.mesh : 0.0;
    return w;
}

/// Ego view: all weight on camera 0.
inline CameraRig ego_rig(CameraRig rig)
{
    for (std::size_t c = 0; c < rig.size(); ++c) {
        rig.cameras[c].weight = c == 0 ? 1.0 : 0.0;
    }
    return rig;
}

/// Fits the ground-truth hand under every configuration and reports per-frame MEPE statistics
/// (mean and population standard deviation, centimeters).
inline std::vector<AblationRow> run_ablation(const Session& session, const SynthGroundTruth& gt, const PipelineConfig& config,
                                             const HandEvaluator& hand)
{
    if (gt.frames.size() != session.frames.size()) {
        throw Error(Errc::shape_mismatch, "ground truth has " + std::to_string(gt.frames.size()) + " frames, session "
                                              + std::to_string(session.frames.size()));
    }
    const auto limits = config.joint_limits(hand.model());
    std::vector<AblationRow> rows;
    for (const auto& a : kAblationConfigs) {
        Session s = session;
        s.rig = a.ego ? ego_rig(session.rig) : config.apply_alpha(session.rig);
        const auto track = fit_hand_sequence(s, gt.hand, hand, ablation_weights(config.weights, a), limits, config.optimizer);
        AblationRow row;
        row.name = std::string(a.name);
        std::vector<double> per_frame;
        for (std::size_t t = 0; t < track.frames.size(); ++t) {
            if (!track.frames[t]) {
                ++row.unannotated;
                continue;
            }
            const std::array<JointSet, 1> p{track.frames[t]->joints};
            const std::array<JointSet, 1> g{gt.frames[t].joints};
            per_frame.push_back(mepe(p, g) / 10.0);
        }
        row.frames = per_frame.size();
        row.mean_cm = mean_of(per_frame);
        double var = 0.0;
        for (double v : per_frame) {
            var += (v - row.mean_cm) * (v - row.mean_cm);
        }
        row.std_cm = per_frame.empty() ? 0.0 : std::sqrt(var / static_cast<double>(per_frame.size()));
        rows.push_back(row);
    }
    return rows;
}

/// "<name> <mean_cm> <std_cm> <frames> <unannotated>", centimeters with 4 decimals.
inline std::string format_ablation(const std::vector<AblationRow>& rows)
{
    std::ostringstream o;
    o << "# configuration mean_mepe_cm std_mepe_cm frames unannotated\n";
    for (const auto& r : rows) {
        o << r.name << " " << format_fixed(r.mean_cm, 4) << " " << format_fixed(r.std_cm, 4) << " " << r.frames << " "
          << r.unannotated << "\n";
    }
    return o.str();
}

} // namespace handfit
