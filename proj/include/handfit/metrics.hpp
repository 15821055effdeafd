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

#include "handfit/error.hpp"
#include "handfit/hand_model.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace handfit {

/// Joint errors in millimeters; inputs are meters.
inline std::vector<double> joint_errors_mm(std::span<const JointSet> pred, std::span<const JointSet> gt)
{
    if (pred.size() != gt.size()) {
        throw Error(Errc::shape_mismatch, "prediction has " + std::to_string(pred.size()) + " frames, ground truth "
                                              + std::to_string(gt.size()));
    }
    std::vector<double> out;
    out.reserve(pred.size() * kJointCount);
    for (std::size_t f = 0; f < pred.size(); ++f) {
        for (int i = 0; i < kJointCount; ++i) {
            out.push_back(1000.0 * (pred[f][i] - gt[f][i]).norm());
        }
    }
    return out;
}

inline double mean_of(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Mean end-point error in millimeters over all frames and joints.
inline double mepe(std::span<const JointSet> pred, std::span<const JointSet> gt)
{
    const auto e = joint_errors_mm(pred, gt);
    return mean_of(e);
}

/// Translates `pred` so its wrist coincides with the ground-truth wrist.
inline JointSet root_align(const JointSet& pred, const JointSet& gt)
{
    const Vec3 offset = gt.wrist() - pred.wrist();
    if (offset.isZero(0.0)) {
        return pred;
    }
    JointSet out = pred;
    for (auto& j : out.joints) {
        j += offset;
    }
    return out;
}

inline std::vector<JointSet> root_align(std::span<const JointSet> pred, std::span<const JointSet> gt)
{
    if (pred.size() != gt.size()) {
        throw Error(Errc::shape_mismatch, "frame counts differ");
    }
    std::vector<JointSet> out;
    out.reserve(pred.size());
    for (std::size_t f = 0; f < pred.size(); ++f) {
        out.push_back(root_align(pred[f], gt[f]));
    }
    return out;
}

struct PckCurve {
    std::vector<std::pair<double, double>> points; // (threshold mm, fraction of errors <= threshold)
    double auc = 0.0;
};

/// PCK at `steps` uniform thresholds over [0, max_threshold_mm], and its trapezoidal area
/// normalized by the range. All joints are pooled.
inline PckCurve pck_auc(std::span<const double> errors_mm, double max_threshold_mm, int steps)
{
    if (errors_mm.empty()) {
        throw Error(Errc::empty_errors, "no errors to evaluate");
    }
    if (!(max_threshold_mm > 0.0) || steps < 2) {
        throw Error(Errc::validation_error, "PCK needs a positive threshold range and at least 2 steps");
    }
    std::vector<double> sorted(errors_mm.begin(), errors_mm.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    PckCurve out;
    out.points.reserve(static_cast<std::size_t>(steps));
    for (int k = 0; k < steps; ++k) {
        const double tau = max_threshold_mm * k / (steps - 1);
        const auto count = std::upper_bound(sorted.begin(), sorted.end(), tau) - sorted.begin();
        out.points.emplace_back(tau, static_cast<double>(count) / n);
    }
    double area = 0.0;
    for (int k = 1; k < steps; ++k) {
        const auto& a = out.points[static_cast<std::size_t>(k - 1)];
        const auto& b = out.points[static_cast<std::size_t>(k)];
        area += 0.5 * (a.second + b.second) * (b.first - a.first);
    }
    out.auc = std::clamp(area / max_threshold_mm, 0.0, 1.0);
    return out;
}

struct MetricsSettings {
    double max_threshold_mm = 50.0;
    double max_threshold_ra_mm = 80.0;
    int steps = 101;
};

struct MetricsReport {
    double mepe_mm = 0.0;
    double mepe_ra_mm = 0.0;
    double auc = 0.0;
    double auc_ra = 0.0;
    PckCurve pck;
    PckCurve pck_ra;
    std::size_t joint_count = 0;
    std::size_t frame_count = 0;
    std::size_t unannotated_frames = 0;
};

/// `pred[f]` empty marks an unannotated frame: it is excluded and counted.
inline MetricsReport evaluate_predictions(std::span<const std::optional<JointSet>> pred, std::span<const JointSet> gt,
                                          const MetricsSettings& settings)
{
    if (pred.size() != gt.size()) {
        throw Error(Errc::shape_mismatch, "prediction has " + std::to_string(pred.size()) + " frames, ground truth "
                                              + std::to_string(gt.size()));
    }
    std::vector<JointSet> p, g;
    MetricsReport r;
    for (std::size_t f = 0; f < pred.size(); ++f) {
        if (pred[f]) {
            p.push_back(*pred[f]);
            g.push_back(gt[f]);
        } else {
            ++r.unannotated_frames;
        }
    }
    r.frame_count = p.size();
    const auto e = joint_errors_mm(p, g);
    const auto aligned = root_align(p, g);
    const auto e_ra = joint_errors_mm(aligned, g);
    r.joint_count = e.size();
    r.mepe_mm = mean_of(e);
    r.mepe_ra_mm = mean_of(e_ra);
    r.pck = pck_auc(e, settings.max_threshold_mm, settings.steps);
    r.pck_ra = pck_auc(e_ra, settings.max_threshold_ra_mm, settings.steps);
    r.auc = r.pck.auc;
    r.auc_ra = r.pck_ra.auc;
    return r;
}

} // namespace handfit
