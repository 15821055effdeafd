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

#include "handfit/energy.hpp"
#include "handfit/session.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>

namespace handfit {

/**
 * Damped Gauss-Newton (Levenberg-Marquardt) on the reweighted linearization of the objective.
 *
 * `step_size` is the initial damping; it is multiplied by `decay` after every accepted step and
 * by 10 after every rejected trial. A trial is accepted only if it lowers the true objective,
 * so the accepted history is strictly decreasing.
 */
struct OptimizerConfig {
    int max_iterations = 500;      // cold start (first frame, neutral initialization)
    int max_iterations_warm = 150; // warm start from the previous frame
    double relative_tolerance = 1e-6;
    int window = 5;
    double step_size = 1e-3;
    double decay = 0.1;
    int restarts = 2;
    std::uint64_t seed = 0;
};

struct FitResult {
    HandShape shape;
    HandPose pose;
    JointSet joints;
    double objective = 0.0;
    TermBreakdown breakdown;
    int iterations = 0;
    bool converged = false;
    std::vector<Term> dropped_terms;
    std::vector<double> history; // objective before the first and after every accepted step
};

namespace detail {

    inline constexpr double kMaxDamping = 1e12;
    inline constexpr double kDampingFloor = 1e-15;
    inline constexpr double kDampingIncrease = 10.0;

    inline FitResult finish(const Energy& energy, const HandShape& shape, const HandPose& pose, int iterations,
                            bool converged, std::vector<double> history)
    {
        const auto obj = energy.evaluate(shape, pose);
        FitResult r;
        r.shape = shape;
        r.pose = pose;
        r.joints = energy.hand()(shape, pose, false, false).joints;
        r.objective = obj.total;
        r.breakdown = obj.breakdown;
        r.iterations = iterations;
        r.converged = converged;
        r.dropped_terms = obj.breakdown.dropped();
        r.history = std::move(history);
        return r;
    }

    inline FitResult minimize(const Energy& energy, HandShape shape, HandPose pose, const OptimizerConfig& config,
                              int max_iterations)
    {
        const int n = energy.free_dim();
        auto lin = energy.linearize(shape, pose);
        double f = lin.objective.total;
        if (!std::isfinite(f)) {
            throw Error(Errc::non_finite_objective, "objective is not finite at the initial parameters");
        }
        std::vector<double> history{f};
        double mu = config.step_size;
        bool converged = false;
        int it = 0;
        const ParamVector fixed = stack_params(shape, pose);

        while (it < max_iterations) {
            if (f <= 0.0) {
                converged = true;
                break;
            }
            const Eigen::MatrixXd h = lin.hessian.topLeftCorner(n, n);
            const Eigen::VectorXd g = lin.gradient.head(n);
            const Eigen::VectorXd diag = h.diagonal().cwiseMax(kDampingFloor);
            const ParamVector x = stack_params(shape, pose);

            bool accepted = false;
            while (mu <= kMaxDamping) {
                Eigen::MatrixXd a = h;
                a.diagonal() += mu * diag;
                const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
                const Eigen::VectorXd dx = -ldlt.solve(g);
                if (ldlt.info() != Eigen::Success || !dx.allFinite()) {
                    mu *= kDampingIncrease;
                    continue;
                }
                ParamVector xn = fixed;
                xn.head(n) = x.head(n) + dx;
                HandShape sn;
                HandPose pn;
                from_params(xn, sn, pn);
                const double fn = energy.evaluate(sn, pn).total;
                if (std::isfinite(fn) && fn < f) {
                    shape = sn;
                    pose = pn;
                    f = fn;
                    mu = std::max(mu * config.decay, kDampingFloor);
                    accepted = true;
                    break;
                }
                mu *= kDampingIncrease;
            }
            if (!accepted) {
                // no descent direction at any damping: a (nonsmooth) stationary point
                converged = true;
                break;
            }
            ++it;
            history.push_back(f);
            // change over the last `window` accepted steps, or all of them while fewer exist
            const std::size_t w = static_cast<std::size_t>(std::max(config.window, 1));
            const double ref = history[history.size() > w ? history.size() - 1 - w : 0];
            if ((ref - f) <= config.relative_tolerance * std::abs(ref)) {
                converged = true;
                break;
            }
            lin = energy.linearize(shape, pose);
        }
        return finish(energy, shape, pose, it, converged, std::move(history));
    }

    inline constexpr std::array<int, 5> kPalmJoints = {0, 5, 9, 13, 17};

} // namespace detail

/// Neutral start: zero shape, mid-range articulation, global pose aligned to the triangulated
/// wrist and palm joints when at least three of them (including the wrist) are available.
inline HandPose neutral_pose(const HandModel& model, const JointLimits& limits, const TriangulatedJoints& tri)
{
    HandPose pose;
    pose.articulation = limits.mid();
    if (!tri.valid[0]) {
        return pose;
    }
    const auto rest = forward_kinematics(model.skeleton, HandShape{}, pose);
    std::vector<Vec3> from, to;
    for (int j : detail::kPalmJoints) {
        if (tri.valid[j]) {
            from.push_back(rest[j] - rest.wrist());
            to.push_back(tri.joints[j]);
        }
    }
    if (from.size() < 3) {
        pose.global_translation = tri.joints[0];
        return pose;
    }
    const auto t = rigid_align(from, to);
    pose.global_rotation = matrix_to_axis_angle(t.rotation);
    pose.global_translation = t.translation;
    return pose;
}

/// Neutral pose refined bone by bone: each articulated joint takes the smallest rotation that
/// points its bone along the triangulated one, clamped to the limits. Bones with an
/// untriangulated end keep their neutral angles.
inline HandPose kinematic_pose(const HandModel& model, const JointLimits& limits, const TriangulatedJoints& tri)
{
    HandPose pose = neutral_pose(model, limits, tri);
    const auto& s = model.skeleton;
    std::array<int, kJointCount> child;
    child.fill(-1);
    for (int j = kJointCount - 1; j > 0; --j) {
        child[s.parent[j]] = j;
    }
    std::array<Mat3, kJointCount> world;
    world[0] = axis_angle_to_matrix(pose.global_rotation);
    for (int j = 1; j < kJointCount; ++j) {
        const Mat3& parent = world[s.parent[j]];
        const int slot = s.articulated_index[j];
        if (slot < 0) {
            world[j] = parent;
            continue;
        }
        auto angles = pose.articulation.segment<3>(3 * slot);
        const int c = child[j];
        if (c >= 0 && tri.valid[j] && tri.valid[c]) {
            const Vec3 target = parent.transpose() * (tri.joints[c] - tri.joints[j]);
            const Vec3 rest = s.rest_offsets[c];
            if (target.norm() > 1e-9 && rest.norm() > 1e-9) {
                const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(rest, target);
                angles = matrix_to_axis_angle(q.toRotationMatrix());
                angles = angles.cwiseMax(limits.lower.segment<3>(3 * slot)).cwiseMin(limits.upper.segment<3>(3 * slot));
            }
        }
        world[j] = parent * axis_angle_to_matrix(angles);
    }
    return pose;
}

/// Optimizes shape and pose together from the neutral start, the kinematic start (when any
/// joint is triangulated) and `config.restarts` seeded perturbations of the neutral start;
/// returns the lowest objective (earliest run on ties).
inline FitResult fit_first_frame(const PreparedFrame& frame, const CameraRig& rig, const HandEvaluator& hand,
                                 const EnergyWeights& weights, const JointLimits& limits, const OptimizerConfig& config)
{
    const Energy energy(rig, hand, frame, weights, limits, true);
    const HandPose start = neutral_pose(hand.model(), limits, frame.joints3d());
    FitResult best = detail::minimize(energy, HandShape{}, start, config, config.max_iterations);
    if (frame.joints3d().valid_count() > 0) {
        auto candidate = detail::minimize(energy, HandShape{}, kinematic_pose(hand.model(), limits, frame.joints3d()), config,
                                          config.max_iterations);
        if (candidate.objective < best.objective) {
            best = std::move(candidate);
        }
    }

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int r = 0; r < config.restarts; ++r) {
        HandPose p = start;
        for (int i = 0; i < kArticulationDim; ++i) {
            const double half = 0.25 * (limits.upper[i] - limits.lower[i]);
            p.articulation[i] += half * unit(rng);
        }
        Vec3 delta;
        for (int k = 0; k < 3; ++k) {
            delta[k] = 0.3 * unit(rng);
        }
        p.global_rotation = matrix_to_axis_angle(axis_angle_to_matrix(start.global_rotation) * axis_angle_to_matrix(delta));
        auto candidate = detail::minimize(energy, HandShape{}, p, config, config.max_iterations);
        if (candidate.objective < best.objective) {
            best = std::move(candidate);
        }
    }
    return best;
}

/// Optimizes pose only with the shape held fixed, starting at `pose_init`.
inline FitResult fit_frame(const PreparedFrame& frame, const CameraRig& rig, const HandEvaluator& hand,
                           const HandShape& shape, const HandPose& pose_init, const EnergyWeights& weights,
                           const JointLimits& limits, const OptimizerConfig& config, int max_iterations = -1)
{
    const Energy energy(rig, hand, frame, weights, limits, false);
    return detail::minimize(energy, shape, pose_init, config, max_iterations > 0 ? max_iterations : config.max_iterations_warm);
}

struct HandTrack {
    std::vector<std::optional<FitResult>> frames; // null = unannotated
    std::vector<std::optional<Errc>> failures;    // set when the hand was present but its fit failed
    std::optional<HandShape> shape;               // fixed after the first annotated frame

    std::size_t annotated() const
    {
        return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const auto& f) { return f.has_value(); }));
    }
};

struct SequenceAnnotation {
    std::size_t frame_count = 0;
    std::array<std::optional<HandTrack>, 2> hands;

    std::optional<HandTrack>& track(Handedness h) { return hands[hand_slot(h)]; }
    const std::optional<HandTrack>& track(Handedness h) const { return hands[hand_slot(h)]; }

    std::size_t annotated() const
    {
        std::size_t n = 0;
        for (const auto& t : hands) {
            n += t ? t->annotated() : 0;
        }
        return n;
    }
};

/// Frame by frame for one hand: the first annotatable frame fits shape and pose, later frames
/// fit pose only, warm-started from the last successful fit. Failing frames are skipped.
inline HandTrack fit_hand_sequence(const Session& session, Handedness hand, const HandEvaluator& model,
                                   const EnergyWeights& weights, const JointLimits& limits, const OptimizerConfig& config)
{
    if (session.frames.empty()) {
        throw Error(Errc::empty_session, "session has no frames");
    }
    HandTrack track;
    track.frames.resize(session.frames.size());
    track.failures.resize(session.frames.size());
    std::optional<HandPose> last;
    for (std::size_t t = 0; t < session.frames.size(); ++t) {
        const auto& obs = session.frames[t].hand(hand);
        if (!obs) {
            continue;
        }
        try {
            const PreparedFrame frame(*obs, session.rig);
            if (!track.shape) {
                auto r = fit_first_frame(frame, session.rig, model, weights, limits, config);
                track.shape = r.shape;
                last = r.pose;
                track.frames[t] = std::move(r);
            } else {
                auto r = fit_frame(frame, session.rig, model, *track.shape, *last, weights, limits, config);
                last = r.pose;
                track.frames[t] = std::move(r);
            }
        } catch (const Error& e) {
            track.failures[t] = e.code();
        }
    }
    return track;
}

/// Independent per-hand runs over every selected hand that appears in the session.
inline SequenceAnnotation fit_sequence(const Session& session, const HandEvaluator& right, const HandEvaluator& left,
                                       const EnergyWeights& weights, const JointLimits& limits, const OptimizerConfig& config,
                                       std::span<const Handedness> hands = kBothHands)
{
    if (session.frames.empty()) {
        throw Error(Errc::empty_session, "session has no frames");
    }
    SequenceAnnotation out;
    out.frame_count = session.frames.size();
    for (auto h : hands) {
        if (session.has_hand(h)) {
            out.track(h) = fit_hand_sequence(session, h, h == Handedness::right ? right : left, weights, limits, config);
        }
    }
    return out;
}

} // namespace handfit
