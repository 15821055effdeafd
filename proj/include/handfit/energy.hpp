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

#include "handfit/distance_field.hpp"
#include "handfit/error.hpp"
#include "handfit/geometry.hpp"
#include "handfit/hand_model.hpp"
#include "handfit/point_index.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

/**
 * Fitting objective: a weighted sum of
 *
 *   j2d   sum_c alpha_c sum_i conf_ci |J2d_ci - proj_c(J_i)|            (pixels)
 *   mask  sum_c alpha_c sum_v dist_c(proj_c(V_v))                         (pixels)
 *   j3d   sum_i |J3d_i - J_i|  over triangulated joints                   (meters)
 *   mesh  sum_v min_p |P_p - V_v|                                         (meters)
 *   reg   sum over 45 articulation DoF of the distance outside [lower, upper]
 *   shape |beta|^2, only while the shape is being optimized
 *
 * All data terms are raw (unsquared) norms. A data term whose observations are unusable is
 * dropped for the frame rather than failing the fit.
 */
namespace handfit {

struct EnergyWeights {
    double j2d = 1e-2;
    double mask = 1e-3;
    double j3d = 1.0;
    double mesh = 1e-1;
    double reg = 1.0;
    double shape = 1e-2;
};

enum class Term { j2d, mask, j3d, mesh, reg, shape };
inline constexpr int kTermCount = 6;
inline constexpr std::array<Term, kTermCount> kAllTerms = {Term::j2d, Term::mask, Term::j3d, Term::mesh, Term::reg, Term::shape};

constexpr std::string_view to_string(Term t)
{
    constexpr std::array<std::string_view, kTermCount> names = {"j2d", "mask", "j3d", "mesh", "reg", "shape"};
    return names[static_cast<std::size_t>(t)];
}

constexpr bool is_data_term(Term t) { return t == Term::j2d || t == Term::mask || t == Term::j3d || t == Term::mesh; }

inline double weight_of(const EnergyWeights& w, Term t)
{
    switch (t) {
    case Term::j2d: return w.j2d;
    case Term::mask: return w.mask;
    case Term::j3d: return w.j3d;
    case Term::mesh: return w.mesh;
    case Term::reg: return w.reg;
    case Term::shape: return w.shape;
    }
    return 0.0;
}

enum class TermStatus { inactive, active, dropped };

/// Unweighted value and status of every term; values of inactive or dropped terms are 0.
struct TermBreakdown {
    std::array<double, kTermCount> value{};
    std::array<TermStatus, kTermCount> status{};
    std::array<std::optional<Errc>, kTermCount> drop_reason{};

    double& operator[](Term t) { return value[static_cast<std::size_t>(t)]; }
    double operator[](Term t) const { return value[static_cast<std::size_t>(t)]; }
    TermStatus status_of(Term t) const { return status[static_cast<std::size_t>(t)]; }

    std::vector<Term> dropped() const
    {
        std::vector<Term> out;
        for (auto t : kAllTerms) {
            if (status_of(t) == TermStatus::dropped) {
                out.push_back(t);
            }
        }
        return out;
    }
};

/// Finite per-joint / per-vertex cost used when a point projects behind a camera.
inline constexpr double kBehindCameraPenaltyPx = 1e4;

// Residual norms below these are treated as exactly zero: the term contributes no gradient
// there (zero subgradient at the kink).
inline constexpr double kPixelKink = 1e-9;
inline constexpr double kMeterKink = 1e-12;
inline constexpr double kRadianKink = 1e-12;

struct ViewObservation {
    std::array<Vec2, kJointCount> joints2d{};
    std::array<double, kJointCount> confidence{};
    MaskImage mask;
};

struct TriangulatedJoints {
    JointSet joints;
    std::array<bool, kJointCount> valid{};

    int valid_count() const
    {
        int n = 0;
        for (bool v : valid) {
            n += v ? 1 : 0;
        }
        return n;
    }
};

struct FrameObservation {
    std::vector<ViewObservation> views;
    std::vector<Vec3> cloud;
    std::optional<TriangulatedJoints> joints3d;
};

/// Lifts 2D joints seen (confidence > 0) by >= 2 positively weighted views. Joints that cannot
/// be triangulated are marked invalid.
inline TriangulatedJoints triangulate_joints(const CameraRig& rig, const FrameObservation& frame)
{
    TriangulatedJoints out;
    std::vector<std::optional<Vec2>> obs(rig.size());
    for (int i = 0; i < kJointCount; ++i) {
        for (std::size_t c = 0; c < rig.size(); ++c) {
            obs[c].reset();
            if (c < frame.views.size() && rig[c].weight > 0.0 && frame.views[c].confidence[i] > 0.0) {
                obs[c] = frame.views[c].joints2d[i];
            }
        }
        try {
            out.joints[i] = triangulate(rig, obs);
            out.valid[i] = out.joints[i].allFinite();
        } catch (const Error&) {
            out.valid[i] = false;
        }
    }
    return out;
}

inline double e_j2d(const CameraRig& rig, const JointSet& joints, const FrameObservation& frame)
{
    double total = 0.0;
    bool any = false;
    for (std::size_t c = 0; c < rig.size() && c < frame.views.size(); ++c) {
        const double alpha = rig[c].weight;
        if (alpha <= 0.0) {
            continue;
        }
        const auto& view = frame.views[c];
        double sum = 0.0;
        for (int i = 0; i < kJointCount; ++i) {
            const double w = view.confidence[i];
            if (w <= 0.0) {
                continue;
            }
            any = true;
            Eigen::Matrix<double, 2, 3> j;
            const auto px = project(rig[c], joints[i], j);
            sum += w * (px ? (view.joints2d[i] - *px).norm() : kBehindCameraPenaltyPx);
        }
        total += alpha * sum;
    }
    if (!any) {
        throw Error(Errc::no_valid_observations, "no 2D joint has positive confidence in a weighted view");
    }
    return total;
}

/// `fields` holds one distance field per camera, built from that view's mask.
inline double e_mask(const CameraRig& rig, std::span<const Vec3> vertices, std::span<const MaskDistanceField> fields)
{
    double total = 0.0;
    for (std::size_t c = 0; c < rig.size(); ++c) {
        const double alpha = rig[c].weight;
        if (alpha <= 0.0) {
            continue;
        }
        if (c >= fields.size() || fields[c].empty()) {
            throw Error(Errc::empty_mask, "view " + std::to_string(c) + " has an empty mask");
        }
        double sum = 0.0;
        for (const auto& v : vertices) {
            Eigen::Matrix<double, 2, 3> j;
            const auto px = project(rig[c], v, j);
            sum += px ? fields[c].distance(*px) : kBehindCameraPenaltyPx;
        }
        total += alpha * sum;
    }
    return total;
}

inline double e_j3d(const JointSet& joints, const TriangulatedJoints& triangulated)
{
    if (triangulated.valid_count() == 0) {
        throw Error(Errc::no_valid_joints, "no joint could be triangulated");
    }
    double total = 0.0;
    for (int i = 0; i < kJointCount; ++i) {
        if (triangulated.valid[i]) {
            total += (triangulated.joints[i] - joints[i]).norm();
        }
    }
    return total;
}

inline double e_mesh(std::span<const Vec3> vertices, const PointIndex& cloud)
{
    if (cloud.empty()) {
        throw Error(Errc::empty_cloud, "point cloud is empty");
    }
    double total = 0.0;
    for (const auto& v : vertices) {
        total += cloud.nearest(v).distance;
    }
    return total;
}

inline double e_reg(const HandPose& pose, const JointLimits& limits)
{
    double total = 0.0;
    for (int i = 0; i < kArticulationDim; ++i) {
        const double t = pose.articulation[i];
        total += std::max(limits.lower[i] - t, 0.0) + std::max(t - limits.upper[i], 0.0);
    }
    return total;
}

inline double e_shape(const HandShape& shape) { return shape.beta.squaredNorm(); }

/// Immutable per-frame acceleration structures, shareable across evaluations.
class PreparedFrame {
public:
    PreparedFrame(FrameObservation frame, const CameraRig& rig)
        : frame_(std::move(frame))
        , cloud_(frame_.cloud)
    {
        fields_.reserve(frame_.views.size());
        for (const auto& v : frame_.views) {
            fields_.emplace_back(v.mask);
        }
        joints3d_ = frame_.joints3d ? *frame_.joints3d : triangulate_joints(rig, frame_);
    }

    const FrameObservation& observation() const { return frame_; }
    const std::vector<MaskDistanceField>& fields() const { return fields_; }
    const PointIndex& cloud() const { return cloud_; }
    const TriangulatedJoints& joints3d() const { return joints3d_; }

private:
    FrameObservation frame_;
    std::vector<MaskDistanceField> fields_;
    PointIndex cloud_;
    TriangulatedJoints joints3d_;
};

struct Objective {
    double total = 0.0;
    TermBreakdown breakdown;
};

/// Objective value, gradient and Gauss-Newton curvature over all 61 parameters. Each norm
/// term c|r| contributes c/|r| J^T J (reweighted least squares), so a step on a single
/// term lands on its zero.
struct Linearization {
    Objective objective;
    ParamVector gradient = ParamVector::Zero();
    Eigen::Matrix<double, kParamDim, kParamDim> hessian = Eigen::Matrix<double, kParamDim, kParamDim>::Zero();
    std::vector<std::size_t> correspondences; // nearest cloud point of each vertex (mesh term)
};

struct HeldAssignments {
    std::vector<std::size_t> cloud;                             // per vertex
    std::vector<std::vector<MaskDistanceField::Cell>> mask_cells; // per view, per vertex
};

class Energy {
public:
    /// Throws AllTermsDropped when some term is weighted but no data term is both weighted and
    /// usable.
    Energy(const CameraRig& rig, const HandEvaluator& hand, const PreparedFrame& frame, const EnergyWeights& weights,
           const JointLimits& limits, bool shape_free)
        : rig_(&rig)
        , hand_(&hand)
        , frame_(&frame)
        , weights_(weights)
        , limits_(limits)
        , shape_free_(shape_free)
    {
        const auto& obs = frame.observation();
        auto set = [&](Term t, std::optional<Errc> failure) {
            const auto i = static_cast<std::size_t>(t);
            if (!(weight_of(weights_, t) > 0.0) || (t == Term::shape && !shape_free_)) {
                status_.status[i] = TermStatus::inactive;
            } else if (failure) {
                status_.status[i] = TermStatus::dropped;
                status_.drop_reason[i] = failure;
            } else {
                status_.status[i] = TermStatus::active;
            }
        };

        bool any_conf = false;
        bool any_weighted = false;
        bool masks_ok = true;
        for (std::size_t c = 0; c < rig.size(); ++c) {
            if (rig[c].weight <= 0.0) {
                continue;
            }
            any_weighted = true;
            if (c >= obs.views.size()) {
                masks_ok = false;
                continue;
            }
            for (double w : obs.views[c].confidence) {
                any_conf = any_conf || w > 0.0;
            }
            masks_ok = masks_ok && !frame.fields()[c].empty();
        }
        set(Term::j2d, any_conf ? std::nullopt : std::optional(Errc::no_valid_observations));
        set(Term::mask, any_weighted && masks_ok ? std::nullopt : std::optional(Errc::empty_mask));
        set(Term::j3d, frame.joints3d().valid_count() > 0 ? std::nullopt : std::optional(Errc::no_valid_joints));
        set(Term::mesh, !frame.cloud().empty() ? std::nullopt : std::optional(Errc::empty_cloud));
        set(Term::reg, std::nullopt);
        set(Term::shape, std::nullopt);

        bool any_data = false;
        bool any_term = false;
        for (auto t : kAllTerms) {
            any_data = any_data || (is_data_term(t) && active(t));
            any_term = any_term || status_.status_of(t) != TermStatus::inactive;
        }
        // with every weight zero the objective is identically zero and nothing is dropped
        if (!any_data && any_term) {
            throw Error(Errc::all_terms_dropped, "no active data term for this frame");
        }
    }

    bool active(Term t) const { return status_.status_of(t) == TermStatus::active; }
    bool shape_free() const { return shape_free_; }
    int free_dim() const { return shape_free_ ? kParamDim : kPoseDim; }
    const TermBreakdown& statuses() const { return status_; }
    const EnergyWeights& weights() const { return weights_; }
    const HandEvaluator& hand() const { return *hand_; }

    Objective evaluate(const HandShape& shape, const HandPose& pose) const { return evaluate_impl(shape, pose, nullptr); }

    /// Same as evaluate() with the nearest cloud point of every vertex and its mask
    /// interpolation cell in every view held fixed.
    Objective evaluate(const HandShape& shape, const HandPose& pose, const HeldAssignments& held) const
    {
        return evaluate_impl(shape, pose, &held);
    }

    /// Assignments of the mesh and mask terms at (shape, pose), for evaluate(..., held).
    HeldAssignments assignments(const HandShape& shape, const HandPose& pose) const
    {
        HeldAssignments held;
        if (!active(Term::mask) && !active(Term::mesh)) {
            return held;
        }
        const auto verts = (*hand_)(shape, pose, true, false).vertices;
        if (active(Term::mesh)) {
            held.cloud.resize(verts.size());
            for (std::size_t v = 0; v < verts.size(); ++v) {
                held.cloud[v] = frame_->cloud().nearest(verts[v]).index;
            }
        }
        if (active(Term::mask)) {
            held.mask_cells.resize(rig_->size());
            for (std::size_t c = 0; c < rig_->size(); ++c) {
                if ((*rig_)[c].weight <= 0.0) {
                    continue;
                }
                auto& cells = held.mask_cells[c];
                cells.resize(verts.size());
                for (std::size_t v = 0; v < verts.size(); ++v) {
                    const Vec3 pc = (*rig_)[c].extrinsics.to_camera(verts[v]);
                    if (pc.z() > kMinDepth) {
                        cells[v] = frame_->fields()[c].cell_of(project((*rig_)[c], verts[v]));
                    }
                }
            }
        }
        return held;
    }

    Linearization linearize(const HandShape& shape, const HandPose& pose) const
    {
        const bool need_vertices = active(Term::mask) || active(Term::mesh);
        const auto eval = (*hand_)(shape, pose, need_vertices, true);
        const auto& obs = frame_->observation();

        Linearization lin;
        lin.objective.breakdown = status_;
        auto& bd = lin.objective.breakdown;
        auto& g = lin.gradient;

        const std::size_t nv = eval.vertices.size();
        Eigen::Matrix<double, Eigen::Dynamic, kParamDim> rows(
            static_cast<Eigen::Index>(rig_->size() * (2 * kJointCount + nv) + 3 * kJointCount + 3 * nv + kArticulationDim), kParamDim);
        Eigen::Index nrows = 0;
        auto add_rows = [&](double s, const auto& jac) {
            rows.middleRows(nrows, jac.rows()) = std::sqrt(s) * jac;
            nrows += jac.rows();
        };

        if (active(Term::j2d)) {
            const double lambda = weights_.j2d;
            double value = 0.0;
            for (std::size_t c = 0; c < rig_->size(); ++c) {
                const double alpha = (*rig_)[c].weight;
                if (alpha <= 0.0) {
                    continue;
                }
                const auto& view = obs.views[c];
                double sum = 0.0;
                for (int i = 0; i < kJointCount; ++i) {
                    const double w = view.confidence[i];
                    if (w <= 0.0) {
                        continue;
                    }
                    Eigen::Matrix<double, 2, 3> jp;
                    const auto px = project((*rig_)[c], eval.joints[i], jp);
                    if (!px) {
                        sum += w * kBehindCameraPenaltyPx;
                        continue;
                    }
                    const Vec2 r = *px - view.joints2d[i];
                    const double norm = r.norm();
                    sum += w * norm;
                    const double coeff = lambda * alpha * w;
                    const Eigen::Matrix<double, 2, kParamDim> jr = jp * eval.joint_jacobian.middleRows<3>(3 * i);
                    if (norm > kPixelKink) {
                        g += coeff / norm * (jr.transpose() * r);
                    }
                    add_rows(coeff / std::max(norm, kPixelKink), jr);
                }
                value += alpha * sum;
            }
            bd[Term::j2d] = value;
        }

        if (active(Term::mask)) {
            const double lambda = weights_.mask;
            double value = 0.0;
            const auto& fields = frame_->fields();
            for (std::size_t c = 0; c < rig_->size(); ++c) {
                const double alpha = (*rig_)[c].weight;
                if (alpha <= 0.0) {
                    continue;
                }
                double sum = 0.0;
                const double coeff = lambda * alpha;
                for (std::size_t v = 0; v < nv; ++v) {
                    Eigen::Matrix<double, 2, 3> jp;
                    const auto px = project((*rig_)[c], eval.vertices[v], jp);
                    if (!px) {
                        sum += kBehindCameraPenaltyPx;
                        continue;
                    }
                    Vec2 grad;
                    const double d = fields[c].distance(*px, &grad);
                    sum += d;
                    if (d <= kPixelKink) {
                        continue;
                    }
                    const Eigen::Matrix<double, 1, kParamDim> jd
                        = (grad.transpose() * jp) * eval.vertex_jacobian.middleRows<3>(3 * static_cast<Eigen::Index>(v));
                    g += coeff * jd.transpose();
                    add_rows(coeff / d, jd);
                }
                value += alpha * sum;
            }
            bd[Term::mask] = value;
        }

        if (active(Term::j3d)) {
            const double lambda = weights_.j3d;
            const auto& tri = frame_->joints3d();
            double value = 0.0;
            for (int i = 0; i < kJointCount; ++i) {
                if (!tri.valid[i]) {
                    continue;
                }
                const Vec3 r = eval.joints[i] - tri.joints[i];
                const double norm = r.norm();
                value += norm;
                const auto jr = eval.joint_jacobian.middleRows<3>(3 * i);
                if (norm > kMeterKink) {
                    g += lambda / norm * (jr.transpose() * r);
                }
                add_rows(lambda / std::max(norm, kMeterKink), jr);
            }
            bd[Term::j3d] = value;
        }

        if (active(Term::mesh)) {
            const double lambda = weights_.mesh;
            const auto& cloud = frame_->cloud();
            double value = 0.0;
            lin.correspondences.resize(nv);
            for (std::size_t v = 0; v < nv; ++v) {
                const auto nn = cloud.nearest(eval.vertices[v]);
                lin.correspondences[v] = nn.index;
                const Vec3 r = eval.vertices[v] - cloud.points()[nn.index];
                const double norm = nn.distance;
                value += norm;
                const auto jr = eval.vertex_jacobian.middleRows<3>(3 * static_cast<Eigen::Index>(v));
                if (norm > kMeterKink) {
                    g += lambda / norm * (jr.transpose() * r);
                }
                add_rows(lambda / std::max(norm, kMeterKink), jr);
            }
            bd[Term::mesh] = value;
        }

        if (active(Term::reg)) {
            const double lambda = weights_.reg;
            bd[Term::reg] = e_reg(pose, limits_);
            for (int i = 0; i < kArticulationDim; ++i) {
                const double t = pose.articulation[i];
                double violation = 0.0;
                if (t < limits_.lower[i]) {
                    violation = limits_.lower[i] - t;
                    g[i] -= lambda;
                } else if (t > limits_.upper[i]) {
                    violation = t - limits_.upper[i];
                    g[i] += lambda;
                }
                if (violation > kRadianKink) {
                    lin.hessian(i, i) += lambda / violation;
                }
            }
        }

        if (active(Term::shape)) {
            const double lambda = weights_.shape;
            bd[Term::shape] = e_shape(shape);
            g.segment<kShapeDim>(kShapeOffset) += 2.0 * lambda * shape.beta;
            lin.hessian.diagonal().segment<kShapeDim>(kShapeOffset).array() += 2.0 * lambda;
        }

        lin.hessian.selfadjointView<Eigen::Lower>().rankUpdate(rows.topRows(nrows).transpose());
        lin.hessian.template triangularView<Eigen::StrictlyUpper>() = lin.hessian.transpose();
        lin.objective.total = weighted_total(bd);
        return lin;
    }

private:
    double weighted_total(const TermBreakdown& bd) const
    {
        double total = 0.0;
        for (auto t : kAllTerms) {
            if (bd.status_of(t) == TermStatus::active) {
                total += weight_of(weights_, t) * bd[t];
            }
        }
        return total;
    }

    Objective evaluate_impl(const HandShape& shape, const HandPose& pose, const HeldAssignments* held) const
    {
        const bool need_vertices = active(Term::mask) || active(Term::mesh);
        const auto eval = (*hand_)(shape, pose, need_vertices, false);
        const auto& obs = frame_->observation();
        Objective out;
        out.breakdown = status_;
        auto& bd = out.breakdown;
        if (active(Term::j2d)) {
            bd[Term::j2d] = e_j2d(*rig_, eval.joints, obs);
        }
        if (active(Term::mask)) {
            if (held) {
                double value = 0.0;
                for (std::size_t c = 0; c < rig_->size(); ++c) {
                    const double alpha = (*rig_)[c].weight;
                    if (alpha <= 0.0) {
                        continue;
                    }
                    const auto& field = frame_->fields()[c];
                    double sum = 0.0;
                    for (std::size_t v = 0; v < eval.vertices.size(); ++v) {
                        const Vec3 pc = (*rig_)[c].extrinsics.to_camera(eval.vertices[v]);
                        sum += pc.z() > kMinDepth ? field.distance_in(held->mask_cells[c][v], project((*rig_)[c], eval.vertices[v]))
                                                  : kBehindCameraPenaltyPx;
                    }
                    value += alpha * sum;
                }
                bd[Term::mask] = value;
            } else {
                bd[Term::mask] = e_mask(*rig_, eval.vertices, frame_->fields());
            }
        }
        if (active(Term::j3d)) {
            bd[Term::j3d] = e_j3d(eval.joints, frame_->joints3d());
        }
        if (active(Term::mesh)) {
            if (held) {
                const auto& pts = frame_->cloud().points();
                double value = 0.0;
                for (std::size_t v = 0; v < eval.vertices.size(); ++v) {
                    value += (eval.vertices[v] - pts[held->cloud[v]]).norm();
                }
                bd[Term::mesh] = value;
            } else {
                bd[Term::mesh] = e_mesh(eval.vertices, frame_->cloud());
            }
        }
        if (active(Term::reg)) {
            bd[Term::reg] = e_reg(pose, limits_);
        }
        if (active(Term::shape)) {
            bd[Term::shape] = e_shape(shape);
        }
        out.total = weighted_total(bd);
        return out;
    }

    const CameraRig* rig_;
    const HandEvaluator* hand_;
    const PreparedFrame* frame_;
    EnergyWeights weights_;
    JointLimits limits_;
    bool shape_free_;
    TermBreakdown status_;
};

inline ParamVector to_params(const HandShape& shape, const HandPose& pose) { return stack_params(shape, pose); }

inline void from_params(const ParamVector& x, HandShape& shape, HandPose& pose)
{
    pose = HandPose::from_vector(x.head<kPoseDim>());
    shape.beta = x.tail<kShapeDim>();
}

/// Weighted objective with per-term breakdown (the shape term counts only when `shape_free`).
inline Objective total_objective(const HandShape& shape, const HandPose& pose, bool shape_free, const PreparedFrame& frame,
                                 const CameraRig& rig, const HandEvaluator& hand, const EnergyWeights& weights,
                                 const JointLimits& limits)
{
    return Energy(rig, hand, frame, weights, limits, shape_free).evaluate(shape, pose);
}

/// Analytic gradient over the free parameters (51 pose values, plus 10 shape values when free).
inline Eigen::VectorXd grad_total(const HandShape& shape, const HandPose& pose, bool shape_free, const PreparedFrame& frame,
                                  const CameraRig& rig, const HandEvaluator& hand, const EnergyWeights& weights,
                                  const JointLimits& limits)
{
    const Energy energy(rig, hand, frame, weights, limits, shape_free);
    return energy.linearize(shape, pose).gradient.head(energy.free_dim());
}

/// Reference gradient by central differences, with the nearest cloud points and mask
/// interpolation cells held at their assignment for the unperturbed parameters.
inline Eigen::VectorXd grad_total_numeric(const HandShape& shape, const HandPose& pose, bool shape_free,
                                          const PreparedFrame& frame, const CameraRig& rig, const HandEvaluator& hand,
                                          const EnergyWeights& weights, const JointLimits& limits, double step = 1e-6)
{
    const Energy energy(rig, hand, frame, weights, limits, shape_free);
    const auto held = energy.assignments(shape, pose);
    const ParamVector x0 = to_params(shape, pose);
    Eigen::VectorXd g(energy.free_dim());
    for (int i = 0; i < energy.free_dim(); ++i) {
        ParamVector xp = x0;
        ParamVector xm = x0;
        xp[i] += step;
        xm[i] -= step;
        HandShape sp, sm;
        HandPose pp, pm;
        from_params(xp, sp, pp);
        from_params(xm, sm, pm);
        g[i] = (energy.evaluate(sp, pp, held).total - energy.evaluate(sm, pm, held).total) / (2.0 * step);
    }
    return g;
}

} // namespace handfit
