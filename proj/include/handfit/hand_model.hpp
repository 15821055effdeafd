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
#include "handfit/rotation.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

/**
 * Parametric hand: shape (10 coefficients) and pose (45 articulation + 3 global rotation +
 * 3 global translation) mapped to 21 joints and skinned mesh vertices.
 *
 * Joint order: wrist, then thumb, index, middle, ring and pinky chains of MCP, PIP, DIP, TIP.
 * Each of the 15 non-root, non-tip joints owns three axis-angle DoF expressed in its parent's
 * frame. The global rotation pivots about the wrist, so the wrist always sits at the global
 * translation.
 *
 * The built-in model is a simplified stand-in with MANO-compatible parameter shapes: a capsule
 * mesh of 778 vertices and a linear bone-length shape basis.
 */
namespace handfit {

inline constexpr int kJointCount = 21;
inline constexpr int kArticulatedJointCount = 15;
inline constexpr int kArticulationDim = 45;
inline constexpr int kPoseDim = 51;
inline constexpr int kShapeDim = 10;
inline constexpr int kParamDim = kPoseDim + kShapeDim;
inline constexpr int kTemplateVertexCount = 778;

// offsets into the stacked parameter vector [articulation, global rotation, translation, beta]
inline constexpr int kGlobalRotationOffset = 45;
inline constexpr int kTranslationOffset = 48;
inline constexpr int kShapeOffset = 51;

enum class Handedness { right, left };

inline std::string to_string(Handedness h) { return h == Handedness::right ? "right" : "left"; }

using ShapeVector = Eigen::Matrix<double, kShapeDim, 1>;
using ArticulationVector = Eigen::Matrix<double, kArticulationDim, 1>;
using PoseVector = Eigen::Matrix<double, kPoseDim, 1>;
using ParamVector = Eigen::Matrix<double, kParamDim, 1>;

struct HandShape {
    ShapeVector beta = ShapeVector::Zero();

    bool operator==(const HandShape&) const = default;
};

struct HandPose {
    ArticulationVector articulation = ArticulationVector::Zero();
    Vec3 global_rotation = Vec3::Zero();
    Vec3 global_translation = Vec3::Zero();

    PoseVector to_vector() const
    {
        PoseVector v;
        v << articulation, global_rotation, global_translation;
        return v;
    }

    static HandPose from_vector(const PoseVector& v)
    {
        HandPose p;
        p.articulation = v.head<kArticulationDim>();
        p.global_rotation = v.segment<3>(kGlobalRotationOffset);
        p.global_translation = v.segment<3>(kTranslationOffset);
        return p;
    }

    bool operator==(const HandPose&) const = default;
};

inline ParamVector stack_params(const HandShape& shape, const HandPose& pose)
{
    ParamVector x;
    x << pose.to_vector(), shape.beta;
    return x;
}

struct JointSet {
    std::array<Vec3, kJointCount> joints;

    JointSet() { joints.fill(Vec3::Zero()); }

    Vec3& operator[](std::size_t i) { return joints[i]; }
    const Vec3& operator[](std::size_t i) const { return joints[i]; }
    const Vec3& wrist() const { return joints[0]; }

    bool operator==(const JointSet&) const = default;
};

struct Skeleton {
    std::array<int, kJointCount> parent{};
    /// offset of each joint from its parent in the rest pose (meters), root offset is zero
    std::array<Vec3, kJointCount> rest_offsets{};
    /// DoF slot (0..14) of each articulated joint, -1 for the root and fingertips
    std::array<int, kJointCount> articulated_index{};
    /// row 3*j + axis: change of rest_offsets[j] per unit of each shape coefficient
    Eigen::Matrix<double, 3 * kJointCount, kShapeDim> shape_basis = Eigen::Matrix<double, 3 * kJointCount, kShapeDim>::Zero();

    Eigen::Matrix<double, 3, kShapeDim> offset_basis(int j) const { return shape_basis.block<3, kShapeDim>(3 * j, 0); }
};

using SkinningWeights = Eigen::Matrix<double, Eigen::Dynamic, kJointCount, Eigen::RowMajor>;

struct HandMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    SkinningWeights skinning_weights;
};

struct JointLimits {
    ArticulationVector lower = ArticulationVector::Zero();
    ArticulationVector upper = ArticulationVector::Zero();

    ArticulationVector mid() const { return 0.5 * (lower + upper); }
};

struct HandModel {
    Handedness handedness = Handedness::right;
    Skeleton skeleton;
    HandMesh mesh;
    JointLimits limits;
};

namespace detail {

    inline bool is_ancestor_or_self(const Skeleton& s, int a, int j)
    {
        for (int k = j; k >= 0; k = s.parent[k]) {
            if (k == a) {
                return true;
            }
        }
        return false;
    }

} // namespace detail

/// Throws AssetContractViolation naming the first broken invariant.
inline void validate_model(const HandModel& m)
{
    auto fail = [](const std::string& what) { throw Error(Errc::asset_contract_violation, what); };
    const auto& s = m.skeleton;
    if (s.parent[0] != -1) {
        fail("joint 0 must be the root");
    }
    std::array<int, kJointCount> children{};
    for (int j = 1; j < kJointCount; ++j) {
        if (s.parent[j] < 0 || s.parent[j] >= j) {
            fail("parent of joint " + std::to_string(j) + " must precede it");
        }
        ++children[s.parent[j]];
    }
    std::array<bool, kArticulatedJointCount> used{};
    for (int j = 0; j < kJointCount; ++j) {
        const int slot = s.articulated_index[j];
        const bool leaf = children[j] == 0;
        if (j == 0 || leaf) {
            if (slot != -1) {
                fail("root and fingertips carry no DoF (joint " + std::to_string(j) + ")");
            }
            continue;
        }
        if (slot < 0 || slot >= kArticulatedJointCount || used[slot]) {
            fail("invalid articulation slot for joint " + std::to_string(j));
        }
        used[slot] = true;
    }
    for (bool u : used) {
        if (!u) {
            fail("expected exactly 15 articulated joints");
        }
    }
    if (!s.shape_basis.allFinite()) {
        fail("shape basis must be finite");
    }
    const auto& mesh = m.mesh;
    const auto nv = static_cast<Eigen::Index>(mesh.vertices.size());
    if (nv == 0 || mesh.skinning_weights.rows() != nv) {
        fail("skinning weights need one row per vertex");
    }
    for (Eigen::Index v = 0; v < nv; ++v) {
        if (!mesh.vertices[v].allFinite()) {
            fail("vertex " + std::to_string(v) + " is not finite");
        }
        const auto row = mesh.skinning_weights.row(v);
        if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > 1e-6) {
            fail("skinning row " + std::to_string(v) + " is not stochastic");
        }
    }
    for (const auto& t : mesh.triangles) {
        for (int i : t) {
            if (i < 0 || i >= nv) {
                fail("triangle index out of range");
            }
        }
    }
    if ((m.limits.lower.array() > m.limits.upper.array()).any()) {
        fail("joint limits require lower <= upper");
    }
}

/// Rest-pose joint positions for a shape (wrist at the origin).
inline std::array<Vec3, kJointCount> rest_joints(const Skeleton& s, const HandShape& shape)
{
    std::array<Vec3, kJointCount> out;
    out[0] = s.rest_offsets[0] + s.offset_basis(0) * shape.beta;
    for (int j = 1; j < kJointCount; ++j) {
        out[j] = out[s.parent[j]] + s.rest_offsets[j] + s.offset_basis(j) * shape.beta;
    }
    return out;
}

/// World rotation and position of every joint frame.
struct JointFrames {
    std::array<Mat3, kJointCount> rotation;
    std::array<Vec3, kJointCount> position;
};

inline JointFrames pose_frames(const Skeleton& s, const HandShape& shape, const HandPose& pose)
{
    JointFrames f;
    f.rotation[0] = axis_angle_to_matrix(pose.global_rotation);
    f.position[0] = pose.global_translation;
    for (int j = 1; j < kJointCount; ++j) {
        const int p = s.parent[j];
        const Vec3 offset = s.rest_offsets[j] + s.offset_basis(j) * shape.beta;
        f.position[j] = f.position[p] + f.rotation[p] * offset;
        const int slot = s.articulated_index[j];
        f.rotation[j] = slot >= 0 ? Mat3(f.rotation[p] * axis_angle_to_matrix(pose.articulation.segment<3>(3 * slot)))
                                  : f.rotation[p];
    }
    return f;
}

inline JointSet forward_kinematics(const Skeleton& skeleton, const HandShape& shape, const HandPose& pose)
{
    const auto frames = pose_frames(skeleton, shape, pose);
    JointSet out;
    out.joints = frames.position;
    return out;
}

namespace detail {

    struct Influence {
        int bone;
        double weight;
    };

    inline std::vector<std::vector<Influence>> influences(const SkinningWeights& w)
    {
        std::vector<std::vector<Influence>> out(static_cast<std::size_t>(w.rows()));
        for (Eigen::Index v = 0; v < w.rows(); ++v) {
            for (int b = 0; b < kJointCount; ++b) {
                if (w(v, b) != 0.0) {
                    out[v].push_back({b, w(v, b)});
                }
            }
        }
        return out;
    }

    /// d(rest joint)/d(beta), accumulated along the tree
    inline std::array<Eigen::Matrix<double, 3, kShapeDim>, kJointCount> rest_joint_basis(const Skeleton& s)
    {
        std::array<Eigen::Matrix<double, 3, kShapeDim>, kJointCount> out;
        out[0] = s.offset_basis(0);
        for (int j = 1; j < kJointCount; ++j) {
            out[j] = out[s.parent[j]] + s.offset_basis(j);
        }
        return out;
    }

} // namespace detail

/// Template vertices carried along with the rest-pose joints when the shape changes:
/// v(beta) = v + sum_b w_b (J_b(beta) - J_b(0)).
inline std::vector<Vec3> shaped_template(const Skeleton& s, const HandMesh& mesh, const HandShape& shape)
{
    const auto rest = rest_joints(s, shape);
    const auto rest0 = rest_joints(s, HandShape{});
    std::vector<Vec3> out(mesh.vertices.size());
    for (std::size_t v = 0; v < out.size(); ++v) {
        Vec3 d = Vec3::Zero();
        for (int b = 0; b < kJointCount; ++b) {
            const double w = mesh.skinning_weights(static_cast<Eigen::Index>(v), b);
            if (w != 0.0) {
                d += w * (rest[b] - rest0[b]);
            }
        }
        out[v] = mesh.vertices[v] + d;
    }
    return out;
}

/// Linear blend skinning of the template; triangles and weights are copied unchanged.
inline HandMesh skin_mesh(const Skeleton& skeleton, const HandMesh& mesh_template, const HandShape& shape, const HandPose& pose)
{
    const auto frames = pose_frames(skeleton, shape, pose);
    const auto rest = rest_joints(skeleton, shape);
    const auto shaped = shaped_template(skeleton, mesh_template, shape);
    HandMesh out;
    out.triangles = mesh_template.triangles;
    out.skinning_weights = mesh_template.skinning_weights;
    out.vertices.resize(shaped.size());
    for (std::size_t v = 0; v < shaped.size(); ++v) {
        Vec3 acc = Vec3::Zero();
        for (int b = 0; b < kJointCount; ++b) {
            const double w = mesh_template.skinning_weights(static_cast<Eigen::Index>(v), b);
            if (w != 0.0) {
                acc += w * (frames.rotation[b] * (shaped[v] - rest[b]) + frames.position[b]);
            }
        }
        out.vertices[v] = acc;
    }
    return out;
}

/**
 * Joints and vertices with their analytic Jacobians w.r.t. the stacked parameter vector
 * [articulation(45), global rotation(3), translation(3), beta(10)].
 *
 * Jacobian rows are 3*index + axis. Rotational columns use world-frame angular velocity vectors
 * of each joint frame, so a point p rigidly attached below joint a moves by
 * omega_{a,k} x (p - joint_a) per unit change of that DoF.
 */
struct HandEvaluation {
    JointSet joints;
    std::vector<Vec3> vertices;
    Eigen::Matrix<double, 3 * kJointCount, kParamDim> joint_jacobian;
    Eigen::Matrix<double, Eigen::Dynamic, kParamDim> vertex_jacobian;
};

class HandEvaluator {
public:
    explicit HandEvaluator(const HandModel& model)
        : model_(&model)
        , influences_(detail::influences(model.mesh.skinning_weights))
        , rest_basis_(detail::rest_joint_basis(model.skeleton))
    {
        const auto& s = model.skeleton;
        for (int j = 0; j < kJointCount; ++j) {
            for (int a = 0; a < kJointCount; ++a) {
                ancestor_or_self_[j][a] = detail::is_ancestor_or_self(s, a, j);
            }
        }
        rest0_ = rest_joints(s, HandShape{});
        vertex_shape_basis_.resize(model.mesh.vertices.size());
        for (std::size_t v = 0; v < influences_.size(); ++v) {
            Eigen::Matrix<double, 3, kShapeDim> b = Eigen::Matrix<double, 3, kShapeDim>::Zero();
            for (const auto& inf : influences_[v]) {
                b += inf.weight * rest_basis_[inf.bone];
            }
            vertex_shape_basis_[v] = b;
        }
    }

    const HandModel& model() const { return *model_; }
    std::size_t vertex_count() const { return model_->mesh.vertices.size(); }

    HandEvaluation operator()(const HandShape& shape, const HandPose& pose, bool with_vertices, bool with_jacobian) const
    {
        const auto& s = model_->skeleton;
        const auto frames = pose_frames(s, shape, pose);

        HandEvaluation out;
        out.joints.joints = frames.position;

        std::array<Vec3, kJointCount> rest;
        for (int j = 0; j < kJointCount; ++j) {
            rest[j] = rest0_[j] + rest_basis_[j] * shape.beta;
        }

        // angular velocity vectors of every rotational DoF, and their pivots
        std::array<std::array<Vec3, 3>, kArticulatedJointCount> omega;
        std::array<Vec3, 3> omega_global;
        std::array<Eigen::Matrix<double, 3, kShapeDim>, kJointCount> dpos_dbeta;
        if (with_jacobian) {
            const Mat3 rg = frames.rotation[0];
            omega_global = axis_angle_derivatives(pose.global_rotation, rg);
            for (int j = 1; j < kJointCount; ++j) {
                const int slot = s.articulated_index[j];
                if (slot < 0) {
                    continue;
                }
                const Vec3 w = pose.articulation.segment<3>(3 * slot);
                const auto local = axis_angle_derivatives(w, axis_angle_to_matrix(w));
                for (int k = 0; k < 3; ++k) {
                    omega[slot][k] = frames.rotation[s.parent[j]] * local[k];
                }
            }
            dpos_dbeta[0] = frames.rotation[0] * s.offset_basis(0);
            for (int j = 1; j < kJointCount; ++j) {
                dpos_dbeta[j] = dpos_dbeta[s.parent[j]] + frames.rotation[s.parent[j]] * s.offset_basis(j);
            }

            auto& jj = out.joint_jacobian;
            jj.setZero();
            for (int j = 0; j < kJointCount; ++j) {
                const Vec3& pj = frames.position[j];
                for (int a = 1; a < kJointCount; ++a) {
                    const int slot = s.articulated_index[a];
                    if (slot < 0 || a == j || !ancestor_or_self_[j][a]) {
                        continue;
                    }
                    for (int k = 0; k < 3; ++k) {
                        jj.block<3, 1>(3 * j, 3 * slot + k) = omega[slot][k].cross(pj - frames.position[a]);
                    }
                }
                for (int k = 0; k < 3; ++k) {
                    jj.block<3, 1>(3 * j, kGlobalRotationOffset + k) = omega_global[k].cross(pj - frames.position[0]);
                }
                jj.block<3, 3>(3 * j, kTranslationOffset) = Mat3::Identity();
                jj.block<3, kShapeDim>(3 * j, kShapeOffset) = dpos_dbeta[j];
            }
        }

        if (!with_vertices) {
            return out;
        }

        const auto& tmpl = model_->mesh.vertices;
        const std::size_t nv = tmpl.size();
        out.vertices.resize(nv);
        if (with_jacobian) {
            out.vertex_jacobian.setZero(3 * static_cast<Eigen::Index>(nv), kParamDim);
        }
        for (std::size_t v = 0; v < nv; ++v) {
            const Vec3 shaped = tmpl[v] + (vertex_shape_basis_[v] * shape.beta);
            Vec3 acc = Vec3::Zero();
            for (const auto& inf : influences_[v]) {
                const int b = inf.bone;
                const Vec3 q = frames.rotation[b] * (shaped - rest[b]) + frames.position[b];
                acc += inf.weight * q;
                if (!with_jacobian) {
                    continue;
                }
                auto jac = out.vertex_jacobian.middleRows<3>(3 * static_cast<Eigen::Index>(v));
                for (int a = 1; a < kJointCount; ++a) {
                    const int slot = s.articulated_index[a];
                    if (slot < 0 || !ancestor_or_self_[b][a]) {
                        continue;
                    }
                    const Vec3 arm = q - frames.position[a];
                    for (int k = 0; k < 3; ++k) {
                        jac.col(3 * slot + k) += inf.weight * omega[slot][k].cross(arm);
                    }
                }
                const Vec3 arm = q - frames.position[0];
                for (int k = 0; k < 3; ++k) {
                    jac.col(kGlobalRotationOffset + k) += inf.weight * omega_global[k].cross(arm);
                }
                jac.middleCols<kShapeDim>(kShapeOffset)
                    += inf.weight * (frames.rotation[b] * (vertex_shape_basis_[v] - rest_basis_[b]) + dpos_dbeta[b]);
            }
            if (with_jacobian) {
                out.vertex_jacobian.block<3, 3>(3 * static_cast<Eigen::Index>(v), kTranslationOffset) = Mat3::Identity();
            }
            out.vertices[v] = acc;
        }
        return out;
    }

private:
    const HandModel* model_;
    std::vector<std::vector<detail::Influence>> influences_;
    std::array<Eigen::Matrix<double, 3, kShapeDim>, kJointCount> rest_basis_;
    std::array<Vec3, kJointCount> rest0_;
    std::vector<Eigen::Matrix<double, 3, kShapeDim>> vertex_shape_basis_;
    std::array<std::array<bool, kJointCount>, kJointCount> ancestor_or_self_{};
};

/// Pose of the opposite hand that is the mirror image across the x = 0 plane.
inline HandPose mirror_pose(const HandPose& pose)
{
    HandPose out = pose;
    for (int slot = 0; slot < kArticulatedJointCount; ++slot) {
        out.articulation[3 * slot + 1] = -pose.articulation[3 * slot + 1];
        out.articulation[3 * slot + 2] = -pose.articulation[3 * slot + 2];
    }
    out.global_rotation = Vec3(pose.global_rotation.x(), -pose.global_rotation.y(), -pose.global_rotation.z());
    out.global_translation = Vec3(-pose.global_translation.x(), pose.global_translation.y(), pose.global_translation.z());
    return out;
}

namespace detail {

    // Right hand, rest pose: fingers along +y, palm facing +z, thumb on the +x side.
    inline constexpr std::array<std::array<double, 3>, kJointCount> kRestJoints = {{
        {0.000, 0.000, 0.000},   // wrist
        {0.024, 0.026, 0.008},   // thumb
        {0.046, 0.047, 0.016},
        {0.062, 0.066, 0.020},
        {0.073, 0.085, 0.022},
        {0.025, 0.090, 0.000},   // index
        {0.028, 0.131, 0.000},
        {0.029, 0.156, 0.000},
        {0.030, 0.176, 0.000},
        {0.005, 0.095, 0.000},   // middle
        {0.006, 0.140, 0.000},
        {0.006, 0.168, 0.000},
        {0.006, 0.190, 0.000},
        {-0.015, 0.090, 0.000},  // ring
        {-0.017, 0.130, 0.000},
        {-0.018, 0.156, 0.000},
        {-0.019, 0.176, 0.000},
        {-0.033, 0.080, 0.000},  // pinky
        {-0.037, 0.111, 0.000},
        {-0.039, 0.129, 0.000},
        {-0.041, 0.146, 0.000},
    }};

    // capsule radius at each finger joint (MCP, PIP, DIP, TIP), thumb first
    inline constexpr std::array<std::array<double, 4>, 5> kFingerRadius = {{
        {0.0120, 0.0105, 0.0095, 0.0085},
        {0.0095, 0.0085, 0.0075, 0.0068},
        {0.0098, 0.0088, 0.0078, 0.0070},
        {0.0092, 0.0082, 0.0073, 0.0066},
        {0.0082, 0.0072, 0.0064, 0.0058},
    }};

    inline constexpr int kTubeRings = 4;
    inline constexpr int kTubeSides = 8;
    inline constexpr int kPalmRings = 14;
    inline constexpr int kPalmSides = 19;

    inline void add_tube(HandMesh& mesh, std::vector<std::array<std::pair<int, double>, 2>>& weights, const Vec3& a,
                         const Vec3& c, double ra, double rc, bool tip, int bone, int parent_bone)
    {
        const Vec3 d = (c - a).normalized();
        const Vec3 helper = std::abs(d.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
        const Vec3 u = helper.cross(d).normalized();
        const Vec3 w = d.cross(u);
        const double len = (c - a).norm();
        const int base = static_cast<int>(mesh.vertices.size());

        auto blend = std::array<std::pair<int, double>, 2>{{{parent_bone, 0.5}, {bone, 0.5}}};
        auto rigid = std::array<std::pair<int, double>, 2>{{{bone, 1.0}, {bone, 0.0}}};

        mesh.vertices.push_back(a - 0.5 * ra * d);
        weights.push_back(blend);
        for (int r = 0; r < kTubeRings; ++r) {
            const double s = static_cast<double>(r) / (kTubeRings - 1);
            const double rad = (1.0 - s) * ra + s * rc;
            for (int k = 0; k < kTubeSides; ++k) {
                const double phi = 2.0 * std::numbers::pi * k / kTubeSides;
                mesh.vertices.push_back(a + s * len * d + rad * (std::cos(phi) * u + std::sin(phi) * w));
                weights.push_back(r == 0 ? blend : rigid);
            }
        }
        mesh.vertices.push_back(c + (tip ? 1.0 : 0.5) * rc * d);
        weights.push_back(rigid);

        const int first_ring = base + 1;
        const int end_pole = base + 1 + kTubeRings * kTubeSides;
        for (int k = 0; k < kTubeSides; ++k) {
            const int k1 = (k + 1) % kTubeSides;
            mesh.triangles.push_back({base, first_ring + k1, first_ring + k});
        }
        for (int r = 0; r + 1 < kTubeRings; ++r) {
            const int r0 = first_ring + r * kTubeSides;
            const int r1 = r0 + kTubeSides;
            for (int k = 0; k < kTubeSides; ++k) {
                const int k1 = (k + 1) % kTubeSides;
                mesh.triangles.push_back({r0 + k, r0 + k1, r1 + k1});
                mesh.triangles.push_back({r0 + k, r1 + k1, r1 + k});
            }
        }
        const int last_ring = first_ring + (kTubeRings - 1) * kTubeSides;
        for (int k = 0; k < kTubeSides; ++k) {
            const int k1 = (k + 1) % kTubeSides;
            mesh.triangles.push_back({end_pole, last_ring + k, last_ring + k1});
        }
    }

    inline void add_palm(HandMesh& mesh, std::vector<std::array<std::pair<int, double>, 2>>& weights)
    {
        const Vec3 center(-0.003, 0.045, 0.0);
        const Vec3 axes(0.042, 0.055, 0.013);
        const int base = static_cast<int>(mesh.vertices.size());
        const auto rigid = std::array<std::pair<int, double>, 2>{{{0, 1.0}, {0, 0.0}}};

        mesh.vertices.push_back(center - Vec3(0.0, axes.y(), 0.0));
        weights.push_back(rigid);
        for (int r = 1; r <= kPalmRings; ++r) {
            const double lat = std::numbers::pi * r / (kPalmRings + 1);
            for (int k = 0; k < kPalmSides; ++k) {
                const double lon = 2.0 * std::numbers::pi * k / kPalmSides;
                mesh.vertices.push_back(center
                    + Vec3(axes.x() * std::sin(lat) * std::cos(lon), -axes.y() * std::cos(lat),
                           axes.z() * std::sin(lat) * std::sin(lon)));
                weights.push_back(rigid);
            }
        }
        mesh.vertices.push_back(center + Vec3(0.0, axes.y(), 0.0));
        weights.push_back(rigid);

        const int first = base + 1;
        const int top = base + 1 + kPalmRings * kPalmSides;
        for (int k = 0; k < kPalmSides; ++k) {
            const int k1 = (k + 1) % kPalmSides;
            mesh.triangles.push_back({base, first + k, first + k1});
        }
        for (int r = 0; r + 1 < kPalmRings; ++r) {
            const int r0 = first + r * kPalmSides;
            const int r1 = r0 + kPalmSides;
            for (int k = 0; k < kPalmSides; ++k) {
                const int k1 = (k + 1) % kPalmSides;
                mesh.triangles.push_back({r0 + k, r1 + k, r1 + k1});
                mesh.triangles.push_back({r0 + k, r1 + k1, r0 + k1});
            }
        }
        const int last = first + (kPalmRings - 1) * kPalmSides;
        for (int k = 0; k < kPalmSides; ++k) {
            const int k1 = (k + 1) % kPalmSides;
            mesh.triangles.push_back({top, last + k1, last + k});
        }
    }

    inline Skeleton default_right_skeleton()
    {
        Skeleton s;
        s.parent[0] = -1;
        s.articulated_index.fill(-1);
        int slot = 0;
        for (int f = 0; f < 5; ++f) {
            const int base = 1 + 4 * f;
            s.parent[base] = 0;
            for (int k = 1; k < 4; ++k) {
                s.parent[base + k] = base + k - 1;
            }
            for (int k = 0; k < 3; ++k) {
                s.articulated_index[base + k] = slot++;
            }
        }
        for (int j = 0; j < kJointCount; ++j) {
            const Vec3 p(kRestJoints[j][0], kRestJoints[j][1], kRestJoints[j][2]);
            const Vec3 q = j == 0 ? Vec3::Zero()
                                  : Vec3(kRestJoints[s.parent[j]][0], kRestJoints[s.parent[j]][1], kRestJoints[s.parent[j]][2]);
            s.rest_offsets[j] = p - q;
        }

        // Shape basis: 0 overall scale, 1 palm width, 2 palm length, 3-7 per-finger length
        // (thumb..pinky), 8 distal/proximal phalanx ratio, 9 thumb base placement.
        auto& b = s.shape_basis;
        for (int j = 1; j < kJointCount; ++j) {
            b.block<3, 1>(3 * j, 0) = 0.08 * s.rest_offsets[j];
        }
        for (int f = 1; f < 5; ++f) {
            const int mcp = 1 + 4 * f;
            b(3 * mcp + 0, 1) = 0.10 * s.rest_offsets[mcp].x();
            b(3 * mcp + 1, 2) = 0.08 * s.rest_offsets[mcp].y();
        }
        for (int f = 0; f < 5; ++f) {
            const int base = 1 + 4 * f;
            for (int k = 1; k < 4; ++k) {
                b.block<3, 1>(3 * (base + k), 3 + f) = 0.07 * s.rest_offsets[base + k];
            }
            b.block<3, 1>(3 * (base + 1), 8) = -0.05 * s.rest_offsets[base + 1];
            b.block<3, 1>(3 * (base + 2), 8) = 0.04 * s.rest_offsets[base + 2];
            b.block<3, 1>(3 * (base + 3), 8) = 0.06 * s.rest_offsets[base + 3];
        }
        b.block<3, 1>(3 * 1, 9) = Vec3(0.004, -0.003, 0.003);
        return s;
    }

} // namespace detail

/// Built-in flexion / twist / abduction ranges (radians) for the (x, y, z) axis-angle components.
struct DefaultLimitRanges {
    double flexion_lower = -0.26;
    double flexion_upper = 1.92;
    double twist = 0.35;
    double abduction = 0.61;

    JointLimits limits() const
    {
        JointLimits l;
        for (int slot = 0; slot < kArticulatedJointCount; ++slot) {
            l.lower.segment<3>(3 * slot) = Vec3(flexion_lower, -twist, -abduction);
            l.upper.segment<3>(3 * slot) = Vec3(flexion_upper, twist, abduction);
        }
        return l;
    }
};

/// The other hand: reflection across the x = 0 plane (triangle winding flipped to keep
/// outward normals). Limits are unchanged since the mirrored pose negates twist and abduction.
inline HandModel mirror_model(HandModel m)
{
    for (auto& o : m.skeleton.rest_offsets) {
        o.x() = -o.x();
    }
    for (int j = 0; j < kJointCount; ++j) {
        m.skeleton.shape_basis.row(3 * j) *= -1.0;
    }
    for (auto& v : m.mesh.vertices) {
        v.x() = -v.x();
    }
    for (auto& t : m.mesh.triangles) {
        std::swap(t[1], t[2]);
    }
    m.handedness = m.handedness == Handedness::right ? Handedness::left : Handedness::right;
    return m;
}

inline HandModel build_default_model(Handedness handedness)
{
    HandModel m;
    m.handedness = Handedness::right;
    m.skeleton = detail::default_right_skeleton();
    m.limits = DefaultLimitRanges{}.limits();

    std::vector<std::array<std::pair<int, double>, 2>> weights;
    for (int f = 0; f < 5; ++f) {
        const int base = 1 + 4 * f;
        for (int k = 0; k < 3; ++k) {
            const int a = base + k;
            const auto& pa = detail::kRestJoints[a];
            const auto& pc = detail::kRestJoints[a + 1];
            detail::add_tube(m.mesh, weights, Vec3(pa[0], pa[1], pa[2]), Vec3(pc[0], pc[1], pc[2]),
                             detail::kFingerRadius[f][k], detail::kFingerRadius[f][k + 1], k == 2, a,
                             m.skeleton.parent[a]);
        }
    }
    detail::add_palm(m.mesh, weights);

    m.mesh.skinning_weights = SkinningWeights::Zero(static_cast<Eigen::Index>(weights.size()), kJointCount);
    for (std::size_t v = 0; v < weights.size(); ++v) {
        for (const auto& [bone, w] : weights[v]) {
            m.mesh.skinning_weights(static_cast<Eigen::Index>(v), bone) += w;
        }
    }
    return handedness == Handedness::left ? mirror_model(std::move(m)) : m;
}

} // namespace handfit
