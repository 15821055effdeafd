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

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

/**
 * Pinhole multi-camera geometry.
 *
 * Conventions: extrinsics are camera-from-world (x_cam = R * x_world + t), pixel centers
 * sit at integer coordinates, and there is no lens distortion.
 */
namespace handfit {

inline constexpr double kMinDepth = 1e-9;

struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    Mat3 matrix() const
    {
        Mat3 k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    bool valid() const
    {
        return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width && cy >= 0.0
            && cy < height;
    }
};

struct Extrinsics {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
    Vec3 center() const { return -rotation.transpose() * translation; }

    bool valid(double tol = 1e-9) const
    {
        return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol
            && std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
    }
};

/// `outer` applied after `inner`: camera-from-world of (outer o inner).
inline Extrinsics compose(const Extrinsics& outer, const Extrinsics& inner)
{
    return {outer.rotation * inner.rotation, outer.rotation * inner.translation + outer.translation};
}

/// Camera looking from `eye` towards `target`, image y axis roughly along -`up`.
inline Extrinsics look_at(const Vec3& eye, const Vec3& target, const Vec3& up)
{
    const Vec3 z = (target - eye).normalized();
    const Vec3 x = z.cross(-up).normalized();
    const Vec3 y = z.cross(x);
    Extrinsics e;
    e.rotation.row(0) = x.transpose();
    e.rotation.row(1) = y.transpose();
    e.rotation.row(2) = z.transpose();
    e.translation = -e.rotation * eye;
    return e;
}

struct Camera {
    Intrinsics intrinsics;
    Extrinsics extrinsics;
    double weight = 1.0; // per-view weight alpha_c
};

struct CameraRig {
    std::vector<Camera> cameras;

    std::size_t size() const { return cameras.size(); }
    const Camera& operator[](std::size_t i) const { return cameras[i]; }
    Camera& operator[](std::size_t i) { return cameras[i]; }

    void validate() const
    {
        if (cameras.empty()) {
            throw Error(Errc::validation_error, "camera rig is empty");
        }
        for (std::size_t c = 0; c < cameras.size(); ++c) {
            const auto& cam = cameras[c];
            if (!cam.intrinsics.valid()) {
                throw Error(Errc::validation_error, "camera " + std::to_string(c) + ": invalid intrinsics");
            }
            if (!cam.extrinsics.valid()) {
                throw Error(Errc::validation_error, "camera " + std::to_string(c) + ": rotation is not orthonormal");
            }
            if (!(cam.weight >= 0.0) || !std::isfinite(cam.weight)) {
                throw Error(Errc::validation_error, "camera " + std::to_string(c) + ": negative weight");
            }
        }
    }
};

inline Vec2 project(const Camera& camera, const Vec3& point)
{
    const Vec3 pc = camera.extrinsics.to_camera(point);
    if (!(pc.z() > kMinDepth)) {
        throw Error(Errc::non_positive_depth, "point lies behind or on the camera plane");
    }
    const auto& k = camera.intrinsics;
    return {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
}

/// Projection together with its Jacobian w.r.t. the world point. Returns nullopt instead
/// of throwing when the point is not in front of the camera.
inline std::optional<Vec2> project(const Camera& camera, const Vec3& point, Eigen::Matrix<double, 2, 3>& jacobian)
{
    const Vec3 pc = camera.extrinsics.to_camera(point);
    if (!(pc.z() > kMinDepth)) {
        return std::nullopt;
    }
    const auto& k = camera.intrinsics;
    const double iz = 1.0 / pc.z();
    Eigen::Matrix<double, 2, 3> dpc;
    dpc << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz,
           0.0, k.fy * iz, -k.fy * pc.y() * iz * iz;
    jacobian = dpc * camera.extrinsics.rotation;
    return Vec2(k.fx * pc.x() * iz + k.cx, k.fy * pc.y() * iz + k.cy);
}

/// Inverse of `project` for a known camera-frame depth.
inline Vec3 unproject(const Camera& camera, const Vec2& pixel, double depth)
{
    const auto& k = camera.intrinsics;
    const Vec3 pc((pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth, depth);
    return camera.extrinsics.rotation.transpose() * (pc - camera.extrinsics.translation);
}

namespace detail {

    inline Eigen::Matrix<double, 3, 4> normalized_projection(const Extrinsics& e)
    {
        Eigen::Matrix<double, 3, 4> p;
        p.leftCols<3>() = e.rotation;
        p.col(3) = e.translation;
        return p;
    }

    inline Vec2 normalize_pixel(const Intrinsics& k, const Vec2& px)
    {
        return {(px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy};
    }

} // namespace detail

/**
 * Triangulates one point from the views that observed it (nullopt = not observed).
 *
 * Homogeneous DLT on normalized image coordinates, followed by a single Gauss-Newton step on
 * the pixel reprojection error. Exact for noiseless, consistent observations.
 */
inline Vec3 triangulate(const CameraRig& rig, std::span<const std::optional<Vec2>> observations)
{
    std::vector<std::size_t> views;
    for (std::size_t c = 0; c < observations.size() && c < rig.size(); ++c) {
        if (observations[c]) {
            views.push_back(c);
        }
    }
    if (views.size() < 2) {
        throw Error(Errc::insufficient_views, "triangulation needs at least two observations");
    }

    Eigen::MatrixXd a(2 * views.size(), 4);
    for (std::size_t r = 0; r < views.size(); ++r) {
        const auto& cam = rig[views[r]];
        const Vec2 x = detail::normalize_pixel(cam.intrinsics, *observations[views[r]]);
        const auto p = detail::normalized_projection(cam.extrinsics);
        Eigen::RowVector4d r0 = x.x() * p.row(2) - p.row(0);
        Eigen::RowVector4d r1 = x.y() * p.row(2) - p.row(1);
        a.row(2 * r) = r0 / r0.norm();
        a.row(2 * r + 1) = r1 / r1.norm();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(2) <= 1e-10 * sv(0)) {
        throw Error(Errc::degenerate_geometry, "observation rays are parallel or coincident");
    }
    const Eigen::Vector4d h = svd.matrixV().col(3);
    if (std::abs(h(3)) <= 1e-12 * h.head<3>().norm()) {
        throw Error(Errc::degenerate_geometry, "triangulated point is at infinity");
    }
    Vec3 x = h.head<3>() / h(3);

    // one Gauss-Newton step on geometric reprojection error
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Vec3 jtr = Vec3::Zero();
    for (auto c : views) {
        Eigen::Matrix<double, 2, 3> j;
        const auto px = project(rig[c], x, j);
        if (!px) {
            return x;
        }
        const Vec2 r = *px - *observations[c];
        jtj += j.transpose() * j;
        jtr += j.transpose() * r;
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(jtj);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Vec3 step = ldlt.solve(jtr);
        if (step.allFinite()) {
            x -= step;
        }
    }
    return x;
}

struct Correspondence {
    Vec3 world;
    Vec2 pixel;
};

namespace detail {

    inline double reprojection_cost(const Intrinsics& k, const Extrinsics& e, std::span<const Correspondence> pts)
    {
        Camera cam{k, e, 1.0};
        double cost = 0.0;
        for (const auto& c : pts) {
            Eigen::Matrix<double, 2, 3> j;
            const auto px = project(cam, c.world, j);
            if (!px) {
                return std::numeric_limits<double>::infinity();
            }
            cost += (*px - c.pixel).squaredNorm();
        }
        return cost;
    }

} // namespace detail

/**
 * Camera-from-world pose from >= 6 known 3D points and their pixels.
 *
 * The DLT estimate (on centered/scaled world points and normalized pixels) has its rotation
 * block projected onto SO(3), then Gauss-Newton on the reprojection error runs until the
 * relative cost change drops below 1e-10 or 50 iterations.
 */
inline Extrinsics solve_pnp(const Intrinsics& intrinsics, std::span<const Correspondence> correspondences)
{
    const std::size_t n = correspondences.size();
    if (n < 6) {
        throw Error(Errc::insufficient_points, "PnP needs at least 6 correspondences, got " + std::to_string(n));
    }

    Vec3 centroid = Vec3::Zero();
    for (const auto& c : correspondences) {
        centroid += c.world;
    }
    centroid /= static_cast<double>(n);
    Mat3 cov = Mat3::Zero();
    for (const auto& c : correspondences) {
        cov += (c.world - centroid) * (c.world - centroid).transpose();
    }
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    const Vec3 ev = eig.eigenvalues();
    if (!(ev(2) > 0.0) || ev(0) <= 1e-9 * ev(2)) {
        throw Error(Errc::degenerate_configuration, "world points are coplanar or collinear");
    }
    const double scale = std::sqrt(ev.sum() / 3.0);

    Eigen::MatrixXd a(2 * n, 12);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 xw = (correspondences[i].world - centroid) / scale;
        const Eigen::RowVector4d h(xw.x(), xw.y(), xw.z(), 1.0);
        const Vec2 x = detail::normalize_pixel(intrinsics, correspondences[i].pixel);
        a.row(2 * i) << h, Eigen::RowVector4d::Zero(), -x.x() * h;
        a.row(2 * i + 1) << Eigen::RowVector4d::Zero(), h, -x.y() * h;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd p = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> proj;
    proj << p.segment<4>(0).transpose(), p.segment<4>(4).transpose(), p.segment<4>(8).transpose();

    // undo the world normalization: x_n = (x - c) / s
    Mat3 m = proj.leftCols<3>() / scale;
    Vec3 tv = proj.col(3) - m * centroid;
    const double det = m.determinant();
    const double s = std::cbrt(det);
    m /= s;
    tv /= s;

    Extrinsics pose;
    pose.rotation = nearest_rotation(m);
    pose.translation = tv;
    // the DLT null vector is defined up to sign; points must end up in front of the camera
    if ((pose.rotation * centroid + pose.translation).z() < 0.0) {
        pose.rotation = nearest_rotation(-m);
        pose.translation = -tv;
    }

    double cost = detail::reprojection_cost(intrinsics, pose, correspondences);
    for (int iter = 0; iter < 50; ++iter) {
        Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
        for (const auto& c : correspondences) {
            const Vec3 pc = pose.to_camera(c.world);
            if (!(pc.z() > kMinDepth)) {
                throw Error(Errc::degenerate_configuration, "PnP estimate places a point behind the camera");
            }
            const double iz = 1.0 / pc.z();
            Eigen::Matrix<double, 2, 3> dpc;
            dpc << intrinsics.fx * iz, 0.0, -intrinsics.fx * pc.x() * iz * iz,
                   0.0, intrinsics.fy * iz, -intrinsics.fy * pc.y() * iz * iz;
            // left-multiplied rotation increment: d(pc) = -[R x]_x dw + dt
            Eigen::Matrix<double, 3, 6> dp;
            dp.leftCols<3>() = -skew(pose.rotation * c.world);
            dp.rightCols<3>() = Mat3::Identity();
            const Eigen::Matrix<double, 2, 6> j = dpc * dp;
            const Vec2 r = Vec2(intrinsics.fx * pc.x() * iz + intrinsics.cx, intrinsics.fy * pc.y() * iz + intrinsics.cy)
                - c.pixel;
            jtj += j.transpose() * j;
            jtr += j.transpose() * r;
        }
        const Eigen::Matrix<double, 6, 1> step = jtj.ldlt().solve(-jtr);
        if (!step.allFinite()) {
            break;
        }
        Extrinsics next;
        next.rotation = axis_angle_to_matrix(step.head<3>()) * pose.rotation;
        next.translation = pose.translation + step.tail<3>();
        const double next_cost = detail::reprojection_cost(intrinsics, next, correspondences);
        if (!(next_cost <= cost)) {
            break;
        }
        const double change = cost - next_cost;
        pose = next;
        const double prev = cost;
        cost = next_cost;
        if (prev <= 0.0 || change <= 1e-10 * prev) {
            break;
        }
    }
    pose.rotation = nearest_rotation(pose.rotation);
    return pose;
}

} // namespace handfit
