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

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <span>

namespace handfit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline Mat3 skew(const Vec3& v)
{
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

/// Rodrigues' formula: rotation matrix of an axis-angle vector (radians).
inline Mat3 axis_angle_to_matrix(const Vec3& w)
{
    const double angle = w.norm();
    if (angle < 1e-12) {
        const Mat3 k = skew(w);
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

inline Vec3 matrix_to_axis_angle(const Mat3& r)
{
    const Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
}

/// World-frame angular velocities of R(w) w.r.t. each component of w, i.e. the vectors
/// a_k with dR/dw_k = skew(a_k) * R. Closed form of Gallego & Yezzi for |w| > 0, second
/// order series near the identity.
inline std::array<Vec3, 3> axis_angle_derivatives(const Vec3& w, const Mat3& r)
{
    std::array<Vec3, 3> out;
    const double theta2 = w.squaredNorm();
    if (theta2 < 1e-12) {
        // dR/dw_k R^T = skew(e_k) + 1/2 (skew(e_k) skew(w) - skew(w) skew(e_k)) + O(|w|^2)
        //             = skew(e_k + 1/2 w x e_k)
        for (int k = 0; k < 3; ++k) {
            const Vec3 e = Vec3::Unit(k);
            out[k] = e + 0.5 * w.cross(e);
        }
        return out;
    }
    const Mat3 i_minus_r = Mat3::Identity() - r;
    for (int k = 0; k < 3; ++k) {
        const Vec3 e = Vec3::Unit(k);
        // (w_k [w]x + [w x (I - R) e_k]x) / |w|^2 applied on the left of R
        out[k] = (w[k] * w + w.cross(i_minus_r * e)) / theta2;
    }
    return out;
}

/// Nearest rotation in Frobenius norm.
inline Mat3 nearest_rotation(const Mat3& m)
{
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * d * svd.matrixV().transpose();
}

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 operator()(const Vec3& p) const { return rotation * p + translation; }
};

/// Least-squares rigid map taking `from` onto `to` (Kabsch). Requires >= 3 non-collinear pairs
/// for a unique rotation; fewer return the best translation-only fit.
inline RigidTransform rigid_align(std::span<const Vec3> from, std::span<const Vec3> to)
{
    RigidTransform out;
    const auto n = static_cast<double>(from.size());
    if (from.empty()) {
        return out;
    }
    Vec3 cf = Vec3::Zero();
    Vec3 ct = Vec3::Zero();
    for (std::size_t i = 0; i < from.size(); ++i) {
        cf += from[i];
        ct += to[i];
    }
    cf /= n;
    ct /= n;
    if (from.size() >= 3) {
        Mat3 cov = Mat3::Zero();
        for (std::size_t i = 0; i < from.size(); ++i) {
            cov += (to[i] - ct) * (from[i] - cf).transpose();
        }
        out.rotation = nearest_rotation(cov);
    }
    out.translation = ct - out.rotation * cf;
    return out;
}

} // namespace handfit
