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

#include "handfit/session.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace handfit {

struct SynthConfig {
    int frames = 20;
    int views = 2;
    std::uint64_t seed = 0;
    double joint_noise_px = 0.0;
    double cloud_noise_m = 0.0;
    int cloud_points = 2000;
    double motion_scale = 0.01; // radians per frame per articulation DoF
    double dropout_rate = 0.0;
    Handedness hand = Handedness::right;
    std::optional<int> cloud_visible_from; // keep only cloud points visible from this view
    int image_size = 256;
    double focal = 250.0;
    double ring_radius = 0.5;
    double ring_elevation = 0.2;

    void validate() const
    {
        const bool ok = frames >= 1 && views >= 1 && joint_noise_px >= 0.0 && cloud_noise_m >= 0.0 && cloud_points >= 0
            && motion_scale >= 0.0 && dropout_rate >= 0.0 && dropout_rate <= 1.0 && image_size >= 2 && focal > 0.0
            && ring_radius > 0.0 && (!cloud_visible_from || (*cloud_visible_from >= 0 && *cloud_visible_from < views));
        if (!ok) {
            throw Error(Errc::validation_error, "invalid synthetic session configuration");
        }
    }
};

struct SynthFrameTruth {
    HandShape shape;
    HandPose pose;
    JointSet joints;
    std::vector<Vec3> vertices;
};

struct SynthGroundTruth {
    Handedness hand = Handedness::right;
    std::vector<SynthFrameTruth> frames;
};

/// Per-pixel depth of the nearest surface (infinity where nothing projects). Triangles with a
/// vertex at depth <= kMinDepth are skipped; a pixel center on an edge counts as inside.
inline std::vector<double> render_depth(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles,
                                        const Camera& camera)
{
    const int w = camera.intrinsics.width;
    const int h = camera.intrinsics.height;
    std::vector<double> depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), std::numeric_limits<double>::infinity());
    const auto& k = camera.intrinsics;
    for (const auto& tri : triangles) {
        std::array<Vec2, 3> p;
        std::array<double, 3> z{};
        bool visible = true;
        for (int i = 0; i < 3; ++i) {
            const Vec3 c = camera.extrinsics.to_camera(vertices[static_cast<std::size_t>(tri[i])]);
            if (c.z() <= kMinDepth) {
                visible = false;
                break;
            }
            z[i] = c.z();
            p[i] = Vec2(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
        }
        if (!visible) {
            continue;
        }
        const double area = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
        const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].x(), p[1].x(), p[2].x()}))));
        const int x1 = std::min(w - 1, static_cast<int>(std::floor(std::max({p[0].x(), p[1].x(), p[2].x()}))));
        const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({p[0].y(), p[1].y(), p[2].y()}))));
        const int y1 = std::min(h - 1, static_cast<int>(std::floor(std::max({p[0].y(), p[1].y(), p[2].y()}))));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec2 q(x, y);
                std::array<double, 3> e{};
                for (int i = 0; i < 3; ++i) {
                    const Vec2 a = p[static_cast<std::size_t>((i + 1) % 3)];
                    const Vec2 b = p[static_cast<std::size_t>((i + 2) % 3)];
                    e[static_cast<std::size_t>(i)] = (b - a).x() * (q - a).y() - (b - a).y() * (q - a).x();
                }
                const bool inside = (e[0] >= 0 && e[1] >= 0 && e[2] >= 0) || (e[0] <= 0 && e[1] <= 0 && e[2] <= 0);
                if (!inside) {
                    continue;
                }
                // screen-space barycentrics interpolate inverse depth
                double zq = std::min({z[0], z[1], z[2]});
                if (area != 0.0) {
                    const double inv = (e[0] / z[0] + e[1] / z[1] + e[2] / z[2]) / area;
                    if (inv > 0.0) {
                        zq = 1.0 / inv;
                    }
                }
                auto& d = depth[static_cast<std::size_t>(y) * w + x];
                d = std::min(d, zq);
            }
        }
    }
    return depth;
}

/// Silhouette of a posed mesh: 255 where any triangle covers the pixel center.
inline MaskImage rasterize_mask(const HandMesh& posed, const Camera& camera)
{
    const auto depth = render_depth(posed.vertices, posed.triangles, camera);
    MaskImage mask(camera.intrinsics.width, camera.intrinsics.height);
    for (std::size_t i = 0; i < depth.size(); ++i) {
        mask.pixels[i] = std::isfinite(depth[i]) ? 255 : 0;
    }
    return mask;
}

/// Area-uniform surface samples plus isotropic Gaussian noise. `source_triangles`, when given,
/// receives the triangle each sample was drawn from.
inline std::vector<Vec3> sample_point_cloud(const HandMesh& posed, int n, double noise_m, std::uint64_t seed,
                                            std::vector<std::size_t>* source_triangles = nullptr)
{
    std::vector<Vec3> out;
    if (source_triangles) {
        source_triangles->clear();
    }
    if (n <= 0 || posed.triangles.empty()) {
        return out;
    }
    std::vector<double> areas;
    areas.reserve(posed.triangles.size());
    for (const auto& t : posed.triangles) {
        const Vec3& a = posed.vertices[static_cast<std::size_t>(t[0])];
        const Vec3& b = posed.vertices[static_cast<std::size_t>(t[1])];
        const Vec3& c = posed.vertices[static_cast<std::size_t>(t[2])];
        areas.push_back(0.5 * (b - a).cross(c - a).norm());
    }
    std::mt19937_64 rng(seed);
    std::discrete_distribution<std::size_t> pick(areas.begin(), areas.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const std::size_t ti = pick(rng);
        const auto& t = posed.triangles[ti];
        const double s = std::sqrt(unit(rng));
        const double r = unit(rng);
        Vec3 p = (1.0 - s) * posed.vertices[static_cast<std::size_t>(t[0])] + s * (1.0 - r) * posed.vertices[static_cast<std::size_t>(t[1])]
            + s * r * posed.vertices[static_cast<std::size_t>(t[2])];
        if (noise_m > 0.0) {
            const double gx = gauss(rng);
            const double gy = gauss(rng);
            const double gz = gauss(rng);
            p += noise_m * Vec3(gx, gy, gz);
        }
        out.push_back(p);
        if (source_triangles) {
            source_triangles->push_back(ti);
        }
    }
    return out;
}

/// Cameras on a horizontal ring around `center` (world up = +y), all looking at it. View 0 sits
/// on +z; two views are 90 degrees apart, three or more are spread evenly.
inline CameraRig make_ring_rig(int views, const Vec3& center, const SynthConfig& config)
{
    CameraRig rig;
    const double c = 0.5 * (config.image_size - 1);
    for (int k = 0; k < views; ++k) {
        const double phi = views == 2 ? 0.5 * std::numbers::pi * k : 2.0 * std::numbers::pi * k / views;
        const double el = config.ring_elevation;
        const Vec3 eye = center
            + config.ring_radius * Vec3(std::sin(phi) * std::cos(el), std::sin(el), std::cos(phi) * std::cos(el));
        Camera cam;
        cam.intrinsics = Intrinsics{config.focal, config.focal, c, c, config.image_size, config.image_size};
        cam.extrinsics = look_at(eye, center, Vec3::UnitY());
        cam.weight = 1.0 / views;
        rig.cameras.push_back(cam);
    }
    return rig;
}

namespace detail {

    inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                          static_cast<std::uint32_t>(index >> 32)};
        std::array<std::uint32_t, 2> v{};
        seq.generate(v.begin(), v.end());
        return (static_cast<std::uint64_t>(v[0]) << 32) | v[1];
    }

    // Folds x back into [lo, hi] by mirror reflection at the bounds.
    inline double reflect(double x, double lo, double hi)
    {
        if (hi <= lo) {
            return lo;
        }
        const double span = hi - lo;
        double t = std::fmod(x - lo, 2.0 * span);
        if (t < 0.0) {
            t += 2.0 * span;
        }
        return t <= span ? lo + t : hi - (t - span);
    }

} // namespace detail

/// Deterministic synthetic capture of one hand: trajectory, rig, per-view observations and the
/// generating parameters.
inline std::pair<Session, SynthGroundTruth> generate_session(const SynthConfig& config, const HandModel& model)
{
    config.validate();
    const auto& lim = model.limits;

    SynthGroundTruth gt;
    gt.hand = config.hand;
    {
        std::mt19937_64 rng(detail::derive_seed(config.seed, 0, 0));
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        HandShape shape;
        for (int i = 0; i < kShapeDim; ++i) {
            shape.beta[i] = unit(rng);
        }
        HandPose pose;
        for (int i = 0; i < kArticulationDim; ++i) {
            pose.articulation[i] = lim.lower[i] + (lim.upper[i] - lim.lower[i]) * u01(rng);
        }
        for (int k = 0; k < 3; ++k) {
            pose.global_rotation[k] = 0.4 * unit(rng);
        }
        for (int k = 0; k < 3; ++k) {
            pose.global_translation[k] = 0.02 * unit(rng);
        }
        for (int t = 0; t < config.frames; ++t) {
            if (t > 0) {
                std::mt19937_64 step(detail::derive_seed(config.seed, 1, static_cast<std::uint64_t>(t)));
                const double m = config.motion_scale;
                for (int i = 0; i < kArticulationDim; ++i) {
                    pose.articulation[i] = detail::reflect(pose.articulation[i] + m * unit(step), lim.lower[i], lim.upper[i]);
                }
                for (int k = 0; k < 3; ++k) {
                    pose.global_rotation[k] += 0.5 * m * unit(step);
                }
                for (int k = 0; k < 3; ++k) {
                    pose.global_translation[k] += 0.1 * m * unit(step);
                }
            }
            const auto posed = skin_mesh(model.skeleton, model.mesh, shape, pose);
            gt.frames.push_back({shape, pose, forward_kinematics(model.skeleton, shape, pose), posed.vertices});
        }
    }

    Vec3 center = Vec3::Zero();
    for (const auto& j : gt.frames[0].joints.joints) {
        center += j;
    }
    center /= kJointCount;

    Session session;
    session.rig = make_ring_rig(config.views, center, config);
    session.frames.resize(static_cast<std::size_t>(config.frames));
    HandMesh posed = model.mesh;
    for (int t = 0; t < config.frames; ++t) {
        const auto& truth = gt.frames[static_cast<std::size_t>(t)];
        posed.vertices = truth.vertices;
        std::mt19937_64 rng(detail::derive_seed(config.seed, 2, static_cast<std::uint64_t>(t)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::bernoulli_distribution drop(config.dropout_rate);

        FrameObservation obs;
        for (const auto& cam : session.rig.cameras) {
            ViewObservation view;
            for (int i = 0; i < kJointCount; ++i) {
                const bool dropped = drop(rng);
                const double nx = gauss(rng);
                const double ny = gauss(rng);
                Eigen::Matrix<double, 2, 3> j;
                const auto px = project(cam, truth.joints[i], j);
                if (dropped || !px) {
                    view.joints2d[i] = Vec2::Zero();
                    view.confidence[i] = 0.0;
                    continue;
                }
                view.joints2d[i] = *px + config.joint_noise_px * Vec2(nx, ny);
                view.confidence[i] = 1.0;
            }
            view.mask = rasterize_mask(posed, cam);
            obs.views.push_back(std::move(view));
        }
        obs.cloud = sample_point_cloud(posed, config.cloud_points, config.cloud_noise_m,
                                       detail::derive_seed(config.seed, 3, static_cast<std::uint64_t>(t)));
        if (config.cloud_visible_from) {
            const auto& cam = session.rig[static_cast<std::size_t>(*config.cloud_visible_from)];
            const auto depth = render_depth(posed.vertices, posed.triangles, cam);
            std::vector<Vec3> kept;
            for (const auto& p : obs.cloud) {
                const Vec3 c = cam.extrinsics.to_camera(p);
                if (c.z() <= kMinDepth) {
                    continue;
                }
                const auto& k = cam.intrinsics;
                const long x = std::lround(k.fx * c.x() / c.z() + k.cx);
                const long y = std::lround(k.fy * c.y() / c.z() + k.cy);
                if (x < 0 || y < 0 || x >= k.width || y >= k.height) {
                    continue;
                }
                if (c.z() <= depth[static_cast<std::size_t>(y) * k.width + static_cast<std::size_t>(x)] + 2e-3) {
                    kept.push_back(p);
                }
            }
            obs.cloud = std::move(kept);
        }
        session.frames[static_cast<std::size_t>(t)].hand(config.hand) = std::move(obs);
    }
    return {std::move(session), std::move(gt)};
}

} // namespace handfit
