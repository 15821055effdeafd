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

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace handfit;
using namespace handfit::testing;

namespace {

Errc code_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected a handfit::Error";
    return Errc::usage_error;
}

Camera camera_at(const Vec3& eye, const Vec3& target)
{
    Camera c = simple_camera(500.0, 320.0, 640);
    c.intrinsics.cy = 240.0;
    c.intrinsics.height = 480;
    c.extrinsics = look_at(eye, target, Vec3::UnitY());
    return c;
}

} // namespace

TEST(Project, OpticalAxisHitsPrincipalPoint)
{
    const auto px = project(simple_camera(), Vec3(0, 0, 1));
    EXPECT_DOUBLE_EQ(px.x(), 50.0);
    EXPECT_DOUBLE_EQ(px.y(), 50.0);
}

TEST(Project, LateralOffsetScalesByFocal)
{
    const auto px = project(simple_camera(), Vec3(0.1, 0, 1));
    EXPECT_DOUBLE_EQ(px.x(), 60.0);
    EXPECT_DOUBLE_EQ(px.y(), 50.0);
}

TEST(Project, BehindCameraIsRejected)
{
    EXPECT_EQ(code_of([] { project(simple_camera(), Vec3(0, 0, -1)); }), Errc::non_positive_depth);
    EXPECT_EQ(code_of([] { project(simple_camera(), Vec3(0.3, 0, 0)); }), Errc::non_positive_depth);
}

TEST(Project, JacobianMatchesFiniteDifferences)
{
    std::mt19937_64 rng(3);
    Camera cam = simple_camera();
    cam.extrinsics.rotation = random_rotation(rng);
    cam.extrinsics.translation = Vec3(0.1, -0.2, 2.0);
    const Vec3 p(0.05, 0.02, -0.03);
    Eigen::Matrix<double, 2, 3> j;
    const auto px = project(cam, p, j);
    ASSERT_TRUE(px.has_value());
    for (int k = 0; k < 3; ++k) {
        Vec3 d = Vec3::Zero();
        d[k] = 1e-6;
        const Vec2 fd = (project(cam, p + d) - project(cam, p - d)) / 2e-6;
        EXPECT_NEAR((fd - j.col(k)).norm(), 0.0, 1e-5);
    }
}

TEST(Project, RoundTripThroughUnproject)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 640.0), z(0.1, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        Camera cam = camera_at(random_unit(rng) * 2.0, Vec3::Zero());
        const Vec2 px(u(rng), 0.75 * u(rng));
        const Vec3 p = unproject(cam, px, z(rng));
        EXPECT_LT((project(cam, p) - px).norm(), 1e-9);
    }
}

TEST(Project, ComposingWithIdentityIsBitwiseNeutral)
{
    std::mt19937_64 rng(5);
    Camera cam = camera_at(Vec3(0.3, 0.1, 1.0), Vec3::Zero());
    Camera same = cam;
    same.extrinsics = compose(Extrinsics{}, cam.extrinsics);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 p = 0.1 * random_unit(rng);
        const Vec2 a = project(cam, p);
        const Vec2 b = project(same, p);
        EXPECT_EQ(a.x(), b.x());
        EXPECT_EQ(a.y(), b.y());
    }
}

TEST(Triangulate, TwoViewBaselineRecoversPoint)
{
    CameraRig rig;
    rig.cameras.push_back(simple_camera());
    Camera right = simple_camera();
    right.extrinsics.translation = Vec3(-0.2, 0, 0);
    rig.cameras.push_back(right);
    const Vec3 p(0, 0, 1);
    const std::vector<std::optional<Vec2>> obs = {project(rig[0], p), project(rig[1], p)};
    EXPECT_LT((triangulate(rig, obs) - p).norm(), 1e-9);
}

TEST(Triangulate, SingleObservationIsInsufficient)
{
    CameraRig rig;
    rig.cameras.push_back(simple_camera());
    Camera right = simple_camera();
    right.extrinsics.translation = Vec3(-0.2, 0, 0);
    rig.cameras.push_back(right);
    const std::vector<std::optional<Vec2>> obs = {Vec2(50, 50), std::nullopt};
    EXPECT_EQ(code_of([&] { triangulate(rig, obs); }), Errc::insufficient_views);
}

TEST(Triangulate, CoincidentRaysAreDegenerate)
{
    CameraRig rig;
    rig.cameras = {simple_camera(), simple_camera()};
    const std::vector<std::optional<Vec2>> obs = {Vec2(55, 48), Vec2(55, 48)};
    EXPECT_EQ(code_of([&] { triangulate(rig, obs); }), Errc::degenerate_geometry);
}

TEST(Triangulate, RandomRigsAreExact)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        CameraRig rig;
        const int n = 2 + trial % 3;
        for (int c = 0; c < n; ++c) {
            rig.cameras.push_back(camera_at(random_unit(rng) * (0.5 + 0.5 * std::abs(u(rng))), Vec3::Zero()));
        }
        const Vec3 p(0.05 * u(rng), 0.05 * u(rng), 0.05 * u(rng));
        std::vector<std::optional<Vec2>> obs;
        for (const auto& c : rig.cameras) {
            obs.push_back(project(c, p));
        }
        EXPECT_LT((triangulate(rig, obs) - p).norm(), 1e-7);
    }
}

TEST(SolvePnp, ElevenNoiselessPointsRecoverPose)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    const Intrinsics k{600, 600, 320, 240, 640, 480};
    Extrinsics truth;
    truth.rotation = random_rotation(rng);
    truth.translation = Vec3(0.05, -0.02, 1.5);
    Camera cam;
    cam.intrinsics = k;
    cam.extrinsics = truth;
    std::vector<Correspondence> corr;
    while (corr.size() < 11) {
        const Vec3 c(u(rng), u(rng), 1.5 + u(rng));
        const Vec3 w = truth.rotation.transpose() * (c - truth.translation);
        corr.push_back({w, project(cam, w)});
    }
    const auto est = solve_pnp(k, corr);
    EXPECT_LT((est.rotation - truth.rotation).norm(), 1e-6);
    EXPECT_LT((est.translation - truth.translation).norm(), 1e-6);
    EXPECT_TRUE(est.valid());
}

TEST(SolvePnp, FiveCorrespondencesAreInsufficient)
{
    std::vector<Correspondence> corr(5, {Vec3(0, 0, 1), Vec2(0, 0)});
    EXPECT_EQ(code_of([&] { solve_pnp(Intrinsics{600, 600, 320, 240, 640, 480}, corr); }), Errc::insufficient_points);
}

TEST(SolvePnp, PlanarPointsAreDegenerate)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    Camera cam;
    cam.intrinsics = Intrinsics{600, 600, 320, 240, 640, 480};
    cam.extrinsics.translation = Vec3(0, 0, 1.5);
    std::vector<Correspondence> corr;
    for (int i = 0; i < 11; ++i) {
        const Vec3 w(u(rng), u(rng), 0.0);
        corr.push_back({w, project(cam, w)});
    }
    EXPECT_EQ(code_of([&] { solve_pnp(cam.intrinsics, corr); }), Errc::degenerate_configuration);
}

TEST(SolvePnp, RandomPosesAreConsistent)
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(-0.4, 0.4);
    const Intrinsics k{500, 520, 300, 250, 640, 480};
    for (int trial = 0; trial < 50; ++trial) {
        Camera cam;
        cam.intrinsics = k;
        cam.extrinsics.rotation = random_rotation(rng);
        cam.extrinsics.translation = Vec3(0.1 * u(rng), 0.1 * u(rng), 2.0);
        std::vector<Correspondence> corr;
        const int n = 6 + trial % 10;
        for (int i = 0; i < n; ++i) {
            const Vec3 c(u(rng), u(rng), 2.0 + u(rng));
            const Vec3 w = cam.extrinsics.rotation.transpose() * (c - cam.extrinsics.translation);
            corr.push_back({w, project(cam, w)});
        }
        const auto est = solve_pnp(k, corr);
        EXPECT_LT((est.rotation - cam.extrinsics.rotation).norm(), 1e-6) << "trial " << trial;
        EXPECT_LT((est.translation - cam.extrinsics.translation).norm(), 1e-6) << "trial " << trial;
    }
}

TEST(CameraRig, ValidationRejectsBadCameras)
{
    CameraRig empty;
    EXPECT_EQ(code_of([&] { empty.validate(); }), Errc::validation_error);

    CameraRig rig;
    rig.cameras.push_back(simple_camera());
    EXPECT_NO_THROW(rig.validate());
    rig.cameras[0].weight = -1.0;
    EXPECT_EQ(code_of([&] { rig.validate(); }), Errc::validation_error);
    rig.cameras[0].weight = 1.0;
    rig.cameras[0].extrinsics.rotation(0, 1) = 1e-3;
    EXPECT_EQ(code_of([&] { rig.validate(); }), Errc::validation_error);
    rig.cameras[0] = simple_camera();
    rig.cameras[0].intrinsics.cx = 200.0;
    EXPECT_EQ(code_of([&] { rig.validate(); }), Errc::validation_error);
}

TEST(Rotation, AxisAngleRoundTripAndDerivatives)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Vec3 w = random_unit(rng) * (0.01 + 3.0 * trial / 100.0);
        const Mat3 r = axis_angle_to_matrix(w);
        EXPECT_LT((r.transpose() * r - Mat3::Identity()).norm(), 1e-12);
        EXPECT_LT((matrix_to_axis_angle(r) - w).norm(), 1e-9);
        // dR/dw_k = skew(a_k) R
        const auto a = axis_angle_derivatives(w, r);
        for (int k = 0; k < 3; ++k) {
            Vec3 d = Vec3::Zero();
            d[k] = 1e-6;
            const Mat3 fd = (axis_angle_to_matrix(w + d) - axis_angle_to_matrix(w - d)) / 2e-6;
            EXPECT_LT((fd - skew(a[static_cast<std::size_t>(k)]) * r).norm(), 1e-7);
        }
    }
}
