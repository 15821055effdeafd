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

const HandModel& model()
{
    static const HandModel m = build_default_model(Handedness::right);
    return m;
}

const HandEvaluator& evaluator()
{
    static const HandEvaluator e(model());
    return e;
}

Errc error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return Errc::usage_error;
}

CameraRig one_camera_rig(int n = 1)
{
    CameraRig rig;
    for (int c = 0; c < n; ++c) {
        rig.cameras.push_back(simple_camera());
        rig.cameras.back().weight = 1.0 / n;
    }
    return rig;
}

// joints spread in front of an identity camera
JointSet frontal_joints()
{
    JointSet j;
    for (int i = 0; i < kJointCount; ++i) {
        j[i] = Vec3(0.01 * (i % 5) - 0.02, 0.01 * (i / 5) - 0.02, 1.0 + 0.001 * i);
    }
    return j;
}

ViewObservation exact_view(const Camera& cam, const JointSet& joints)
{
    ViewObservation v;
    for (int i = 0; i < kJointCount; ++i) {
        v.joints2d[i] = project(cam, joints[i]);
        v.confidence[i] = 1.0;
    }
    v.mask = MaskImage(cam.intrinsics.width, cam.intrinsics.height);
    return v;
}

struct SynthFrame {
    Session session;
    SynthGroundTruth gt;

    const FrameObservation& obs(std::size_t t = 0) const { return *session.frames[t].hand(Handedness::right); }
};

SynthFrame synth(std::uint64_t seed, double joint_noise, double cloud_noise, int frames = 1, int views = 2)
{
    SynthConfig c;
    c.frames = frames;
    c.views = views;
    c.seed = seed;
    c.joint_noise_px = joint_noise;
    c.cloud_noise_m = cloud_noise;
    auto [s, g] = generate_session(c, model());
    return {std::move(s), std::move(g)};
}

double brute_nearest(const std::vector<Vec3>& cloud, const Vec3& q)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud) {
        best = std::min(best, (p - q).norm());
    }
    return best;
}

} // namespace

TEST(MaskDistanceField, MatchesBruteForceOnRandomMasks)
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 64);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        MaskImage m(dim(rng), dim(rng));
        const double density = 0.002 + 0.2 * u(rng) * u(rng);
        for (int y = 0; y < m.height; ++y) {
            for (int x = 0; x < m.width; ++x) {
                if (u(rng) < density) {
                    m.set(x, y);
                }
            }
        }
        if (m.count_nonzero() == 0) {
            m.set(m.width / 2, m.height / 2);
        }
        const MaskDistanceField f(m);
        ASSERT_FALSE(f.empty());
        for (int y = 0; y < m.height; ++y) {
            for (int x = 0; x < m.width; ++x) {
                const double expected = brute_force_mask_sq_distance(m, x, y);
                ASSERT_EQ(f.squared_distance(x, y), expected) << trial << " at " << x << "," << y;
                ASSERT_EQ(f.distance(Vec2(x, y)), std::sqrt(expected));
                const int n = f.nearest(x, y);
                const int nx = n % m.width;
                const int ny = n / m.width;
                ASSERT_TRUE(m.at(nx, ny));
                ASSERT_EQ(double((nx - x) * (nx - x) + (ny - y) * (ny - y)), expected);
            }
        }
    }
}

TEST(MaskDistanceField, EmptyMaskIsFlagged)
{
    const MaskImage m(10, 7);
    EXPECT_TRUE(MaskDistanceField(m).empty());
}

TEST(PointIndex, MatchesBruteForceOnRandomClouds)
{
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> count(1, 500);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Vec3> cloud(static_cast<std::size_t>(count(rng)));
        for (auto& p : cloud) {
            p = Vec3(u(rng), u(rng), u(rng));
        }
        if (trial % 10 == 0) {
            cloud.push_back(cloud.front()); // duplicates
        }
        const PointIndex index(cloud);
        for (int q = 0; q < 50; ++q) {
            const Vec3 query = 1.5 * Vec3(u(rng), u(rng), u(rng));
            const auto nn = index.nearest(query);
            ASSERT_NEAR(nn.distance, brute_nearest(cloud, query), 1e-12);
            ASSERT_NEAR((cloud[nn.index] - query).norm(), nn.distance, 1e-12);
        }
    }
}

TEST(PointIndex, EmptyCloudQueryThrows)
{
    const PointIndex index;
    EXPECT_EQ(error_of([&] { index.nearest(Vec3::Zero()); }), Errc::empty_cloud);
}

TEST(EJ2d, ExactDetectionsGiveZero)
{
    const auto rig = one_camera_rig();
    const auto joints = frontal_joints();
    FrameObservation f;
    f.views.push_back(exact_view(rig[0], joints));
    EXPECT_EQ(e_j2d(rig, joints, f), 0.0);
}

TEST(EJ2d, SingleDisplacedJoint)
{
    const auto rig = one_camera_rig();
    const auto joints = frontal_joints();
    FrameObservation f;
    f.views.push_back(exact_view(rig[0], joints));
    f.views[0].joints2d[7] += Vec2(3.0, 4.0);
    EXPECT_NEAR(e_j2d(rig, joints, f), 5.0, 1e-12);
}

TEST(EJ2d, TwoHalfWeightedViews)
{
    const auto rig = one_camera_rig(2);
    const auto joints = frontal_joints();
    FrameObservation f;
    f.views.push_back(exact_view(rig[0], joints));
    f.views.push_back(exact_view(rig[1], joints));
    f.views[0].joints2d[3] += Vec2(3.0, 4.0);
    f.views[1].joints2d[3] += Vec2(-4.0, 3.0);
    EXPECT_NEAR(e_j2d(rig, joints, f), 5.0, 1e-12);
}

TEST(EJ2d, ConfidenceWeightsAndBehindCameraPenalty)
{
    const auto rig = one_camera_rig();
    auto joints = frontal_joints();
    FrameObservation f;
    f.views.push_back(exact_view(rig[0], joints));
    f.views[0].joints2d[2] += Vec2(3.0, 4.0);
    f.views[0].confidence[2] = 0.5;
    joints[9].z() = -0.5;
    EXPECT_NEAR(e_j2d(rig, joints, f), 2.5 + kBehindCameraPenaltyPx, 1e-9);
}

TEST(EJ2d, AllConfidencesZeroThrows)
{
    const auto rig = one_camera_rig();
    const auto joints = frontal_joints();
    FrameObservation f;
    f.views.push_back(exact_view(rig[0], joints));
    f.views[0].confidence.fill(0.0);
    EXPECT_EQ(error_of([&] { e_j2d(rig, joints, f); }), Errc::no_valid_observations);
}

TEST(EMask, VerticesOnMaskGiveZero)
{
    const auto rig = one_camera_rig();
    const auto joints = frontal_joints();
    MaskImage m(101, 101);
    std::vector<Vec3> verts(joints.joints.begin(), joints.joints.end());
    for (const auto& v : verts) {
        const Vec2 p = project(rig[0], v);
        m.set(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())));
    }
    // snap vertices to the pixel centers they mark
    for (auto& v : verts) {
        const Vec2 p = project(rig[0], v);
        v = unproject(rig[0], Vec2(std::round(p.x()), std::round(p.y())), 1.0);
    }
    const std::vector<MaskDistanceField> fields{MaskDistanceField(m)};
    EXPECT_NEAR(e_mask(rig, verts, fields), 0.0, 1e-9);
}

TEST(EMask, AxisAlignedThreePixelOffset)
{
    const auto rig = one_camera_rig();
    MaskImage m(101, 101);
    m.set(50, 50);
    const std::vector<MaskDistanceField> fields{MaskDistanceField(m)};
    const std::vector<Vec3> verts{Vec3(0.03, 0.0, 1.0)}; // projects to (53, 50)
    EXPECT_NEAR(e_mask(rig, verts, fields), 3.0, 1e-12);
}

TEST(EMask, EmptyMaskThrows)
{
    const auto rig = one_camera_rig();
    const std::vector<MaskDistanceField> fields{MaskDistanceField(MaskImage(101, 101))};
    const std::vector<Vec3> verts{Vec3(0.0, 0.0, 1.0)};
    EXPECT_EQ(error_of([&] { e_mask(rig, verts, fields); }), Errc::empty_mask);
}

TEST(EJ3d, Examples)
{
    const auto joints = frontal_joints();
    TriangulatedJoints t;
    t.joints = joints;
    t.valid.fill(true);
    EXPECT_EQ(e_j3d(joints, t), 0.0);
    t.joints[4].y() += 0.001;
    EXPECT_NEAR(e_j3d(joints, t), 0.001, 1e-15);
    t.joints[5].x() += 1.0;
    t.valid[5] = false; // skipped
    EXPECT_NEAR(e_j3d(joints, t), 0.001, 1e-15);
    t.valid.fill(false);
    EXPECT_EQ(error_of([&] { e_j3d(joints, t); }), Errc::no_valid_joints);
}

TEST(EMesh, Examples)
{
    const auto j = frontal_joints();
    std::vector<Vec3> verts(j.joints.begin(), j.joints.end());
    EXPECT_EQ(e_mesh(verts, PointIndex(verts)), 0.0);
    auto cloud = verts;
    cloud[6] += Vec3(0.0, 0.0, 0.002);
    EXPECT_NEAR(e_mesh(verts, PointIndex(cloud)), 0.002, 1e-15);
    EXPECT_EQ(error_of([&] { e_mesh(verts, PointIndex{}); }), Errc::empty_cloud);
}

TEST(EReg, Examples)
{
    const auto& lim = model().limits;
    HandPose p;
    p.articulation = lim.mid();
    p.global_rotation = Vec3(5.0, -4.0, 3.0);
    p.global_translation = Vec3(10.0, 0.0, 0.0);
    EXPECT_EQ(e_reg(p, lim), 0.0);
    p.articulation[7] = lim.upper[7] + 0.1;
    EXPECT_NEAR(e_reg(p, lim), 0.1, 1e-12);
    p.articulation = lim.mid();
    p.articulation[30] = lim.lower[30] - 0.05;
    EXPECT_NEAR(e_reg(p, lim), 0.05, 1e-12);
}

TEST(EReg, NondecreasingWithUnitSlopeOutside)
{
    const auto& lim = model().limits;
    for (int i = 0; i < kArticulationDim; ++i) {
        HandPose p;
        p.articulation = lim.mid();
        double prev = 0.0;
        for (int k = 0; k <= 40; ++k) {
            p.articulation[i] = lim.mid()[i] + 0.05 * k;
            const double e = e_reg(p, lim);
            EXPECT_GE(e, prev);
            if (p.articulation[i] > lim.upper[i]) {
                EXPECT_NEAR(e, p.articulation[i] - lim.upper[i], 1e-12);
            }
            prev = e;
        }
        prev = 0.0;
        for (int k = 0; k <= 40; ++k) {
            p.articulation[i] = lim.mid()[i] - 0.05 * k;
            const double e = e_reg(p, lim);
            EXPECT_GE(e, prev);
            if (p.articulation[i] < lim.lower[i]) {
                EXPECT_NEAR(e, lim.lower[i] - p.articulation[i], 1e-12);
            }
            prev = e;
        }
    }
}

TEST(EShape, Examples)
{
    HandShape s;
    EXPECT_EQ(e_shape(s), 0.0);
    s.beta[0] = 1.0;
    EXPECT_EQ(e_shape(s), 1.0);
    s.beta[1] = 1.0;
    EXPECT_EQ(e_shape(s), 2.0);
}

TEST(TotalObjective, AllWeightsZeroIsZero)
{
    const auto s = synth(21, 2.0, 0.003);
    const PreparedFrame frame(s.obs(), s.session.rig);
    std::mt19937_64 rng(1);
    const EnergyWeights zero{0, 0, 0, 0, 0, 0};
    for (bool shape_free : {false, true}) {
        const auto o = total_objective(random_shape(rng), random_pose(rng, model().limits), shape_free, frame,
                                       s.session.rig, evaluator(), zero, model().limits);
        EXPECT_EQ(o.total, 0.0);
    }
}

TEST(TotalObjective, EqualsSumOfIndependentTerms)
{
    const auto s = synth(22, 2.0, 0.003);
    const auto& rig = s.session.rig;
    const auto& obs = s.obs();
    const PreparedFrame frame(obs, rig);
    std::vector<MaskDistanceField> fields;
    for (const auto& v : obs.views) {
        fields.emplace_back(v.mask);
    }
    const PointIndex cloud(obs.cloud);
    const auto tri = triangulate_joints(rig, obs);
    std::mt19937_64 rng(2);
    const EnergyWeights ones{1, 1, 1, 1, 1, 1};
    for (int trial = 0; trial < 5; ++trial) {
        const auto shape = random_shape(rng);
        auto pose = s.gt.frames[0].pose;
        for (int i = 0; i < kArticulationDim; ++i) {
            pose.articulation[i] += 0.3 * (std::uniform_real_distribution<double>(-1, 1)(rng));
        }
        const auto joints = forward_kinematics(model().skeleton, shape, pose);
        const auto verts = skin_mesh(model().skeleton, model().mesh, shape, pose).vertices;
        const double expected = e_j2d(rig, joints, obs) + e_mask(rig, verts, fields) + e_j3d(joints, tri)
            + e_mesh(verts, cloud) + e_reg(pose, model().limits);
        const auto o = total_objective(shape, pose, false, frame, rig, evaluator(), ones, model().limits);
        EXPECT_NEAR(o.total, expected, 1e-12 * std::max(1.0, expected));
        EXPECT_EQ(o.breakdown.status_of(Term::shape), TermStatus::inactive);
        const auto free = total_objective(shape, pose, true, frame, rig, evaluator(), ones, model().limits);
        EXPECT_NEAR(free.total, expected + e_shape(shape), 1e-12 * std::max(1.0, expected));
    }
}

TEST(TotalObjective, LinearInEachWeightAndNonnegative)
{
    const auto s = synth(23, 2.0, 0.003);
    const auto& rig = s.session.rig;
    const PreparedFrame frame(s.obs(), rig);
    std::mt19937_64 rng(3);
    const EnergyWeights base;
    for (int trial = 0; trial < 5; ++trial) {
        const auto shape = random_shape(rng);
        auto pose = random_pose(rng, model().limits, -0.3); // allow limit violations
        pose.global_translation = s.gt.frames[0].pose.global_translation;
        const auto o = total_objective(shape, pose, true, frame, rig, evaluator(), base, model().limits);
        EXPECT_GE(o.total, 0.0);
        for (auto t : kAllTerms) {
            EXPECT_GE(o.breakdown[t], 0.0);
            EnergyWeights w = base;
            double* slot = nullptr;
            switch (t) {
            case Term::j2d: slot = &w.j2d; break;
            case Term::mask: slot = &w.mask; break;
            case Term::j3d: slot = &w.j3d; break;
            case Term::mesh: slot = &w.mesh; break;
            case Term::reg: slot = &w.reg; break;
            case Term::shape: slot = &w.shape; break;
            }
            *slot += 2.5;
            const auto o2 = total_objective(shape, pose, true, frame, rig, evaluator(), w, model().limits);
            EXPECT_NEAR(o2.total - o.total, 2.5 * o.breakdown[t], 1e-9 * std::max(1.0, o2.total)) << to_string(t);
        }
    }
}

TEST(TotalObjective, ZeroAtTruthOnNoiselessFrames)
{
    for (std::uint64_t seed : {31u, 32u, 33u}) {
        const auto s = synth(seed, 0.0, 0.0);
        const auto& rig = s.session.rig;
        const auto& obs = s.obs();
        const auto& truth = s.gt.frames[0];
        const auto joints = forward_kinematics(model().skeleton, truth.shape, truth.pose);
        EXPECT_LT(e_j2d(rig, joints, obs), 1e-9);
        EXPECT_LT(e_j3d(joints, triangulate_joints(rig, obs)), 1e-9);

        std::vector<MaskDistanceField> fields;
        for (const auto& v : obs.views) {
            fields.emplace_back(v.mask);
        }
        double alpha = 0.0;
        for (const auto& c : rig.cameras) {
            alpha += c.weight;
        }
        const auto n = static_cast<double>(truth.vertices.size());
        EXPECT_LE(e_mask(rig, truth.vertices, fields), 0.5 * n * alpha);

        // mean spacing of an area-uniform sample
        double area = 0.0;
        for (const auto& t : model().mesh.triangles) {
            const auto& v = truth.vertices;
            area += 0.5 * (v[t[1]] - v[t[0]]).cross(v[t[2]] - v[t[0]]).norm();
        }
        const double spacing = std::sqrt(area / static_cast<double>(obs.cloud.size()));
        EXPECT_LE(e_mesh(truth.vertices, PointIndex(obs.cloud)), spacing * n);
    }
}

TEST(TotalObjective, RegOnlyRaisesAllTermsDropped)
{
    const auto s = synth(24, 0.0, 0.0);
    const PreparedFrame frame(s.obs(), s.session.rig);
    const EnergyWeights reg_only{0, 0, 0, 0, 1, 0};
    HandPose p;
    p.articulation = model().limits.mid();
    EXPECT_EQ(error_of([&] {
                  total_objective(HandShape{}, p, false, frame, s.session.rig, evaluator(), reg_only, model().limits);
              }),
              Errc::all_terms_dropped);
}

TEST(TotalObjective, UnusableTermsAreDroppedAndFlagged)
{
    const auto s = synth(25, 0.0, 0.0);
    auto obs = s.obs();
    obs.cloud.clear();
    for (auto& v : obs.views) {
        v.mask = MaskImage(v.mask.width, v.mask.height);
    }
    const PreparedFrame frame(obs, s.session.rig);
    const auto o = total_objective(HandShape{}, s.gt.frames[0].pose, false, frame, s.session.rig, evaluator(),
                                   EnergyWeights{}, model().limits);
    EXPECT_EQ(o.breakdown.status_of(Term::mesh), TermStatus::dropped);
    EXPECT_EQ(o.breakdown.drop_reason[static_cast<std::size_t>(Term::mesh)], Errc::empty_cloud);
    EXPECT_EQ(o.breakdown.status_of(Term::mask), TermStatus::dropped);
    EXPECT_EQ(o.breakdown.drop_reason[static_cast<std::size_t>(Term::mask)], Errc::empty_mask);
    EXPECT_EQ(o.breakdown.status_of(Term::j2d), TermStatus::active);
    EXPECT_EQ(o.breakdown[Term::mesh], 0.0);
    EXPECT_EQ(o.breakdown.dropped().size(), 2u);

    for (auto& v : obs.views) {
        v.confidence.fill(0.0);
    }
    const PreparedFrame none(obs, s.session.rig);
    EXPECT_EQ(error_of([&] {
                  total_objective(HandShape{}, s.gt.frames[0].pose, false, none, s.session.rig, evaluator(),
                                  EnergyWeights{}, model().limits);
              }),
              Errc::all_terms_dropped);
}

TEST(GradTotal, RegGradientVanishesInsideLimits)
{
    const auto s = synth(26, 2.0, 0.003);
    const PreparedFrame frame(s.obs(), s.session.rig);
    std::mt19937_64 rng(6);
    EnergyWeights with = EnergyWeights{};
    EnergyWeights without = with;
    without.reg = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const auto shape = random_shape(rng);
        auto pose = random_pose(rng, model().limits, 0.01);
        const auto a = grad_total(shape, pose, true, frame, s.session.rig, evaluator(), with, model().limits);
        const auto b = grad_total(shape, pose, true, frame, s.session.rig, evaluator(), without, model().limits);
        EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(GradTotal, MatchesFiniteDifferencesAwayFromKinks)
{
    std::mt19937_64 rng(7);
    const auto& lim = model().limits;
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = synth(100 + trial, 2.0, 0.003);
        const PreparedFrame frame(s.obs(), s.session.rig);
        const auto& truth = s.gt.frames[0];
        HandShape shape = truth.shape;
        HandPose pose = truth.pose;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < kShapeDim; ++i) {
            shape.beta[i] += 0.2 * u(rng);
        }
        for (int i = 0; i < kArticulationDim; ++i) {
            pose.articulation[i] += 0.1 * u(rng);
            // keep clear of the limit kinks by 1e-4
            const double lo = lim.lower[i], hi = lim.upper[i];
            double& a = pose.articulation[i];
            if (std::abs(a - lo) < 1e-4) {
                a = lo + 2e-4;
            }
            if (std::abs(a - hi) < 1e-4) {
                a = hi - 2e-4;
            }
        }
        for (int k = 0; k < 3; ++k) {
            pose.global_rotation[k] += 0.05 * u(rng);
            pose.global_translation[k] += 0.005 * u(rng);
        }
        const auto g = grad_total(shape, pose, true, frame, s.session.rig, evaluator(), EnergyWeights{}, lim);
        const auto fd = grad_total_numeric(shape, pose, true, frame, s.session.rig, evaluator(), EnergyWeights{}, lim, 1e-5);
        const double rel = (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff();
        EXPECT_LT(rel, 1e-3) << "trial " << trial;
    }
}

TEST(Energy, FreeDimensionFollowsShapeFlag)
{
    const auto s = synth(27, 0.0, 0.0);
    const PreparedFrame frame(s.obs(), s.session.rig);
    const Energy fixed(s.session.rig, evaluator(), frame, EnergyWeights{}, model().limits, false);
    const Energy free(s.session.rig, evaluator(), frame, EnergyWeights{}, model().limits, true);
    EXPECT_EQ(fixed.free_dim(), kPoseDim);
    EXPECT_EQ(free.free_dim(), kParamDim);
    EXPECT_FALSE(fixed.active(Term::shape));
    EXPECT_TRUE(free.active(Term::shape));
}

TEST(Energy, LinearizationObjectiveMatchesEvaluate)
{
    const auto s = synth(28, 2.0, 0.003);
    const PreparedFrame frame(s.obs(), s.session.rig);
    const Energy e(s.session.rig, evaluator(), frame, EnergyWeights{}, model().limits, true);
    const auto& truth = s.gt.frames[0];
    const auto lin = e.linearize(truth.shape, truth.pose);
    const auto obj = e.evaluate(truth.shape, truth.pose);
    EXPECT_NEAR(lin.objective.total, obj.total, 1e-12 * std::max(1.0, obj.total));
    EXPECT_TRUE(lin.hessian.isApprox(lin.hessian.transpose()));
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lin.hessian).eigenvalues().minCoeff(), -1e-9 * lin.hessian.norm());
}
