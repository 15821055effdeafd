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

JointSet random_joints(std::mt19937_64& rng, double scale = 0.1)
{
    std::uniform_real_distribution<double> u(-scale, scale);
    JointSet j;
    for (int i = 0; i < kJointCount; ++i) {
        j[i] = Vec3(u(rng), u(rng), u(rng));
    }
    return j;
}

// exact area under the PCK step function, normalized by the range
double step_integral(const std::vector<double>& errors, double max_mm)
{
    double s = 0.0;
    for (double e : errors) {
        s += std::max(0.0, max_mm - std::max(e, 0.0));
    }
    return s / (max_mm * static_cast<double>(errors.size()));
}

std::vector<double> random_errors(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> count(1, 200);
    std::exponential_distribution<double> mag(1.0 / 20.0);
    std::vector<double> e(static_cast<std::size_t>(count(rng)));
    for (auto& x : e) {
        x = mag(rng);
    }
    return e;
}

void expect_error_code(const std::function<void()>& f, Errc code)
{
    try {
        f();
        ADD_FAILURE() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code);
    }
}

} // namespace

TEST(Mepe, IdenticalInputsGiveZero)
{
    std::mt19937_64 rng(1);
    std::vector<JointSet> a{random_joints(rng), random_joints(rng)};
    EXPECT_EQ(mepe(a, a), 0.0);
}

TEST(Mepe, SingleJointOffsetIsAveraged)
{
    std::mt19937_64 rng(2);
    const JointSet gt = random_joints(rng);
    JointSet pred = gt;
    pred[7] += Vec3(0.0, 0.005, 0.0);
    const std::vector<JointSet> p{pred}, g{gt};
    EXPECT_NEAR(mepe(p, g), 5.0 / 21.0, 1e-12);
}

TEST(Mepe, FrameCountMismatchIsRejected)
{
    std::mt19937_64 rng(3);
    const std::vector<JointSet> p{random_joints(rng)}, g{random_joints(rng), random_joints(rng)};
    expect_error_code([&] { mepe(p, g); }, Errc::shape_mismatch);
}

TEST(RootAlign, WristErrorIsZero)
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const JointSet p = random_joints(rng), g = random_joints(rng);
        const JointSet a = root_align(p, g);
        EXPECT_LT((a.wrist() - g.wrist()).norm(), 1e-15);
        for (int i = 1; i < kJointCount; ++i) {
            EXPECT_LT(((a[i] - a.wrist()) - (p[i] - p.wrist())).norm(), 1e-15);
        }
    }
}

TEST(RootAlign, AlreadyAlignedIsBitwiseUnchanged)
{
    std::mt19937_64 rng(5);
    const JointSet g = random_joints(rng);
    JointSet p = random_joints(rng);
    p[0] = g[0];
    EXPECT_EQ(root_align(p, g), p);
}

TEST(RootAlign, PureTranslationHasZeroAlignedError)
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const JointSet g = random_joints(rng);
        const Vec3 t = random_joints(rng, 1.0)[0];
        JointSet p = g;
        for (int i = 0; i < kJointCount; ++i) {
            p[i] += t;
        }
        const std::vector<JointSet> pv{p}, gv{g};
        EXPECT_LT(mepe(root_align(pv, gv), gv), 1e-12);
    }
}

TEST(RootAlign, AlignedMepeIsTranslationInvariant)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<JointSet> p{random_joints(rng), random_joints(rng)}, g{random_joints(rng), random_joints(rng)};
        const double before = mepe(root_align(p, g), g);
        const Vec3 t = random_joints(rng, 0.5)[0];
        for (auto& f : p) {
            for (int i = 0; i < kJointCount; ++i) {
                f[i] += t;
            }
        }
        EXPECT_NEAR(mepe(root_align(p, g), g), before, 1e-12);
    }
}

TEST(PckAuc, AllZeroErrorsGiveFullCurve)
{
    const std::vector<double> e(50, 0.0);
    const auto c = pck_auc(e, 50.0, 11);
    for (const auto& [tau, frac] : c.points) {
        EXPECT_EQ(frac, 1.0);
    }
    EXPECT_EQ(c.auc, 1.0);
}

TEST(PckAuc, ErrorsBeyondRangeGiveZero)
{
    const std::vector<double> e(10, 80.0);
    const auto c = pck_auc(e, 50.0, 21);
    for (const auto& [tau, frac] : c.points) {
        EXPECT_EQ(frac, 0.0);
    }
    EXPECT_EQ(c.auc, 0.0);
}

TEST(PckAuc, ConstantErrorMatchesClosedForm)
{
    const std::vector<double> e(21, 25.0);
    const int steps = 501;
    const auto c = pck_auc(e, 50.0, steps);
    EXPECT_NEAR(c.auc, 0.5, 2.0 / steps);
    ASSERT_EQ(c.points.size(), static_cast<std::size_t>(steps));
    EXPECT_EQ(c.points.front().first, 0.0);
    EXPECT_EQ(c.points.back().first, 50.0);
}

TEST(PckAuc, ThresholdsAreInclusive)
{
    const std::vector<double> e{10.0};
    const auto c = pck_auc(e, 50.0, 6);
    EXPECT_EQ(c.points[1].first, 10.0);
    EXPECT_EQ(c.points[1].second, 1.0);
    EXPECT_EQ(c.points[0].second, 0.0);
}

TEST(PckAuc, InvalidInputsAreRejected)
{
    expect_error_code([] { pck_auc(std::vector<double>{}, 50.0, 10); }, Errc::empty_errors);
    expect_error_code([] { pck_auc(std::vector<double>{1.0}, 0.0, 10); }, Errc::validation_error);
    expect_error_code([] { pck_auc(std::vector<double>{1.0}, 50.0, 1); }, Errc::validation_error);
}

TEST(PckAuc, FuzzedCurvesAreBoundedAndMonotone)
{
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> steps_dist(2, 400);
    std::uniform_real_distribution<double> max_dist(1.0, 120.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto e = random_errors(rng);
        const int steps = steps_dist(rng);
        const double max_mm = max_dist(rng);
        const auto c = pck_auc(e, max_mm, steps);
        EXPECT_GE(c.auc, 0.0);
        EXPECT_LE(c.auc, 1.0);
        for (std::size_t k = 0; k < c.points.size(); ++k) {
            EXPECT_GE(c.points[k].second, 0.0);
            EXPECT_LE(c.points[k].second, 1.0);
            if (k > 0) {
                EXPECT_GE(c.points[k].second, c.points[k - 1].second);
                EXPECT_GT(c.points[k].first, c.points[k - 1].first);
            }
        }
    }
}

TEST(PckAuc, FuzzedAreaMatchesStepIntegral)
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto e = random_errors(rng);
        const int steps = 2 + trial % 500;
        const auto c = pck_auc(e, 50.0, steps);
        // each error moves the trapezoid off the step function by at most half a cell
        EXPECT_LE(std::abs(c.auc - step_integral(e, 50.0)), 0.5 / (steps - 1) + 1e-12);
    }
}

TEST(PckAuc, DoublingStepsConverges)
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto e = random_errors(rng);
        const int steps = 2 + trial % 300;
        const double a = pck_auc(e, 80.0, steps).auc;
        const double b = pck_auc(e, 80.0, 2 * steps).auc;
        EXPECT_LT(std::abs(a - b), 2.0 / steps);
    }
}

TEST(PckAuc, ScalingErrorsUpNeverIncreasesArea)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> factor(1.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        auto e = random_errors(rng);
        const double before = pck_auc(e, 50.0, 101).auc;
        const double k = factor(rng);
        for (auto& x : e) {
            x *= k;
        }
        EXPECT_LE(pck_auc(e, 50.0, 101).auc, before);
    }
}

TEST(EvaluatePredictions, ExcludesUnannotatedFrames)
{
    std::mt19937_64 rng(12);
    std::vector<JointSet> gt{random_joints(rng), random_joints(rng), random_joints(rng)};
    std::vector<std::optional<JointSet>> pred{gt[0], std::nullopt, gt[2]};
    (*pred[2])[3] += Vec3(0.0, 0.0, 0.021);
    const auto r = evaluate_predictions(pred, gt, MetricsSettings{});
    EXPECT_EQ(r.frame_count, 2u);
    EXPECT_EQ(r.unannotated_frames, 1u);
    EXPECT_EQ(r.joint_count, 42u);
    EXPECT_NEAR(r.mepe_mm, 21.0 / 42.0, 1e-12);
    EXPECT_EQ(r.pck.points.size(), 101u);
    EXPECT_DOUBLE_EQ(r.pck.points.back().first, 50.0);
    EXPECT_DOUBLE_EQ(r.pck_ra.points.back().first, 80.0);
    EXPECT_GE(r.auc_ra, 0.0);
}

TEST(EvaluatePredictions, NothingAnnotatedIsAnError)
{
    std::mt19937_64 rng(13);
    std::vector<JointSet> gt{random_joints(rng)};
    std::vector<std::optional<JointSet>> pred{std::nullopt};
    expect_error_code([&] { evaluate_predictions(pred, gt, MetricsSettings{}); }, Errc::empty_errors);
}
