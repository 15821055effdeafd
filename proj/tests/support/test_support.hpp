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

#include "handfit/handfit.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

namespace handfit::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("handfit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 v;
    for (int k = 0; k < 3; ++k) {
        v[k] = g(rng);
    }
    return v.normalized();
}

inline Mat3 random_rotation(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> angle(0.0, 3.0);
    return axis_angle_to_matrix(random_unit(rng) * angle(rng));
}

inline Camera simple_camera(double f = 100.0, double c = 50.0, int size = 101)
{
    Camera cam;
    cam.intrinsics = Intrinsics{f, f, c, c, size, size};
    return cam;
}

/// Pose with articulation drawn uniformly from the limits shrunk by `margin` on both sides.
inline HandPose random_pose(std::mt19937_64& rng, const JointLimits& limits, double margin = 0.0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> s(-1.0, 1.0);
    HandPose p;
    for (int i = 0; i < kArticulationDim; ++i) {
        const double lo = limits.lower[i] + margin;
        const double hi = limits.upper[i] - margin;
        p.articulation[i] = lo + (hi - lo) * u(rng);
    }
    for (int k = 0; k < 3; ++k) {
        p.global_rotation[k] = 0.5 * s(rng);
        p.global_translation[k] = 0.05 * s(rng);
    }
    return p;
}

inline HandShape random_shape(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> s(-1.0, 1.0);
    HandShape b;
    for (int i = 0; i < kShapeDim; ++i) {
        b.beta[i] = s(rng);
    }
    return b;
}

/// Exhaustive squared distance from pixel (x, y) to the nearest nonzero pixel; infinity if none.
inline double brute_force_mask_sq_distance(const MaskImage& m, int x, int y)
{
    double best = std::numeric_limits<double>::infinity();
    for (int yy = 0; yy < m.height; ++yy) {
        for (int xx = 0; xx < m.width; ++xx) {
            if (m.at(xx, yy)) {
                const double dx = xx - x;
                const double dy = yy - y;
                best = std::min(best, dx * dx + dy * dy);
            }
        }
    }
    return best;
}

inline double mepe_mm(const JointSet& a, const JointSet& b)
{
    double s = 0.0;
    for (int i = 0; i < kJointCount; ++i) {
        s += (a[i] - b[i]).norm();
    }
    return 1000.0 * s / kJointCount;
}

} // namespace handfit::testing
