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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace handfit {

/// Median-split kd-tree over a fixed point set; exact nearest-neighbour queries.
/// Ties resolve to the lowest point index, same as a linear scan with strict `<`.
class PointIndex {
public:
    struct Neighbor {
        std::size_t index = 0;
        double distance = 0.0;
    };

    PointIndex() = default;

    explicit PointIndex(std::vector<Vec3> points)
        : points_(std::move(points))
    {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / kLeafSize + 2);
            build(0, points_.size());
        }
    }

    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    Neighbor nearest(const Vec3& q) const
    {
        if (points_.empty()) {
            throw Error(Errc::empty_cloud, "nearest-neighbour query on an empty cloud");
        }
        std::size_t best = std::numeric_limits<std::size_t>::max();
        double best_sq = std::numeric_limits<double>::infinity();
        search(0, q, best, best_sq);
        return {best, std::sqrt(best_sq)};
    }

private:
    static constexpr std::size_t kLeafSize = 8;

    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        int axis = -1; // -1 = leaf
        double split = 0.0;
        int left = -1;
        int right = -1;
    };

    int build(std::size_t begin, std::size_t end)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) {
            return id;
        }
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis = 0;
        (hi - lo).maxCoeff(&axis);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
        const double split = points_[order_[mid]][axis];
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(int id, const Vec3& q, std::size_t& best, double& best_sq) const
    {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.axis < 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const std::size_t idx = order_[i];
                const double d = (points_[idx] - q).squaredNorm();
                if (d < best_sq || (d == best_sq && idx < best)) {
                    best_sq = d;
                    best = idx;
                }
            }
            return;
        }
        const double diff = q[n.axis] - n.split;
        const int near = diff < 0.0 ? n.left : n.right;
        const int far = diff < 0.0 ? n.right : n.left;
        search(near, q, best, best_sq);
        if (diff * diff <= best_sq) {
            search(far, q, best, best_sq);
        }
    }

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace handfit
