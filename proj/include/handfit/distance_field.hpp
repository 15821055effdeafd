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

#include "handfit/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace handfit {

/// Binary image, row-major, nonzero = hand. Pixel (x, y) is centered at coordinate (x, y).
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    MaskImage() = default;
    MaskImage(int w, int h)
        : width(w)
        , height(h)
        , pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0)
    {
    }

    bool at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool on = true) { pixels[static_cast<std::size_t>(y) * width + x] = on ? 255 : 0; }

    std::size_t count_nonzero() const
    {
        return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(), [](auto p) { return p != 0; }));
    }

    bool operator==(const MaskImage&) const = default;
};

namespace detail {

    inline constexpr double kInf = std::numeric_limits<double>::infinity();

    // Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over the finite samples of f.
    // Writes d[q] = min_p (q - p)^2 + f[p] and the minimizing p (or -1 when f is all infinite).
    inline void squared_edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& arg,
                               std::vector<int>& v, std::vector<double>& z)
    {
        const int n = static_cast<int>(f.size());
        int k = -1;
        for (int q = 0; q < n; ++q) {
            if (f[q] == kInf) {
                continue;
            }
            if (k < 0) {
                k = 0;
                v[0] = q;
                z[0] = -kInf;
                z[1] = kInf;
                continue;
            }
            double s = 0.0;
            while (true) {
                const int p = v[k];
                s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
                if (s <= z[k]) {
                    --k;
                    continue;
                }
                break;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = kInf;
        }
        if (k < 0) {
            std::fill(d.begin(), d.end(), kInf);
            std::fill(arg.begin(), arg.end(), -1);
            return;
        }
        int j = 0;
        for (int q = 0; q < n; ++q) {
            while (z[j + 1] < q) {
                ++j;
            }
            const int p = v[j];
            d[q] = double(q - p) * double(q - p) + f[p];
            arg[q] = p;
        }
    }

} // namespace detail

/**
 * Exact squared Euclidean distance transform of a mask: for every pixel the squared distance
 * (pixels^2) to the nearest nonzero pixel, plus that pixel's index. Zero on the mask itself.
 *
 * `distance()` samples the (unsquared) distance at continuous coordinates by bilinear
 * interpolation; outside the image the distance to the clamped border point is added.
 */
class MaskDistanceField {
public:
    MaskDistanceField() = default;

    explicit MaskDistanceField(const MaskImage& mask)
        : width_(mask.width)
        , height_(mask.height)
    {
        const int w = width_;
        const int h = height_;
        const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
        sq_.assign(n, detail::kInf);
        nearest_.assign(n, -1);
        dist_.assign(n, detail::kInf);
        empty_ = mask.count_nonzero() == 0;
        if (empty_ || n == 0) {
            return;
        }

        const int m = std::max(w, h);
        std::vector<double> f(static_cast<std::size_t>(m));
        std::vector<double> d(static_cast<std::size_t>(m));
        std::vector<int> arg(static_cast<std::size_t>(m));
        std::vector<int> v(static_cast<std::size_t>(m) + 1);
        std::vector<double> z(static_cast<std::size_t>(m) + 2);

        // columns: squared vertical distance to the nearest mask pixel in the same column
        std::vector<double> col_sq(n);
        std::vector<int> col_row(n);
        f.resize(static_cast<std::size_t>(h));
        d.resize(static_cast<std::size_t>(h));
        arg.resize(static_cast<std::size_t>(h));
        for (int x = 0; x < w; ++x) {
            for (int y = 0; y < h; ++y) {
                f[y] = mask.at(x, y) ? 0.0 : detail::kInf;
            }
            detail::squared_edt_1d(f, d, arg, v, z);
            for (int y = 0; y < h; ++y) {
                col_sq[index(x, y)] = d[y];
                col_row[index(x, y)] = arg[y];
            }
        }
        // rows
        f.resize(static_cast<std::size_t>(w));
        d.resize(static_cast<std::size_t>(w));
        arg.resize(static_cast<std::size_t>(w));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                f[x] = col_sq[index(x, y)];
            }
            detail::squared_edt_1d(f, d, arg, v, z);
            for (int x = 0; x < w; ++x) {
                const auto i = index(x, y);
                sq_[i] = d[x];
                const int nx = arg[x];
                nearest_[i] = nx < 0 ? -1 : static_cast<int>(index(nx, col_row[index(nx, y)]));
                dist_[i] = std::sqrt(d[x]);
            }
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return empty_; }

    double squared_distance(int x, int y) const { return sq_[index(x, y)]; }

    /// Linear index (y * width + x) of the nearest nonzero pixel, -1 for an empty mask.
    int nearest(int x, int y) const { return nearest_[index(x, y)]; }

    /// Bilinear interpolation cell (its lower-left pixel).
    struct Cell {
        int x0 = 0;
        int y0 = 0;
    };

    Cell cell_of(const Vec2& p) const
    {
        const double uc = std::clamp(p.x(), 0.0, double(width_ - 1));
        const double vc = std::clamp(p.y(), 0.0, double(height_ - 1));
        return {std::min(static_cast<int>(std::floor(uc)), std::max(width_ - 2, 0)),
                std::min(static_cast<int>(std::floor(vc)), std::max(height_ - 2, 0))};
    }

    double distance(const Vec2& p, Vec2* gradient = nullptr) const { return distance_in(cell_of(p), p, gradient); }

    /// Evaluates the bilinear patch of `cell` at `p`, extrapolating when `p` lies outside it.
    /// Points off the image add their Euclidean distance to the image rectangle.
    double distance_in(const Cell& cell, const Vec2& p, Vec2* gradient = nullptr) const
    {
        const double uc = std::clamp(p.x(), 0.0, double(width_ - 1));
        const double vc = std::clamp(p.y(), 0.0, double(height_ - 1));
        const int x0 = cell.x0;
        const int y0 = cell.y0;
        const int x1 = std::min(x0 + 1, width_ - 1);
        const int y1 = std::min(y0 + 1, height_ - 1);
        const double fx = uc - x0;
        const double fy = vc - y0;
        const double d00 = dist_[index(x0, y0)];
        const double d10 = dist_[index(x1, y0)];
        const double d01 = dist_[index(x0, y1)];
        const double d11 = dist_[index(x1, y1)];
        double value = (1.0 - fy) * ((1.0 - fx) * d00 + fx * d10) + fy * ((1.0 - fx) * d01 + fx * d11);

        Vec2 grad = Vec2::Zero();
        const bool clamped_x = uc != p.x();
        const bool clamped_y = vc != p.y();
        if (!clamped_x && x1 != x0) {
            grad.x() = (1.0 - fy) * (d10 - d00) + fy * (d11 - d01);
        }
        if (!clamped_y && y1 != y0) {
            grad.y() = (1.0 - fx) * (d01 - d00) + fx * (d11 - d10);
        }
        const Vec2 outside(p.x() - uc, p.y() - vc);
        const double out_norm = outside.norm();
        if (out_norm > 0.0) {
            value += out_norm;
            grad += outside / out_norm;
        }
        if (gradient) {
            *gradient = grad;
        }
        return value;
    }

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    bool empty_ = true;
    std::vector<double> sq_;
    std::vector<double> dist_;
    std::vector<int> nearest_;
};

} // namespace handfit
