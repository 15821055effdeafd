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

#include "handfit/hand_model.hpp"
#include "handfit/text_format.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Hand model asset: whitespace-separated text, numbers in shortest round-trip form.
//
//   HANDMODEL 1
//   HANDEDNESS right|left
//   SKELETON
//   joints 21
//   <parent> <articulated_index> <offset x y z>          (21 lines)
//   shape_basis 63 10
//   <10 values>                                           (63 lines, row 3*joint + axis)
//   MESH
//   vertices <N>
//   <x y z>                                               (N lines)
//   triangles <T>
//   <i j k>                                               (T lines)
//   weights <N> 21
//   <21 values>                                           (N lines)
//   LIMITS
//   lower 45
//   <45 values>
//   upper 45
//   <45 values>
//   END
namespace handfit {

inline void save_model_asset(const std::filesystem::path& path, const HandModel& model)
{
    std::ofstream out(path);
    if (!out) {
        throw Error(Errc::io_error, "cannot write " + path.string());
    }
    const auto& s = model.skeleton;
    out << "HANDMODEL 1\n";
    out << "HANDEDNESS " << to_string(model.handedness) << "\n";
    out << "SKELETON\njoints " << kJointCount << "\n";
    for (int j = 0; j < kJointCount; ++j) {
        out << s.parent[j] << ' ' << s.articulated_index[j];
        for (int k = 0; k < 3; ++k) {
            out << ' ' << format_double(s.rest_offsets[j][k]);
        }
        out << '\n';
    }
    out << "shape_basis " << 3 * kJointCount << ' ' << kShapeDim << "\n";
    for (int r = 0; r < 3 * kJointCount; ++r) {
        for (int c = 0; c < kShapeDim; ++c) {
            out << (c ? " " : "") << format_double(s.shape_basis(r, c));
        }
        out << '\n';
    }
    const auto& m = model.mesh;
    out << "MESH\nvertices " << m.vertices.size() << "\n";
    for (const auto& v : m.vertices) {
        out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
    }
    out << "triangles " << m.triangles.size() << "\n";
    for (const auto& t : m.triangles) {
        out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
    out << "weights " << m.skinning_weights.rows() << ' ' << kJointCount << "\n";
    for (Eigen::Index v = 0; v < m.skinning_weights.rows(); ++v) {
        for (int b = 0; b < kJointCount; ++b) {
            out << (b ? " " : "") << format_double(m.skinning_weights(v, b));
        }
        out << '\n';
    }
    out << "LIMITS\nlower " << kArticulationDim << "\n";
    for (int i = 0; i < kArticulationDim; ++i) {
        out << (i ? " " : "") << format_double(model.limits.lower[i]);
    }
    out << "\nupper " << kArticulationDim << "\n";
    for (int i = 0; i < kArticulationDim; ++i) {
        out << (i ? " " : "") << format_double(model.limits.upper[i]);
    }
    out << "\nEND\n";
    if (!out) {
        throw Error(Errc::io_error, "failed writing " + path.string());
    }
}

/// Loads and validates an asset; AssetParseError for unreadable/malformed files,
/// AssetContractViolation when the data parses but breaks a model invariant.
inline HandModel load_model_asset(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::asset_parse_error, "cannot open " + path.string());
    }
    TokenReader r(in, Errc::asset_parse_error, path.string());
    HandModel model;
    r.expect("HANDMODEL");
    if (r.integer() != 1) {
        r.fail("unsupported asset version");
    }
    r.expect("HANDEDNESS");
    const auto hand = r.word();
    if (hand == "right") {
        model.handedness = Handedness::right;
    } else if (hand == "left") {
        model.handedness = Handedness::left;
    } else {
        r.fail("unknown handedness '" + hand + "'");
    }
    r.expect("SKELETON");
    r.expect("joints");
    if (r.integer() != kJointCount) {
        r.fail("expected 21 joints");
    }
    auto& s = model.skeleton;
    for (int j = 0; j < kJointCount; ++j) {
        s.parent[j] = static_cast<int>(r.integer());
        s.articulated_index[j] = static_cast<int>(r.integer());
        for (int k = 0; k < 3; ++k) {
            s.rest_offsets[j][k] = r.real();
        }
    }
    r.expect("shape_basis");
    if (r.integer() != 3 * kJointCount || r.integer() != kShapeDim) {
        r.fail("shape basis must be 63 x 10");
    }
    for (int row = 0; row < 3 * kJointCount; ++row) {
        for (int c = 0; c < kShapeDim; ++c) {
            s.shape_basis(row, c) = r.real();
        }
    }
    r.expect("MESH");
    r.expect("vertices");
    const auto nv = r.integer();
    if (nv <= 0 || nv > 10'000'000) {
        r.fail("bad vertex count");
    }
    model.mesh.vertices.resize(static_cast<std::size_t>(nv));
    for (auto& v : model.mesh.vertices) {
        for (int k = 0; k < 3; ++k) {
            v[k] = r.real();
        }
    }
    r.expect("triangles");
    const auto nt = r.integer();
    if (nt < 0 || nt > 100'000'000) {
        r.fail("bad triangle count");
    }
    model.mesh.triangles.resize(static_cast<std::size_t>(nt));
    for (auto& t : model.mesh.triangles) {
        for (auto& i : t) {
            i = static_cast<int>(r.integer());
        }
    }
    r.expect("weights");
    if (r.integer() != nv || r.integer() != kJointCount) {
        r.fail("weights must be <vertices> x 21");
    }
    model.mesh.skinning_weights.resize(nv, kJointCount);
    for (Eigen::Index v = 0; v < nv; ++v) {
        for (int b = 0; b < kJointCount; ++b) {
            model.mesh.skinning_weights(v, b) = r.real();
        }
    }
    r.expect("LIMITS");
    r.expect("lower");
    if (r.integer() != kArticulationDim) {
        r.fail("expected 45 lower limits");
    }
    for (int i = 0; i < kArticulationDim; ++i) {
        model.limits.lower[i] = r.real();
    }
    r.expect("upper");
    if (r.integer() != kArticulationDim) {
        r.fail("expected 45 upper limits");
    }
    for (int i = 0; i < kArticulationDim; ++i) {
        model.limits.upper[i] = r.real();
    }
    r.expect("END");
    validate_model(model);
    return model;
}

} // namespace handfit
