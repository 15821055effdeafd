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

#include "handfit/fitting.hpp"
#include "handfit/metrics.hpp"
#include "handfit/session.hpp"
#include "handfit/synth.hpp"
#include "handfit/text_format.hpp"

#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

// Session directory layout
//
//   cameras.json                 [{fx, fy, cx, cy, width, height, rotation[9], translation[3], weight}, ...]
//                                rotation is row-major camera-from-world
//   session.json                 optional {"format_version": 1, "default_hand": "right"|"left"}
//   frames/NNNNNN/               six-digit frame index, contiguous from 000000
//     viewK.joints2d.csv         21 lines "u,v,confidence" (pixels; confidence in [0,1])
//     viewK.mask.pgm             binary P5, width x height of camera K, pixel values 0 or 255
//     cloud.ply                  ASCII PLY, vertex x y z (meters, world frame)
//
// Files of the default hand carry no prefix; the other hand's files are prefixed with
// "left." or "right.". A hand with no files in a frame is absent from that frame; a hand with
// some but not all of its files is a layout error.
namespace handfit {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

namespace detail {

    inline std::string frame_dir_name(std::size_t t)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%06zu", t);
        return buf;
    }

    inline Json read_json(const std::filesystem::path& path, Errc missing)
    {
        std::ifstream in(path);
        if (!in) {
            throw Error(missing, "cannot open " + path.string());
        }
        try {
            return Json::parse(in);
        } catch (const Json::exception& e) {
            throw Error(Errc::validation_error, path.string() + ": " + e.what());
        }
    }

    inline void write_text(const std::filesystem::path& path, const std::string& text)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw Error(Errc::io_error, "cannot write " + path.string());
        }
        out << text;
        if (!out) {
            throw Error(Errc::io_error, "failed writing " + path.string());
        }
    }

    inline std::string hand_prefix(Handedness hand, Handedness default_hand)
    {
        return hand == default_hand ? std::string() : to_string(hand) + ".";
    }

    template <class T>
    T json_get(const Json& j, const char* key, const std::string& where)
    {
        if (!j.is_object() || !j.contains(key)) {
            throw Error(Errc::validation_error, where + ": missing field '" + key + "'");
        }
        try {
            return j.at(key).get<T>();
        } catch (const Json::exception&) {
            throw Error(Errc::validation_error, where + ": field '" + key + "' has the wrong type");
        }
    }

    inline double finite_or_throw(double v, const std::string& where)
    {
        if (!std::isfinite(v)) {
            throw Error(Errc::validation_error, where + ": non-finite value");
        }
        return v;
    }

} // namespace detail

// ---------------------------------------------------------------------------------------------
// cameras

inline Json camera_to_json(const Camera& c)
{
    Json j;
    const auto& k = c.intrinsics;
    j["fx"] = k.fx;
    j["fy"] = k.fy;
    j["cx"] = k.cx;
    j["cy"] = k.cy;
    j["width"] = k.width;
    j["height"] = k.height;
    std::vector<double> r;
    for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) {
            r.push_back(c.extrinsics.rotation(row, col));
        }
    }
    j["rotation"] = r;
    j["translation"] = {c.extrinsics.translation.x(), c.extrinsics.translation.y(), c.extrinsics.translation.z()};
    j["weight"] = c.weight;
    return j;
}

inline Camera camera_from_json(const Json& j, const std::string& where)
{
    Camera c;
    auto& k = c.intrinsics;
    k.fx = detail::json_get<double>(j, "fx", where);
    k.fy = detail::json_get<double>(j, "fy", where);
    k.cx = detail::json_get<double>(j, "cx", where);
    k.cy = detail::json_get<double>(j, "cy", where);
    k.width = detail::json_get<int>(j, "width", where);
    k.height = detail::json_get<int>(j, "height", where);
    const auto r = detail::json_get<std::vector<double>>(j, "rotation", where);
    const auto t = detail::json_get<std::vector<double>>(j, "translation", where);
    if (r.size() != 9 || t.size() != 3) {
        throw Error(Errc::validation_error, where + ": rotation needs 9 values and translation 3");
    }
    for (int i = 0; i < 9; ++i) {
        c.extrinsics.rotation(i / 3, i % 3) = detail::finite_or_throw(r[static_cast<std::size_t>(i)], where + ".rotation");
    }
    for (int i = 0; i < 3; ++i) {
        c.extrinsics.translation[i] = detail::finite_or_throw(t[static_cast<std::size_t>(i)], where + ".translation");
    }
    c.weight = j.contains("weight") ? detail::json_get<double>(j, "weight", where) : 1.0;
    return c;
}

inline void save_rig(const std::filesystem::path& path, const CameraRig& rig)
{
    Json arr = Json::array();
    for (const auto& c : rig.cameras) {
        arr.push_back(camera_to_json(c));
    }
    detail::write_text(path, arr.dump(2) + "\n");
}

inline CameraRig load_rig(const std::filesystem::path& path)
{
    const Json j = detail::read_json(path, Errc::layout_error);
    if (!j.is_array()) {
        throw Error(Errc::validation_error, path.string() + ": expected an array of cameras");
    }
    CameraRig rig;
    for (std::size_t i = 0; i < j.size(); ++i) {
        rig.cameras.push_back(camera_from_json(j[i], path.string() + " camera " + std::to_string(i)));
    }
    rig.validate();
    return rig;
}

// ---------------------------------------------------------------------------------------------
// per-view files

inline void save_joints_csv(const std::filesystem::path& path, const ViewObservation& view)
{
    std::string s;
    for (int i = 0; i < kJointCount; ++i) {
        s += format_double(view.joints2d[i].x()) + "," + format_double(view.joints2d[i].y()) + ","
            + format_double(view.confidence[i]) + "\n";
    }
    detail::write_text(path, s);
}

inline void load_joints_csv(const std::filesystem::path& path, ViewObservation& view)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::layout_error, "missing " + path.string());
    }
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const std::string where = path.string() + " line " + std::to_string(row + 1);
        if (row >= kJointCount) {
            throw Error(Errc::validation_error, where + ": more than 21 joints");
        }
        std::array<double, 3> v{};
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            const std::size_t end = k < 2 ? line.find(',', pos) : line.size();
            if (end == std::string::npos || !parse_double(std::string_view(line).substr(pos, end - pos), v[static_cast<std::size_t>(k)])) {
                throw Error(Errc::validation_error, where + ": expected u,v,confidence");
            }
            pos = end + 1;
        }
        if (!(v[2] >= 0.0 && v[2] <= 1.0)) {
            throw Error(Errc::validation_error, where + ": confidence outside [0,1]");
        }
        if (v[2] > 0.0 && !(std::isfinite(v[0]) && std::isfinite(v[1]))) {
            throw Error(Errc::validation_error, where + ": non-finite joint with positive confidence");
        }
        view.joints2d[row] = Vec2(v[0], v[1]);
        view.confidence[row] = v[2];
        ++row;
    }
    if (row != kJointCount) {
        throw Error(Errc::validation_error, path.string() + ": expected 21 joints, found " + std::to_string(row));
    }
}

inline void save_pgm(const std::filesystem::path& path, const MaskImage& mask)
{
    std::string s = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
    s.append(reinterpret_cast<const char*>(mask.pixels.data()), mask.pixels.size());
    detail::write_text(path, s);
}

inline MaskImage load_pgm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::layout_error, "missing " + path.string());
    }
    auto token = [&]() {
        std::string tok;
        char ch = 0;
        while (in.get(ch)) {
            if (ch == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(ch))) {
                if (!tok.empty()) {
                    break;
                }
                continue;
            }
            tok.push_back(ch);
        }
        return tok;
    };
    const auto fail = [&](const std::string& what) { throw Error(Errc::validation_error, path.string() + ": " + what); };
    if (token() != "P5") {
        fail("not a binary PGM (P5)");
    }
    std::int64_t w = 0, h = 0, maxval = 0;
    if (!parse_int(token(), w) || !parse_int(token(), h) || !parse_int(token(), maxval) || w <= 0 || h <= 0 || w > 65536
        || h > 65536) {
        fail("bad PGM header");
    }
    if (maxval != 255) {
        fail("PGM maxval must be 255");
    }
    MaskImage mask(static_cast<int>(w), static_cast<int>(h));
    in.read(reinterpret_cast<char*>(mask.pixels.data()), static_cast<std::streamsize>(mask.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(mask.pixels.size())) {
        fail("truncated pixel data");
    }
    for (auto p : mask.pixels) {
        if (p != 0 && p != 255) {
            fail("mask is not binary (values must be 0 or 255)");
        }
    }
    return mask;
}

inline void save_ply(const std::filesystem::path& path, const std::vector<Vec3>& cloud)
{
    std::string s = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size())
        + "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : cloud) {
        s += format_double(p.x()) + " " + format_double(p.y()) + " " + format_double(p.z()) + "\n";
    }
    detail::write_text(path, s);
}

inline std::vector<Vec3> load_ply(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::layout_error, "missing " + path.string());
    }
    const auto fail = [&](const std::string& what) { throw Error(Errc::validation_error, path.string() + ": " + what); };
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
        fail("not a PLY file");
    }
    std::int64_t count = -1;
    int properties = 0;
    bool in_vertex = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") {
                fail("only ASCII PLY is supported");
            }
        } else if (key == "element") {
            std::string name, n;
            ls >> name >> n;
            in_vertex = name == "vertex";
            if (in_vertex && !parse_int(n, count)) {
                fail("bad vertex count");
            }
        } else if (key == "property" && in_vertex) {
            ++properties;
        } else if (key == "end_header") {
            break;
        }
    }
    if (count < 0 || properties < 3) {
        fail("header must declare a vertex element with x y z");
    }
    std::vector<Vec3> cloud;
    cloud.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
            fail("expected " + std::to_string(count) + " vertices");
        }
        std::istringstream ls(line);
        std::array<double, 3> v{};
        for (auto& x : v) {
            std::string tok;
            if (!(ls >> tok) || !parse_double(tok, x) || !std::isfinite(x)) {
                fail("vertex " + std::to_string(i) + " is not three finite numbers");
            }
        }
        cloud.emplace_back(v[0], v[1], v[2]);
    }
    return cloud;
}

// ---------------------------------------------------------------------------------------------
// sessions

inline void save_session(const std::filesystem::path& dir, const Session& session,
                         Handedness default_hand = Handedness::right)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) {
        throw Error(Errc::io_error, "cannot create " + (dir / "frames").string());
    }
    save_rig(dir / "cameras.json", session.rig);
    Json meta;
    meta["format_version"] = kFormatVersion;
    meta["default_hand"] = to_string(default_hand);
    detail::write_text(dir / "session.json", meta.dump(2) + "\n");
    for (std::size_t t = 0; t < session.frames.size(); ++t) {
        const fs::path fdir = dir / "frames" / detail::frame_dir_name(t);
        fs::create_directories(fdir, ec);
        if (ec) {
            throw Error(Errc::io_error, "cannot create " + fdir.string());
        }
        for (auto h : kBothHands) {
            const auto& obs = session.frames[t].hand(h);
            if (!obs) {
                continue;
            }
            const std::string pre = detail::hand_prefix(h, default_hand);
            for (std::size_t c = 0; c < obs->views.size(); ++c) {
                const std::string view = pre + "view" + std::to_string(c);
                save_joints_csv(fdir / (view + ".joints2d.csv"), obs->views[c]);
                save_pgm(fdir / (view + ".mask.pgm"), obs->views[c].mask);
            }
            save_ply(fdir / (pre + "cloud.ply"), obs->cloud);
        }
    }
}

/// Reads and validates a session directory. Triangulated joints are not stored; they are
/// computed when a frame is prepared for fitting.
inline Session load_session(const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) {
        throw Error(Errc::layout_error, "session directory " + dir.string() + " does not exist");
    }
    Session session;
    session.rig = load_rig(dir / "cameras.json");
    Handedness default_hand = Handedness::right;
    if (fs::exists(dir / "session.json")) {
        const Json meta = detail::read_json(dir / "session.json", Errc::layout_error);
        const auto where = (dir / "session.json").string();
        if (meta.contains("format_version") && detail::json_get<int>(meta, "format_version", where) != kFormatVersion) {
            throw Error(Errc::validation_error, where + ": unsupported format_version");
        }
        if (meta.contains("default_hand")) {
            const auto h = detail::json_get<std::string>(meta, "default_hand", where);
            if (h != "right" && h != "left") {
                throw Error(Errc::validation_error, where + ": default_hand must be right or left");
            }
            default_hand = h == "right" ? Handedness::right : Handedness::left;
        }
    }
    const fs::path frames_dir = dir / "frames";
    if (!fs::is_directory(frames_dir)) {
        throw Error(Errc::layout_error, "missing " + frames_dir.string());
    }
    std::vector<std::int64_t> indices;
    for (const auto& entry : fs::directory_iterator(frames_dir)) {
        if (!entry.is_directory()) {
            continue;
        }
        std::int64_t idx = 0;
        const auto name = entry.path().filename().string();
        if (name.size() != 6 || !parse_int(name, idx)) {
            throw Error(Errc::layout_error, "unexpected frame directory " + entry.path().string());
        }
        indices.push_back(idx);
    }
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] != static_cast<std::int64_t>(i)) {
            throw Error(Errc::layout_error, "frame directories are not contiguous from 000000 (missing "
                                                + detail::frame_dir_name(i) + ")");
        }
    }

    const std::size_t nc = session.rig.size();
    session.frames.resize(indices.size());
    for (std::size_t t = 0; t < indices.size(); ++t) {
        const fs::path fdir = frames_dir / detail::frame_dir_name(t);
        for (auto h : kBothHands) {
            const std::string pre = detail::hand_prefix(h, default_hand);
            std::vector<fs::path> required;
            for (std::size_t c = 0; c < nc; ++c) {
                required.push_back(fdir / (pre + "view" + std::to_string(c) + ".joints2d.csv"));
                required.push_back(fdir / (pre + "view" + std::to_string(c) + ".mask.pgm"));
            }
            required.push_back(fdir / (pre + "cloud.ply"));
            std::size_t present = 0;
            for (const auto& p : required) {
                present += fs::exists(p) ? 1 : 0;
            }
            if (present == 0) {
                continue;
            }
            for (const auto& p : required) {
                if (!fs::exists(p)) {
                    throw Error(Errc::layout_error, "missing " + p.string());
                }
            }
            FrameObservation obs;
            obs.views.resize(nc);
            for (std::size_t c = 0; c < nc; ++c) {
                auto& view = obs.views[c];
                load_joints_csv(required[2 * c], view);
                view.mask = load_pgm(required[2 * c + 1]);
                const auto& k = session.rig[c].intrinsics;
                if (view.mask.width != k.width || view.mask.height != k.height) {
                    throw Error(Errc::validation_error, required[2 * c + 1].string() + ": view " + std::to_string(c) + " mask is "
                                                            + std::to_string(view.mask.width) + "x"
                                                            + std::to_string(view.mask.height) + " but the camera is "
                                                            + std::to_string(k.width) + "x" + std::to_string(k.height));
                }
            }
            obs.cloud = load_ply(required.back());
            session.frames[t].hand(h) = std::move(obs);
        }
    }
    return session;
}

// ---------------------------------------------------------------------------------------------
// annotations

namespace detail {

    template <class V>
    Json vec_json(const V& v)
    {
        Json a = Json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            a.push_back(v[i]);
        }
        return a;
    }

    inline Json joints_json(const JointSet& j)
    {
        Json a = Json::array();
        for (const auto& p : j.joints) {
            a.push_back({p.x(), p.y(), p.z()});
        }
        return a;
    }

    inline JointSet joints_from_json(const Json& j, const std::string& where)
    {
        if (!j.is_array() || j.size() != kJointCount) {
            throw Error(Errc::validation_error, where + ": expected 21 joints");
        }
        JointSet out;
        for (int i = 0; i < kJointCount; ++i) {
            const auto& p = j[static_cast<std::size_t>(i)];
            if (!p.is_array() || p.size() != 3) {
                throw Error(Errc::validation_error, where + ": joint must have 3 coordinates");
            }
            for (int k = 0; k < 3; ++k) {
                out[static_cast<std::size_t>(i)][k] = p[static_cast<std::size_t>(k)].get<double>();
            }
        }
        return out;
    }

    template <int N>
    Eigen::Matrix<double, N, 1> fixed_vec(const Json& j, const char* key, const std::string& where)
    {
        const auto v = json_get<std::vector<double>>(j, key, where);
        if (v.size() != static_cast<std::size_t>(N)) {
            throw Error(Errc::validation_error, where + ": '" + key + "' must have " + std::to_string(N) + " values");
        }
        Eigen::Matrix<double, N, 1> out;
        for (int i = 0; i < N; ++i) {
            out[i] = v[static_cast<std::size_t>(i)];
        }
        return out;
    }

    inline std::string_view status_name(TermStatus s)
    {
        switch (s) {
        case TermStatus::active: return "active";
        case TermStatus::dropped: return "dropped";
        case TermStatus::inactive: return "inactive";
        }
        return "inactive";
    }

} // namespace detail

inline Json fit_result_json(const FitResult& r)
{
    Json j;
    j["beta"] = detail::vec_json(r.shape.beta);
    j["theta"] = detail::vec_json(r.pose.to_vector());
    j["joints3d"] = detail::joints_json(r.joints);
    j["objective"] = r.objective;
    Json bd = Json::object();
    Json st = Json::object();
    for (auto t : kAllTerms) {
        bd[std::string(to_string(t))] = r.breakdown[t];
        st[std::string(to_string(t))] = detail::status_name(r.breakdown.status_of(t));
    }
    j["breakdown"] = bd;
    j["term_status"] = st;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    return j;
}

inline FitResult fit_result_from_json(const Json& j, const std::string& where)
{
    FitResult r;
    r.shape.beta = detail::fixed_vec<kShapeDim>(j, "beta", where);
    r.pose = HandPose::from_vector(detail::fixed_vec<kPoseDim>(j, "theta", where));
    r.joints = detail::joints_from_json(detail::json_get<Json>(j, "joints3d", where), where + ".joints3d");
    r.objective = detail::json_get<double>(j, "objective", where);
    const auto bd = detail::json_get<Json>(j, "breakdown", where);
    for (auto t : kAllTerms) {
        r.breakdown[t] = detail::json_get<double>(bd, std::string(to_string(t)).c_str(), where + ".breakdown");
    }
    if (j.contains("term_status")) {
        const auto st = j.at("term_status");
        for (auto t : kAllTerms) {
            const auto s = detail::json_get<std::string>(st, std::string(to_string(t)).c_str(), where + ".term_status");
            auto& slot = r.breakdown.status[static_cast<std::size_t>(t)];
            slot = s == "active" ? TermStatus::active : s == "dropped" ? TermStatus::dropped : TermStatus::inactive;
        }
        r.dropped_terms = r.breakdown.dropped();
    }
    r.converged = detail::json_get<bool>(j, "converged", where);
    r.iterations = detail::json_get<int>(j, "iterations", where);
    return r;
}

/// {"format_version", "frame_count", "hands": {"right": {"beta", "frames": [record|null], "failures": [code|null]}}}
inline Json annotations_json(const SequenceAnnotation& a)
{
    Json j;
    j["format_version"] = kFormatVersion;
    j["frame_count"] = a.frame_count;
    Json hands = Json::object();
    for (auto h : kBothHands) {
        const auto& track = a.track(h);
        if (!track) {
            continue;
        }
        Json th;
        th["beta"] = track->shape ? detail::vec_json(track->shape->beta) : Json(nullptr);
        Json frames = Json::array();
        Json failures = Json::array();
        for (std::size_t t = 0; t < track->frames.size(); ++t) {
            frames.push_back(track->frames[t] ? fit_result_json(*track->frames[t]) : Json(nullptr));
            failures.push_back(track->failures[t] ? Json(to_string(*track->failures[t])) : Json(nullptr));
        }
        th["frames"] = frames;
        th["failures"] = failures;
        hands[to_string(h)] = th;
    }
    j["hands"] = hands;
    return j;
}

inline void save_annotations(const std::filesystem::path& path, const SequenceAnnotation& a)
{
    detail::write_text(path, annotations_json(a).dump(1) + "\n");
}

inline SequenceAnnotation load_annotations(const std::filesystem::path& path)
{
    const Json j = detail::read_json(path, Errc::io_error);
    const std::string where = path.string();
    if (detail::json_get<int>(j, "format_version", where) != kFormatVersion) {
        throw Error(Errc::validation_error, where + ": unsupported format_version");
    }
    SequenceAnnotation a;
    a.frame_count = detail::json_get<std::size_t>(j, "frame_count", where);
    const auto hands = detail::json_get<Json>(j, "hands", where);
    for (auto h : kBothHands) {
        if (!hands.contains(to_string(h))) {
            continue;
        }
        const auto& th = hands.at(to_string(h));
        const std::string hw = where + " " + to_string(h);
        HandTrack track;
        if (th.contains("beta") && !th.at("beta").is_null()) {
            track.shape = HandShape{detail::fixed_vec<kShapeDim>(th, "beta", hw)};
        }
        const auto frames = detail::json_get<Json>(th, "frames", hw);
        if (!frames.is_array() || frames.size() != a.frame_count) {
            throw Error(Errc::validation_error, hw + ": frames must have frame_count entries");
        }
        track.frames.resize(a.frame_count);
        track.failures.resize(a.frame_count);
        const Json failures = th.contains("failures") ? th.at("failures") : Json::array();
        for (std::size_t t = 0; t < a.frame_count; ++t) {
            if (!frames[t].is_null()) {
                track.frames[t] = fit_result_from_json(frames[t], hw + " frame " + std::to_string(t));
            }
            if (t < failures.size() && failures[t].is_string()) {
                Errc code{};
                if (!errc_from_string(failures[t].get<std::string>(), code)) {
                    throw Error(Errc::validation_error, hw + ": unknown failure code in frame " + std::to_string(t));
                }
                track.failures[t] = code;
            }
        }
        a.track(h) = std::move(track);
    }
    return a;
}

// ---------------------------------------------------------------------------------------------
// synthetic ground truth

inline void save_ground_truth(const std::filesystem::path& path, const SynthGroundTruth& gt)
{
    Json j;
    j["format_version"] = kFormatVersion;
    j["hand"] = to_string(gt.hand);
    Json frames = Json::array();
    for (const auto& f : gt.frames) {
        Json fj;
        fj["beta"] = detail::vec_json(f.shape.beta);
        fj["theta"] = detail::vec_json(f.pose.to_vector());
        fj["joints"] = detail::joints_json(f.joints);
        Json verts = Json::array();
        for (const auto& v : f.vertices) {
            verts.push_back({v.x(), v.y(), v.z()});
        }
        fj["vertices"] = verts;
        frames.push_back(fj);
    }
    j["frames"] = frames;
    detail::write_text(path, j.dump() + "\n");
}

inline SynthGroundTruth load_ground_truth(const std::filesystem::path& path)
{
    const Json j = detail::read_json(path, Errc::io_error);
    const std::string where = path.string();
    SynthGroundTruth gt;
    const auto hand = detail::json_get<std::string>(j, "hand", where);
    if (hand != "right" && hand != "left") {
        throw Error(Errc::validation_error, where + ": hand must be right or left");
    }
    gt.hand = hand == "right" ? Handedness::right : Handedness::left;
    const auto frames = detail::json_get<Json>(j, "frames", where);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const std::string fw = where + " frame " + std::to_string(t);
        SynthFrameTruth f;
        f.shape.beta = detail::fixed_vec<kShapeDim>(frames[t], "beta", fw);
        f.pose = HandPose::from_vector(detail::fixed_vec<kPoseDim>(frames[t], "theta", fw));
        f.joints = detail::joints_from_json(detail::json_get<Json>(frames[t], "joints", fw), fw);
        if (frames[t].contains("vertices")) {
            for (const auto& v : frames[t].at("vertices")) {
                f.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
            }
        }
        gt.frames.push_back(std::move(f));
    }
    return gt;
}

// ---------------------------------------------------------------------------------------------
// pipeline configuration

/// Flat "key = value" file; '#' starts a comment. Unknown keys are rejected.
struct PipelineConfig {
    EnergyWeights weights;
    std::vector<double> alpha; // per-view weight override; empty keeps the camera file's weights
    DefaultLimitRanges limits;
    bool limits_from_model = false; // use the model asset's LIMITS section instead
    OptimizerConfig optimizer;
    MetricsSettings metrics;
    std::string model; // model asset path; empty selects the built-in model

    JointLimits joint_limits(const HandModel& m) const { return limits_from_model ? m.limits : limits.limits(); }

    CameraRig apply_alpha(CameraRig rig) const
    {
        if (alpha.empty()) {
            return rig;
        }
        if (alpha.size() != rig.size()) {
            throw Error(Errc::validation_error, "config alpha has " + std::to_string(alpha.size()) + " values but the rig has "
                                                    + std::to_string(rig.size()) + " cameras");
        }
        for (std::size_t c = 0; c < rig.size(); ++c) {
            rig.cameras[c].weight = alpha[c];
        }
        return rig;
    }
};

inline std::string format_config(const PipelineConfig& c)
{
    const auto d = [](double v) { return format_double(v); };
    std::string alpha;
    for (std::size_t i = 0; i < c.alpha.size(); ++i) {
        alpha += (i ? "," : "") + d(c.alpha[i]);
    }
    std::ostringstream o;
    o << "# energy weights\n"
      << "lambda_j2d = " << d(c.weights.j2d) << "\n"
      << "lambda_mask = " << d(c.weights.mask) << "\n"
      << "lambda_j3d = " << d(c.weights.j3d) << "\n"
      << "lambda_mesh = " << d(c.weights.mesh) << "\n"
      << "lambda_reg = " << d(c.weights.reg) << "\n"
      << "lambda_shape = " << d(c.weights.shape) << "\n"
      << "# per-view weights, comma separated; empty keeps cameras.json weights\n"
      << "alpha = " << alpha << "\n"
      << "# articulation limits (radians): flexion = x, twist = y, abduction = z of each joint\n"
      << "limits.flexion = " << d(c.limits.flexion_lower) << "," << d(c.limits.flexion_upper) << "\n"
      << "limits.twist = " << d(c.limits.twist) << "\n"
      << "limits.abduction = " << d(c.limits.abduction) << "\n"
      << "limits.from_model = " << (c.limits_from_model ? "true" : "false") << "\n"
      << "# optimizer\n"
      << "optimizer.max_iterations = " << c.optimizer.max_iterations << "\n"
      << "optimizer.max_iterations_warm = " << c.optimizer.max_iterations_warm << "\n"
      << "optimizer.relative_tolerance = " << d(c.optimizer.relative_tolerance) << "\n"
      << "optimizer.window = " << c.optimizer.window << "\n"
      << "optimizer.step_size = " << d(c.optimizer.step_size) << "\n"
      << "optimizer.decay = " << d(c.optimizer.decay) << "\n"
      << "optimizer.restarts = " << c.optimizer.restarts << "\n"
      << "seed = " << c.optimizer.seed << "\n"
      << "# metrics\n"
      << "metrics.max_threshold_mm = " << d(c.metrics.max_threshold_mm) << "\n"
      << "metrics.max_threshold_ra_mm = " << d(c.metrics.max_threshold_ra_mm) << "\n"
      << "metrics.steps = " << c.metrics.steps << "\n"
      << "# hand model asset; empty = built-in\n"
      << "model = " << c.model << "\n";
    return o.str();
}

inline PipelineConfig parse_config(std::istream& in, const std::string& source)
{
    PipelineConfig c;
    std::string line;
    int lineno = 0;
    const auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::validation_error, where + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto real = [&]() {
            double v = 0.0;
            if (!parse_double(value, v) || !std::isfinite(v)) {
                throw Error(Errc::validation_error, where + ": '" + key + "' needs a number");
            }
            return v;
        };
        const auto nonneg = [&]() {
            const double v = real();
            if (v < 0.0) {
                throw Error(Errc::validation_error, where + ": '" + key + "' must be >= 0");
            }
            return v;
        };
        const auto integer = [&](std::int64_t lo) {
            std::int64_t v = 0;
            if (!parse_int(value, v) || v < lo) {
                throw Error(Errc::validation_error, where + ": '" + key + "' needs an integer >= " + std::to_string(lo));
            }
            return v;
        };
        const auto list = [&]() {
            std::vector<double> out;
            std::size_t pos = 0;
            while (pos <= value.size() && !value.empty()) {
                const auto end = std::min(value.find(',', pos), value.size());
                double v = 0.0;
                if (!parse_double(trim(value.substr(pos, end - pos)), v) || !std::isfinite(v)) {
                    throw Error(Errc::validation_error, where + ": '" + key + "' needs comma-separated numbers");
                }
                out.push_back(v);
                pos = end + 1;
            }
            return out;
        };

        if (key == "lambda_j2d") {
            c.weights.j2d = nonneg();
        } else if (key == "lambda_mask") {
            c.weights.mask = nonneg();
        } else if (key == "lambda_j3d") {
            c.weights.j3d = nonneg();
        } else if (key == "lambda_mesh") {
            c.weights.mesh = nonneg();
        } else if (key == "lambda_reg") {
            c.weights.reg = nonneg();
        } else if (key == "lambda_shape") {
            c.weights.shape = nonneg();
        } else if (key == "alpha") {
            c.alpha = list();
            for (double a : c.alpha) {
                if (a < 0.0) {
                    throw Error(Errc::validation_error, where + ": alpha values must be >= 0");
                }
            }
        } else if (key == "limits.flexion") {
            const auto v = list();
            if (v.size() != 2 || v[0] > v[1]) {
                throw Error(Errc::validation_error, where + ": limits.flexion needs lower,upper");
            }
            c.limits.flexion_lower = v[0];
            c.limits.flexion_upper = v[1];
        } else if (key == "limits.twist") {
            c.limits.twist = nonneg();
        } else if (key == "limits.abduction") {
            c.limits.abduction = nonneg();
        } else if (key == "limits.from_model") {
            if (value != "true" && value != "false") {
                throw Error(Errc::validation_error, where + ": limits.from_model must be true or false");
            }
            c.limits_from_model = value == "true";
        } else if (key == "optimizer.max_iterations") {
            c.optimizer.max_iterations = static_cast<int>(integer(1));
        } else if (key == "optimizer.max_iterations_warm") {
            c.optimizer.max_iterations_warm = static_cast<int>(integer(1));
        } else if (key == "optimizer.relative_tolerance") {
            c.optimizer.relative_tolerance = real();
            if (!(c.optimizer.relative_tolerance > 0.0)) {
                throw Error(Errc::validation_error, where + ": relative_tolerance must be > 0");
            }
        } else if (key == "optimizer.window") {
            c.optimizer.window = static_cast<int>(integer(1));
        } else if (key == "optimizer.step_size") {
            c.optimizer.step_size = real();
            if (!(c.optimizer.step_size > 0.0)) {
                throw Error(Errc::validation_error, where + ": step_size must be > 0");
            }
        } else if (key == "optimizer.decay") {
            c.optimizer.decay = real();
            if (!(c.optimizer.decay > 0.0 && c.optimizer.decay <= 1.0)) {
                throw Error(Errc::validation_error, where + ": decay must be in (0,1]");
            }
        } else if (key == "optimizer.restarts") {
            c.optimizer.restarts = static_cast<int>(integer(0));
        } else if (key == "seed") {
            c.optimizer.seed = static_cast<std::uint64_t>(integer(0));
        } else if (key == "metrics.max_threshold_mm") {
            c.metrics.max_threshold_mm = real();
        } else if (key == "metrics.max_threshold_ra_mm") {
            c.metrics.max_threshold_ra_mm = real();
        } else if (key == "metrics.steps") {
            c.metrics.steps = static_cast<int>(integer(2));
        } else if (key == "model") {
            c.model = value;
        } else {
            throw Error(Errc::validation_error, where + ": unknown key '" + key + "'");
        }
    }
    if (!(c.metrics.max_threshold_mm > 0.0) || !(c.metrics.max_threshold_ra_mm > 0.0)) {
        throw Error(Errc::validation_error, source + ": metric thresholds must be > 0");
    }
    if (!c.model.empty() && !std::filesystem::exists(c.model)) {
        throw Error(Errc::validation_error, source + ": model asset '" + c.model + "' does not exist");
    }
    return c;
}

inline PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::validation_error, "cannot open config " + path.string());
    }
    return parse_config(in, path.string());
}

// ---------------------------------------------------------------------------------------------
// metrics report

/// Millimeters with 4 decimals, fractions and AUC with 6 decimals.
inline std::string format_report(const MetricsReport& r, const MetricsSettings& s)
{
    std::ostringstream o;
    o << "frames " << r.frame_count << "\n"
      << "unannotated_frames " << r.unannotated_frames << "\n"
      << "joints " << r.joint_count << "\n"
      << "mepe_mm " << format_fixed(r.mepe_mm, 4) << "\n"
      << "mepe_ra_mm " << format_fixed(r.mepe_ra_mm, 4) << "\n"
      << "auc_0_" << format_fixed(s.max_threshold_mm, 0) << "mm " << format_fixed(r.auc, 6) << "\n"
      << "auc_ra_0_" << format_fixed(s.max_threshold_ra_mm, 0) << "mm " << format_fixed(r.auc_ra, 6) << "\n";
    for (const auto& [tau, frac] : r.pck.points) {
        o << "pck " << format_fixed(tau, 4) << " " << format_fixed(frac, 6) << "\n";
    }
    for (const auto& [tau, frac] : r.pck_ra.points) {
        o << "pck_ra " << format_fixed(tau, 4) << " " << format_fixed(frac, 6) << "\n";
    }
    return o.str();
}

} // namespace handfit
