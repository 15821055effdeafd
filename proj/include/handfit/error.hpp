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

#include <stdexcept>
#include <string>
#include <string_view>

namespace handfit {

enum class Errc {
    // geometry
    non_positive_depth,
    insufficient_views,
    degenerate_geometry,
    insufficient_points,
    degenerate_configuration,
    // hand model
    asset_parse_error,
    asset_contract_violation,
    // energy
    no_valid_observations,
    empty_mask,
    no_valid_joints,
    empty_cloud,
    all_terms_dropped,
    // fitting
    non_finite_objective,
    empty_session,
    // metrics
    shape_mismatch,
    empty_errors,
    // io
    layout_error,
    validation_error,
    io_error,
    usage_error,
};

constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::non_positive_depth: return "NonPositiveDepth";
    case Errc::insufficient_views: return "InsufficientViews";
    case Errc::degenerate_geometry: return "DegenerateGeometry";
    case Errc::insufficient_points: return "InsufficientPoints";
    case Errc::degenerate_configuration: return "DegenerateConfiguration";
    case Errc::asset_parse_error: return "AssetParseError";
    case Errc::asset_contract_violation: return "AssetContractViolation";
    case Errc::no_valid_observations: return "NoValidObservations";
    case Errc::empty_mask: return "EmptyMask";
    case Errc::no_valid_joints: return "NoValidJoints";
    case Errc::empty_cloud: return "EmptyCloud";
    case Errc::all_terms_dropped: return "AllTermsDropped";
    case Errc::non_finite_objective: return "NonFiniteObjective";
    case Errc::empty_session: return "EmptySession";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::empty_errors: return "EmptyErrors";
    case Errc::layout_error: return "LayoutError";
    case Errc::validation_error: return "ValidationError";
    case Errc::io_error: return "IoError";
    case Errc::usage_error: return "UsageError";
    }
    return "Unknown";
}

inline constexpr Errc kLastErrc = Errc::usage_error;

/// Inverse of to_string; false for unknown names.
constexpr bool errc_from_string(std::string_view name, Errc& out) noexcept
{
    for (int i = 0; i <= static_cast<int>(kLastErrc); ++i) {
        if (to_string(static_cast<Errc>(i)) == name) {
            out = static_cast<Errc>(i);
            return true;
        }
    }
    return false;
}

/// Every failure raised by the library carries one of the codes above so callers can
/// branch on the kind (e.g. drop an energy term) without parsing messages.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what)
        , code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace handfit
