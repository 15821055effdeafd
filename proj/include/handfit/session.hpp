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

#include "handfit/energy.hpp"

#include <array>
#include <optional>
#include <vector>

namespace handfit {

inline constexpr std::size_t hand_slot(Handedness h) { return h == Handedness::right ? 0 : 1; }
inline constexpr std::array<Handedness, 2> kBothHands = {Handedness::right, Handedness::left};

/// Observations of one time step; a hand absent from the frame has no entry.
struct SessionFrame {
    std::array<std::optional<FrameObservation>, 2> hands;

    std::optional<FrameObservation>& hand(Handedness h) { return hands[hand_slot(h)]; }
    const std::optional<FrameObservation>& hand(Handedness h) const { return hands[hand_slot(h)]; }
};

struct Session {
    CameraRig rig;
    std::vector<SessionFrame> frames;

    bool has_hand(Handedness h) const
    {
        for (const auto& f : frames) {
            if (f.hand(h)) {
                return true;
            }
        }
        return false;
    }
};

} // namespace handfit
