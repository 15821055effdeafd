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

#include "handfit/ablation.hpp"
#include "handfit/distance_field.hpp"
#include "handfit/energy.hpp"
#include "handfit/error.hpp"
#include "handfit/fitting.hpp"
#include "handfit/geometry.hpp"
#include "handfit/hand_model.hpp"
#include "handfit/metrics.hpp"
#include "handfit/model_io.hpp"
#include "handfit/point_index.hpp"
#include "handfit/rotation.hpp"
#include "handfit/session.hpp"
#include "handfit/session_io.hpp"
#include "handfit/synth.hpp"
