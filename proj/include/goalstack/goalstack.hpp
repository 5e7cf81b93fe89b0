// Copyright 2026 The goalstack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GOALSTACK__GOALSTACK_HPP_
#define GOALSTACK__GOALSTACK_HPP_

#include "goalstack/common.hpp"
#include "goalstack/geometry.hpp"
#include "goalstack/grid.hpp"
#include "goalstack/hungarian.hpp"
#include "goalstack/io.hpp"
#include "goalstack/kernel.hpp"
#include "goalstack/map_head.hpp"
#include "goalstack/metrics.hpp"
#include "goalstack/motion.hpp"
#include "goalstack/occupancy.hpp"
#include "goalstack/pipeline.hpp"
#include "goalstack/planner.hpp"
#include "goalstack/scenario.hpp"
#include "goalstack/smoother.hpp"
#include "goalstack/tracker.hpp"
#include "goalstack/weights.hpp"

#endif  // GOALSTACK__GOALSTACK_HPP_
