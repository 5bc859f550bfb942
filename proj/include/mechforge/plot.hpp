// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Static trajectory figures.
#pragma once

#include <string>

#include "mechforge/physics.hpp"
#include "mechforge/scenario.hpp"

namespace mechforge {

// SVG with two panels for one block: height over time, and the path in the
// plane spanned by the target direction and the vertical. Break events are
// marked on the time axis. `block` defaults to the boulder for catapults and
// the root otherwise.
std::string trajectory_svg(const SimTrace& trace, const Scenario& scenario, int block = -1);

}  // namespace mechforge
