// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <nlohmann/json.hpp>

namespace mechforge {

// Insertion-ordered JSON so emitted documents keep the documented key order.
using Json = nlohmann::ordered_json;

}  // namespace mechforge
