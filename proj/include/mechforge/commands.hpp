// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Text form of edit commands, one per line.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mechforge/edits.hpp"

namespace mechforge {

struct CommandSyntaxError {
  int line = 0;  // 1-based
  std::string text;
};

struct CommandParseResult {
  std::vector<EditCommand> commands;
  std::vector<CommandSyntaxError> errors;

  bool ok() const { return errors.empty(); }
};

// Blank lines are skipped; every other line must be a single command.
CommandParseResult parse_commands(std::string_view text);
std::string print_commands(const std::vector<EditCommand>& commands);

// Text between <Modification Steps> and </Modification Steps>, if present.
std::optional<std::string> extract_modification_steps(std::string_view text);

}  // namespace mechforge
