// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/commands.hpp"

#include <regex>
#include <sstream>

namespace mechforge {
namespace {

const std::regex& add_re() {
  static const std::regex re(R"(^\s*Add\s*\[\s*(-?\d+)\s*\]\s*to\s*\[\s*(-?\d+)\s*\]\s*in\s*\[\s*(-?\d+)\s*\]\s*$)");
  return re;
}

const std::regex& add_linear_re() {
  static const std::regex re(
      R"(^\s*Add\s*\[\s*(-?\d+)\s*\]\s*to\s*\[\s*(-?\d+)\s*\]\s*in\s*\[\s*(-?\d+)\s*\]\s*to\s*\[\s*(-?\d+)\s*\]\s*in\s*\[\s*(-?\d+)\s*\]\s*$)");
  return re;
}

const std::regex& remove_re() {
  static const std::regex re(R"(^\s*Remove\s*\[\s*(-?\d+)\s*\]\s*$)");
  return re;
}

const std::regex& move_re() {
  static const std::regex re(R"(^\s*Move\s*\[\s*(-?\d+)\s*\]\s*to\s*\[\s*(-?\d+)\s*\]\s*in\s*\[\s*(-?\d+)\s*\]\s*$)");
  return re;
}

int num(const std::smatch& m, int i) { return std::stoi(m[i].str()); }

}  // namespace

CommandParseResult parse_commands(std::string_view text) {
  CommandParseResult r;
  std::istringstream in{std::string(text)};
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::smatch m;
    try {
      if (std::regex_match(line, m, add_linear_re())) {
        r.commands.push_back(AddLinearCmd{num(m, 1), num(m, 2), num(m, 3), num(m, 4), num(m, 5)});
      } else if (std::regex_match(line, m, add_re())) {
        r.commands.push_back(AddCmd{num(m, 1), num(m, 2), num(m, 3)});
      } else if (std::regex_match(line, m, remove_re())) {
        r.commands.push_back(RemoveCmd{num(m, 1)});
      } else if (std::regex_match(line, m, move_re())) {
        r.commands.push_back(MoveCmd{num(m, 1), num(m, 2), num(m, 3)});
      } else {
        r.errors.push_back({no, line});
      }
    } catch (const std::out_of_range&) {
      r.errors.push_back({no, line});
    }
  }
  return r;
}

std::string print_commands(const std::vector<EditCommand>& commands) {
  std::string out;
  for (const EditCommand& c : commands) {
    out += print_command(c);
    out += '\n';
  }
  return out;
}

std::optional<std::string> extract_modification_steps(std::string_view text) {
  constexpr std::string_view open = "<Modification Steps>";
  constexpr std::string_view close = "</Modification Steps>";
  const std::size_t b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const std::size_t start = b + open.size();
  const std::size_t e = text.find(close, start);
  return std::string(text.substr(start, e == std::string_view::npos ? std::string_view::npos : e - start));
}

}  // namespace mechforge
