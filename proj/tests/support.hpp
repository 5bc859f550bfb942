// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the test binaries.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mechforge/assembly.hpp"

namespace mechforge::testing {

inline std::string data_path(const std::string& rel) { return std::string(MECHFORGE_DATA_DIR) + "/" + rel; }
inline std::string test_data_path(const std::string& rel) { return std::string(MECHFORGE_TEST_DATA_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline ConstructionTree tree_from(const std::string& text) {
  ParseResult pr = parse_tree(text);
  if (!pr.ok()) throw std::runtime_error("test machine does not parse: " + pr.diagnostics.at(0).message);
  return *pr.tree;
}

inline ConstructionTree load_tree(const std::string& path) { return tree_from(slurp(path)); }

inline ConstructionNode block(int type, int id, int parent, int face) {
  return ConstructionNode{type, id, Attachment{parent, face}, std::nullopt};
}

inline ConstructionNode linear(int type, int id, int pa, int fa, int pb, int fb) {
  return ConstructionNode{type, id, Attachment{pa, fa}, Attachment{pb, fb}};
}

}  // namespace mechforge::testing
