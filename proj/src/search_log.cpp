// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>

#include "mechforge/search.hpp"

namespace mechforge {

std::uint64_t machine_hash(const ConstructionTree& tree) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : format_tree(tree)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Json record_to_json(const SimulationRecord& r) {
  Json j;
  j["round"] = r.round;
  j["path"] = r.path;
  j["machine_hash"] = hash_hex(r.hash);
  j["score"] = r.score;
  j["file_valid"] = r.file_valid;
  j["spatial_valid"] = r.spatial_valid;
  j["machine_valid"] = r.machine_valid;
  j["retries"] = r.retries;
  j["origin"] = std::string(to_string(r.origin));
  return j;
}

SimulationRecord record_from_json(const Json& j) {
  SimulationRecord r;
  r.round = j.at("round").get<int>();
  r.path = j.at("path").get<std::vector<int>>();
  r.hash = std::stoull(j.at("machine_hash").get<std::string>(), nullptr, 16);
  r.score = j.at("score").get<double>();
  r.file_valid = j.at("file_valid").get<bool>();
  r.spatial_valid = j.at("spatial_valid").get<bool>();
  r.machine_valid = j.at("machine_valid").get<bool>();
  r.retries = j.at("retries").get<int>();
  const std::string origin = j.at("origin").get<std::string>();
  if (origin == "initial") {
    r.origin = RecordOrigin::Initial;
  } else if (origin == "fallback") {
    r.origin = RecordOrigin::Fallback;
  } else if (origin == "candidate") {
    r.origin = RecordOrigin::Candidate;
  } else {
    throw std::runtime_error("unknown record origin \"" + origin + "\"");
  }
  return r;
}

struct JsonlLog::Impl {
  std::ofstream out;
  std::mutex mu;
};

JsonlLog::JsonlLog(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::out | std::ios::app);
  if (!impl_->out) {
    delete impl_;
    throw std::runtime_error("cannot open log " + path);
  }
}

JsonlLog::~JsonlLog() { delete impl_; }

void JsonlLog::write(const Json& record) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->out << record.dump() << '\n';
  impl_->out.flush();
  if (!impl_->out) throw std::runtime_error("log write failed");
}

std::vector<SimulationRecord> read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read log " + path);
  std::vector<SimulationRecord> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

Json search_config_to_json(const SearchConfig& c) {
  Json j;
  j["rounds"] = c.rounds;
  j["samples"] = c.samples;
  j["max_iter"] = c.max_iter;
  j["max_retry"] = c.max_retry;
  j["children"] = c.children;
  j["exploration"] = c.exploration;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  return j;
}

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["tool_version"] = m.tool_version;
  j["strategy"] = m.strategy;
  j["generator"] = m.generator;
  j["generator_settings"] = m.generator_settings;
  j["seed"] = m.seed;
  j["search_config"] = m.search_config;
  j["scenario"] = m.scenario;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["outputs"] = m.outputs;
  j["summary"] = m.summary;
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mechforge
