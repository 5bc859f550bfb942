// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
// Candidate generators: random edits over the command grammar, and a remote
// chat-completion model.
#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mechforge/commands.hpp"
#include "mechforge/search.hpp"

namespace mechforge {

// ---------------------------------------------------------------- mutation

struct MutationPolicy {
  double add_weight = 0.5;
  double remove_weight = 0.3;
  double move_weight = 0.2;
  std::map<int, double> type_weights;  // empty: uniform over every addable type
  int max_edits = 3;
  std::uint64_t seed = 0;
  int budget = 64;  // rejected proposals tolerated per call

  // Throws std::invalid_argument for negative or all-zero weights.
  void check() const;
};

Json policy_to_json(const MutationPolicy& p);

struct MutationResult {
  std::optional<ConstructionTree> tree;
  std::vector<EditCommand> commands;  // as applied, one at a time, in order
  int rejected = 0;
};

// Applies 1..max_edits random edits. Every command is checked by the edit
// rules and the result by structural validation; rejects are resampled until
// the budget runs out. No tree is returned if nothing could be applied.
MutationResult mutate(const ConstructionTree& machine, const MutationPolicy& policy, std::mt19937_64& rng);

class MutationGenerator : public Generator {
 public:
  explicit MutationGenerator(MutationPolicy policy);
  GenerateResult generate(const GeneratorContext& ctx, std::uint64_t seed) override;
  std::string id() const override { return "mutate"; }
  const MutationPolicy& policy() const { return policy_; }

 private:
  MutationPolicy policy_;
};

// ------------------------------------------------------------- remote model

struct RemoteEndpoint {
  std::string base_url;     // e.g. https://host/v1; requests go to <base>/chat/completions
  std::string model;
  std::string token_env = "MECHFORGE_API_KEY";  // name of the variable holding the token
  double timeout_seconds = 120.0;
  int max_retries = 2;      // transport retries per generate call
  std::string prompt_template = "single-agent";
  int max_in_flight = 4;
  double temperature = 0.7;
};

// Reads MECHFORGE_ENDPOINT_URL, MECHFORGE_MODEL and friends. The token itself
// is looked up at request time and never stored.
RemoteEndpoint endpoint_from_env();
// Settings without secrets, for manifests.
Json endpoint_to_json(const RemoteEndpoint& e);

struct ChatReply {
  bool ok = false;
  std::string text;   // assistant message on success
  std::string error;  // transport or HTTP failure description
};

// Posts a chat-completion request body and returns the assistant message.
using ChatTransport = std::function<ChatReply(const Json& request)>;

// HTTP transport with a bearer token read from the endpoint's token variable.
ChatTransport http_transport(const RemoteEndpoint& endpoint);

// Registered prompt templates. Placeholders: {task} {catalog} {machine}
// {feedback} {score} {history}.
const std::map<std::string, std::string>& prompt_templates();
void register_prompt_template(const std::string& id, std::string text);
std::string render_prompt(const std::string& template_id, const GeneratorContext& ctx);

// Compact block list used in prompts.
std::string catalog_summary();

// Turns a model reply into a candidate: a fenced machine document wins, then
// a <Modification Steps> block applied to `current`.
GenerateResult interpret_reply(std::string_view reply, const ConstructionTree& current);

GenerateResult llm_generate(const GeneratorContext& ctx, const RemoteEndpoint& endpoint, const ChatTransport& transport);

class LlmGenerator : public Generator {
 public:
  LlmGenerator(RemoteEndpoint endpoint, ChatTransport transport);
  GenerateResult generate(const GeneratorContext& ctx, std::uint64_t seed) override;
  std::string id() const override { return "llm"; }
  // Receives request and reply bodies; never sees credentials.
  void set_trace(std::function<void(const Json&)> trace) { trace_ = std::move(trace); }

 private:
  RemoteEndpoint endpoint_;
  ChatTransport transport_;
  std::function<void(const Json&)> trace_;
  std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
};

}  // namespace mechforge
