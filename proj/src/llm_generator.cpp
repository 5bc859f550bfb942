// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include <cstdlib>
#include <sstream>

#include "mechforge/gateway.hpp"

// After the Eigen-based headers: httplib pulls in resolv.h, whose _res macro
// collides with Eigen parameter names.
#include <httplib.h>

namespace mechforge {
namespace {

constexpr const char* kSystemPrompt =
    "You design machines from a fixed set of blocks. Reply with either a complete machine document in a "
    "```json fenced block, or edit commands inside <Modification Steps> tags.";

constexpr const char* kSingleAgent = R"(## Task
{task}

## Blocks
{catalog}

## Machine format
A JSON array of blocks in build order. Each entry has "type", "id" (its position in the array),
"parent" and "face_id"; the root is {"type": 0, "id": 0, "parent": -1, "face_id": -1}. Braces and
springs use "parent_a", "face_id_a", "parent_b", "face_id_b" instead of a single parent.

## Current machine (score {score})
```json
{machine}
```

## Simulation feedback
{feedback}

## Previous attempts
{history}

Return the complete improved machine inside one ```json fenced block.)";

constexpr const char* kRefiner = R"(## Task
{task}

## Blocks
{catalog}

## Current machine (score {score})
```json
{machine}
```

## Simulation feedback
{feedback}

## Previous attempts
{history}

Propose edits, one per line, inside <Modification Steps> and </Modification Steps>:
Add [type] to [id] in [face]
Add [type] to [id_a] in [face_a] to [id_b] in [face_b]
Remove [id]
Move [id] to [new_parent] in [face]
Only leaf blocks can be removed. Braces and springs cannot be moved.)";

std::mutex& template_mutex() {
  static std::mutex mu;
  return mu;
}

std::map<std::string, std::string>& template_registry() {
  static std::map<std::string, std::string> reg{{"single-agent", kSingleAgent}, {"refiner", kRefiner}};
  return reg;
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : std::move(fallback);
}

}  // namespace

RemoteEndpoint endpoint_from_env() {
  RemoteEndpoint e;
  e.base_url = env_or("MECHFORGE_ENDPOINT_URL", "");
  e.model = env_or("MECHFORGE_MODEL", "");
  e.token_env = env_or("MECHFORGE_TOKEN_ENV", e.token_env);
  e.timeout_seconds = std::stod(env_or("MECHFORGE_TIMEOUT", "120"));
  e.max_retries = std::stoi(env_or("MECHFORGE_MAX_RETRIES", "2"));
  e.max_in_flight = std::stoi(env_or("MECHFORGE_MAX_IN_FLIGHT", "4"));
  e.prompt_template = env_or("MECHFORGE_PROMPT", e.prompt_template);
  return e;
}

Json endpoint_to_json(const RemoteEndpoint& e) {
  Json j;
  j["base_url"] = e.base_url;
  j["model"] = e.model;
  j["token_env"] = e.token_env;
  j["timeout_seconds"] = e.timeout_seconds;
  j["max_retries"] = e.max_retries;
  j["prompt_template"] = e.prompt_template;
  j["max_in_flight"] = e.max_in_flight;
  j["temperature"] = e.temperature;
  return j;
}

ChatTransport http_transport(const RemoteEndpoint& endpoint) {
  return [endpoint](const Json& request) -> ChatReply {
    ChatReply reply;
    const std::string& url = endpoint.base_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      reply.error = "endpoint URL needs a scheme";
      return reply;
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string host = url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path.empty() && path.back() == '/') path.pop_back();
    path += "/chat/completions";

    httplib::Client client(host);
    const auto secs = static_cast<time_t>(endpoint.timeout_seconds);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (const char* token = std::getenv(endpoint.token_env.c_str()); token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    auto res = client.Post(path, headers, request.dump(), "application/json");
    if (!res) {
      reply.error = "request failed: " + httplib::to_string(res.error());
      return reply;
    }
    if (res->status != 200) {
      reply.error = "HTTP " + std::to_string(res->status);
      return reply;
    }
    try {
      const Json body = Json::parse(res->body);
      reply.text = body.at("choices").at(0).at("message").at("content").get<std::string>();
      reply.ok = true;
    } catch (const std::exception& e) {
      reply.error = std::string("unexpected response body: ") + e.what();
    }
    return reply;
  };
}

const std::map<std::string, std::string>& prompt_templates() { return template_registry(); }

void register_prompt_template(const std::string& id, std::string text) {
  std::lock_guard<std::mutex> lock(template_mutex());
  template_registry()[id] = std::move(text);
}

std::string catalog_summary() {
  std::ostringstream o;
  for (const BlockSpec& s : load_catalog()) {
    o << s.type_id << " " << s.name << ": size " << s.size.x() << "x" << s.size.y() << "x" << s.size.z()
      << ", mass " << s.mass << ", faces " << s.faces.size();
    if (s.is_linear()) o << ", two-point";
    if (s.has(BlockTag::PoweredWheel)) o << ", powered";
    o << "\n";
  }
  return o.str();
}

std::string render_prompt(const std::string& template_id, const GeneratorContext& ctx) {
  std::string text;
  {
    std::lock_guard<std::mutex> lock(template_mutex());
    const auto it = template_registry().find(template_id);
    if (it == template_registry().end()) throw std::invalid_argument("unknown prompt template " + template_id);
    text = it->second;
  }
  std::ostringstream history;
  for (const HistoryEntry& h : ctx.history) {
    history << "round " << h.round << ": score " << h.score << (h.valid ? "" : " (invalid)");
    if (!h.note.empty()) history << ", " << h.note;
    history << "\n";
  }
  std::ostringstream score;
  score << ctx.score;
  replace_all(text, "{task}", ctx.task_text);
  replace_all(text, "{catalog}", catalog_summary());
  replace_all(text, "{machine}", format_tree(ctx.machine));
  replace_all(text, "{feedback}", ctx.feedback ? format_feedback(*ctx.feedback) : "none yet");
  replace_all(text, "{score}", score.str());
  replace_all(text, "{history}", ctx.history.empty() ? "none" : history.str());
  return text;
}

GenerateResult interpret_reply(std::string_view reply, const ConstructionTree& current) {
  if (has_fence(reply)) {
    ParseResult pr = parse_tree(extract_fenced(reply));
    if (!pr.ok()) {
      const std::string why = pr.diagnostics.empty() ? "unparseable machine" : pr.diagnostics.front().message;
      return GenerateResult::failure(GenerateErrorKind::ParseFailed, why);
    }
    return GenerateResult::success(std::move(*pr.tree), "machine document");
  }
  if (const auto steps = extract_modification_steps(reply)) {
    const CommandParseResult cp = parse_commands(*steps);
    if (!cp.ok()) {
      const CommandSyntaxError& e = cp.errors.front();
      return GenerateResult::failure(GenerateErrorKind::ParseFailed,
                                     "line " + std::to_string(e.line) + ": " + e.text);
    }
    if (cp.commands.empty()) return GenerateResult::failure(GenerateErrorKind::ParseFailed, "no edit commands");
    try {
      ConstructionTree t = apply_edits(current, cp.commands);
      std::string note;
      for (const EditCommand& c : cp.commands) note += (note.empty() ? "" : "; ") + print_command(c);
      return GenerateResult::success(std::move(t), std::move(note));
    } catch (const EditError& e) {
      return GenerateResult::failure(GenerateErrorKind::ParseFailed, e.what());
    }
  }
  return GenerateResult::failure(GenerateErrorKind::NoMachineInResponse, "reply has no machine or edit steps");
}

GenerateResult llm_generate(const GeneratorContext& ctx, const RemoteEndpoint& endpoint, const ChatTransport& transport) {
  Json request;
  request["model"] = endpoint.model;
  request["temperature"] = endpoint.temperature;
  request["messages"] = Json::array({{{"role", "system"}, {"content", kSystemPrompt}},
                                     {{"role", "user"}, {"content", render_prompt(endpoint.prompt_template, ctx)}}});
  std::string last_error;
  for (int attempt = 0; attempt <= std::max(0, endpoint.max_retries); ++attempt) {
    const ChatReply reply = transport(request);
    if (reply.ok) return interpret_reply(reply.text, ctx.machine);
    last_error = reply.error;
  }
  return GenerateResult::failure(GenerateErrorKind::Transport, last_error);
}

LlmGenerator::LlmGenerator(RemoteEndpoint endpoint, ChatTransport transport)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {}

GenerateResult LlmGenerator::generate(const GeneratorContext& ctx, std::uint64_t seed) {
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < std::max(1, endpoint_.max_in_flight); });
    ++in_flight_;
  }
  struct Release {
    LlmGenerator* g;
    ~Release() {
      {
        std::lock_guard<std::mutex> lock(g->mu_);
        --g->in_flight_;
      }
      g->cv_.notify_one();
    }
  } release{this};

  ChatTransport transport = transport_;
  if (trace_) {
    transport = [this, inner = transport_](const Json& request) {
      trace_({{"request", request}});
      ChatReply r = inner(request);
      trace_({{"reply", r.ok ? r.text : ""}, {"error", r.error}});
      return r;
    };
  }
  // Some servers honour a sampling seed; pass ours through for repeatability.
  auto seeded = [&](const Json& request) {
    Json r = request;
    r["seed"] = static_cast<std::int64_t>(seed & 0x7fffffffffffffffULL);
    return transport(r);
  };
  return llm_generate(ctx, endpoint_, seeded);
}

}  // namespace mechforge
