// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/provider.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace huma
{

/// One scripted answer.
///
/// JSON form:
///   {"kind": "score_map", "contains": "leonardo", "times": 2, "latency_ms": 800,
///    "scores": {"ask_question": 0.9}, "default": 0.1}
///   {"kind": "tool_turn", "calls": [{"tool": "send_message", "arguments": {"text": "hey"}}],
///    "notes": "scratchpad text"}
///   {"kind": "sentence", "text": "..."}
///   {"kind": "...", "raw": "<backend text parsed like a live response>"}
///   {"kind": "...", "error": "transport" | "parse" | "backend"}
///
/// "contains" is matched against the request transcript and "instruction_contains" against the
/// instruction (which names the strategy for action requests).
/// "times" defaults to 1; "unlimited": true never exhausts. "latency_ms" may be a number or a
/// [min, max] range sampled from the provider's seeded generator.
struct ScriptRule
{
    ResponseKind kind = ResponseKind::sentence;
    std::optional<std::string> contains;
    std::optional<std::string> instructionContains;
    std::size_t times = 1;
    bool unlimited = false;
    Millis latencyMin { 0 };
    Millis latencyMax { 0 };
    nlohmann::json reply;

    static ScriptRule fromJson(nlohmann::json const& j);
};

/// Deterministic provider answering from an ordered rule list. For each request it uses the
/// first rule of the request's kind that still has uses left and whose substring matchers (if
/// any) occur in the request. Every request is appended to the call log.
class ScriptedProvider final: public Provider
{
  public:
    explicit ScriptedProvider(std::vector<ScriptRule> rules, std::uint64_t seed = 0);

    /// Accepts either an array of rules or {"rules": [...]}.
    static std::vector<ScriptRule> rulesFromJson(nlohmann::json const& j);
    static ScriptedProvider fromJson(nlohmann::json const& j, std::uint64_t seed = 0);

    /// Throws ScriptExhausted when no rule matches, or ProviderError for scripted failures.
    ProviderResponse complete(ProviderRequest const& request) override;

    [[nodiscard]] std::vector<ProviderRequest> callLog() const;
    [[nodiscard]] nlohmann::json callLogJson() const;
    [[nodiscard]] std::size_t callCount() const;

  private:
    struct Slot
    {
        ScriptRule rule;
        std::size_t used = 0;
    };

    ProviderResponse build(ScriptRule const& rule, ProviderRequest const& request);

    mutable std::mutex _mutex;
    std::vector<Slot> _slots;
    std::vector<ProviderRequest> _log;
    std::mt19937_64 _rng;
};

/// Parses a raw backend answer for `kind` the way a live backend does: score maps leniently,
/// sentences verbatim, tool turns from {"calls": [...], "notes": "..."}.
[[nodiscard]] ProviderResponse parseRawResponse(ResponseKind kind, std::string const& raw);

} // namespace huma
