// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/domain.hpp>
#include <huma/orchestrator.hpp>
#include <huma/scripted_provider.hpp>
#include <huma/strategy.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace huma
{

struct Persona
{
    std::string id;
    std::string nickname;
    std::string description;
};

enum class ScenarioAction
{
    join,
    message,
    reply,
    reaction_add,
    reaction_remove,
    typing,
};

[[nodiscard]] std::string_view toString(ScenarioAction action) noexcept;

/// One timeline entry. `target` names a message: a label given to an earlier entry, "@last" for
/// the newest message in the room, or "@agent_last" for the agent's newest message.
struct ScenarioStep
{
    Millis at { 0 };
    std::string persona;
    ScenarioAction action = ScenarioAction::message;
    std::string text;
    std::string target;
    std::string emoji;
    std::optional<std::string> label;
    bool active = true;
};

/// A scripted conversation. JSON form:
///
///   {"seed": 7,
///    "agent": {"nickname": "Mia", "wpm": 70},
///    "room_timer_seconds": 600,
///    "catalog": [...],
///    "personas": [{"id": "ana", "nickname": "ana", "description": "..."}],
///    "timeline": [{"at_ms": 0, "persona": "ana", "kind": "join"},
///                 {"at_ms": 800, "persona": "ana", "kind": "message", "text": "hi", "label": "q1"},
///                 {"at_ms": 900, "persona": "ana", "kind": "reaction_add", "target": "q1", "emoji": "👍"}],
///    "provider_script": [rule, ...]}
struct Scenario
{
    std::uint64_t seed = 0;
    std::string agentNickname = "Mia";
    int wpm = TypingSpeed::DefaultWpm;
    std::optional<std::chrono::seconds> roomTimer;
    std::optional<StrategyCatalog> catalog;
    std::vector<Persona> personas;
    std::vector<ScenarioStep> timeline;
    std::vector<ScriptRule> providerScript;

    /// Throws ConfigError naming the first problem: unsorted timeline, unknown persona, a
    /// persona acting before joining, or a label used before it is defined.
    static Scenario fromJson(nlohmann::json const& j);
    static Scenario load(std::filesystem::path const& path);
};

struct SimReport
{
    std::size_t runs = 0;
    std::map<std::string, std::size_t> strategyCounts;
    /// Strategy chosen by each run that reached selection, in order.
    std::vector<std::string> selections;
    std::size_t interruptionCount = 0;
    std::size_t failedRuns = 0;
    /// Share of selections that chose keep_silent; 0 when nothing was selected.
    double silenceRate = 0.0;
    std::vector<std::int64_t> typingDurations;
    std::size_t reflections = 0;
    std::size_t participants = 0;
    std::size_t messages = 0;
    std::size_t reactions = 0;
    std::size_t frames = 0;
    std::optional<std::string> transcript;
};

void to_json(nlohmann::json& j, SimReport const& report);

struct SimOptions
{
    std::optional<std::filesystem::path> transcriptPath;
    /// Receives every orchestrator log record as it is produced.
    LogSink log;
};

struct SimResult
{
    SimReport report;
    ConversationState finalState;
    std::string transcriptJsonl;
    std::vector<nlohmann::json> logRecords;
    nlohmann::json callLog;
};

/// Runs the scenario against the full agent stack on a virtual clock until no work remains.
/// Identical scenarios produce identical reports and transcripts.
///
/// Throws ScriptExhausted (after logging the unanswered request) when the provider script runs
/// dry, and ConfigError for timeline references that do not resolve at run time.
[[nodiscard]] SimResult simulate(Scenario const& scenario, SimOptions const& options = {});

/// Builds the report fields that come from the orchestrator log stream.
[[nodiscard]] SimReport reportFromLog(std::vector<nlohmann::json> const& records);

} // namespace huma
