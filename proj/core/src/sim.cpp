// SPDX-License-Identifier: Apache-2.0
#include <huma/errors.hpp>
#include <huma/prompt_pack.hpp>
#include <huma/room.hpp>
#include <huma/sim.hpp>

#include <spdlog/spdlog.h>

#include <fstream>
#include <set>

namespace huma
{

using nlohmann::json;

namespace
{

constexpr std::pair<ScenarioAction, std::string_view> ActionNames[] = {
    { ScenarioAction::join, "join" },
    { ScenarioAction::message, "message" },
    { ScenarioAction::reply, "reply" },
    { ScenarioAction::reaction_add, "reaction_add" },
    { ScenarioAction::reaction_remove, "reaction_remove" },
    { ScenarioAction::typing, "typing" },
};

ScenarioAction actionFromString(std::string const& name, std::size_t index)
{
    for (auto const& [action, text]: ActionNames)
        if (text == name)
            return action;
    throw ConfigError("timeline[" + std::to_string(index) + "]: unknown kind '" + name + "'");
}

bool isSpecialTarget(std::string const& target)
{
    return target == "@last" || target == "@agent_last";
}

ScenarioStep stepFromJson(json const& j, std::size_t index)
{
    auto const where = "timeline[" + std::to_string(index) + "]";
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    auto step = ScenarioStep {};
    auto const at = j.value("at_ms", std::int64_t { -1 });
    if (at < 0)
        throw ConfigError(where + ": at_ms must be a non-negative integer");
    step.at = Millis { at };
    step.persona = j.value("persona", "");
    step.action = actionFromString(j.value("kind", "message"), index);
    step.text = j.value("text", "");
    step.target = j.value("target", "");
    step.emoji = j.value("emoji", "");
    step.active = j.value("active", true);
    if (j.contains("label"))
        step.label = j.at("label").get<std::string>();

    switch (step.action)
    {
        case ScenarioAction::message:
            if (isBlank(step.text))
                throw ConfigError(where + ": message needs text");
            break;
        case ScenarioAction::reply:
            if (isBlank(step.text) || step.target.empty())
                throw ConfigError(where + ": reply needs text and target");
            break;
        case ScenarioAction::reaction_add:
        case ScenarioAction::reaction_remove:
            if (step.emoji.empty() || step.target.empty())
                throw ConfigError(where + ": reaction needs emoji and target");
            break;
        case ScenarioAction::join:
        case ScenarioAction::typing: break;
    }
    if (step.label && step.action != ScenarioAction::message && step.action != ScenarioAction::reply)
        throw ConfigError(where + ": only messages and replies can carry a label");
    return step;
}

} // namespace

std::string_view toString(ScenarioAction action) noexcept
{
    for (auto const& [a, text]: ActionNames)
        if (a == action)
            return text;
    return "unknown";
}

Scenario Scenario::fromJson(json const& j)
{
    if (!j.is_object())
        throw ConfigError("scenario must be a JSON object");

    auto scenario = Scenario {};
    scenario.seed = j.value("seed", std::uint64_t { 0 });

    if (auto const it = j.find("agent"); it != j.end())
    {
        scenario.agentNickname = it->value("nickname", scenario.agentNickname);
        scenario.wpm = it->value("wpm", scenario.wpm);
    }
    (void)TypingSpeed(scenario.wpm);

    if (auto const it = j.find("room_timer_seconds"); it != j.end() && !it->is_null())
    {
        auto const seconds = it->get<std::int64_t>();
        if (seconds <= 0)
            throw ConfigError("room_timer_seconds must be positive");
        scenario.roomTimer = std::chrono::seconds { seconds };
    }

    if (auto const it = j.find("catalog"); it != j.end() && !it->is_null())
    {
        auto catalog = StrategyCatalog::fromJson(*it);
        auto const report = validateCatalog(catalog);
        if (!report.ok())
            throw CatalogError("scenario catalog: " + report.errors.front());
        scenario.catalog = std::move(catalog);
    }

    auto ids = std::set<std::string> {};
    for (auto const& p: j.value("personas", json::array()))
    {
        auto persona = Persona { p.at("id").get<std::string>(), "", p.value("description", "") };
        persona.nickname = p.value("nickname", persona.id);
        if (persona.id.empty() || !ids.insert(persona.id).second)
            throw ConfigError("persona ids must be unique and non-empty: '" + persona.id + "'");
        scenario.personas.push_back(std::move(persona));
    }

    auto joined = std::set<std::string> {};
    auto labels = std::set<std::string> {};
    auto const timeline = j.value("timeline", json::array());
    for (std::size_t i = 0; i < timeline.size(); ++i)
    {
        auto step = stepFromJson(timeline[i], i);
        auto const where = "timeline[" + std::to_string(i) + "]";
        if (!scenario.timeline.empty() && step.at < scenario.timeline.back().at)
            throw ConfigError(where + ": timeline is not sorted by at_ms");
        if (!ids.contains(step.persona))
            throw ConfigError(where + ": unknown persona '" + step.persona + "'");
        if (step.action == ScenarioAction::join)
        {
            if (!joined.insert(step.persona).second)
                throw ConfigError(where + ": persona '" + step.persona + "' joins twice");
        }
        else if (!joined.contains(step.persona))
            throw ConfigError(where + ": persona '" + step.persona + "' acts before joining");
        if (!step.target.empty() && !isSpecialTarget(step.target) && !labels.contains(step.target))
            throw ConfigError(where + ": unknown message label '" + step.target + "'");
        if (step.label && !labels.insert(*step.label).second)
            throw ConfigError(where + ": duplicate label '" + *step.label + "'");
        scenario.timeline.push_back(std::move(step));
    }

    if (auto const it = j.find("provider_script"); it != j.end())
    {
        scenario.providerScript = ScriptedProvider::rulesFromJson(*it);
    }
    return scenario;
}

Scenario Scenario::load(std::filesystem::path const& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw ConfigError("cannot open scenario " + path.string());
    auto j = json {};
    try
    {
        in >> j;
    }
    catch (json::parse_error const& e)
    {
        throw ConfigError("scenario " + path.string() + ": " + e.what());
    }
    return fromJson(j);
}

void to_json(json& j, SimReport const& report)
{
    j = json {
        { "runs", report.runs },
        { "strategy_counts", report.strategyCounts },
        { "selections", report.selections },
        { "interruption_count", report.interruptionCount },
        { "failed_runs", report.failedRuns },
        { "silence_rate", report.silenceRate },
        { "typing_durations", report.typingDurations },
        { "reflections", report.reflections },
        { "participants", report.participants },
        { "messages", report.messages },
        { "reactions", report.reactions },
        { "frames", report.frames },
        { "transcript", report.transcript ? json(*report.transcript) : json(nullptr) },
    };
}

SimReport reportFromLog(std::vector<json> const& records)
{
    auto report = SimReport {};
    for (auto const& r: records)
    {
        auto const event = r.value("event", "");
        if (event == "trigger")
            ++report.runs;
        else if (event == "selected")
        {
            auto const id = r.at("strategy").get<std::string>();
            ++report.strategyCounts[id];
            report.selections.push_back(id);
        }
        else if (event == "typing")
            report.typingDurations.push_back(r.at("duration_ms").get<std::int64_t>());
        else if (event == "reflection")
            ++report.reflections;
        else if (event == "run_end")
        {
            auto const outcome = r.value("outcome", "");
            if (outcome == "interrupted")
                ++report.interruptionCount;
            else if (outcome == "failed")
                ++report.failedRuns;
        }
    }
    if (!report.selections.empty())
    {
        auto const silent = report.strategyCounts.find(std::string(strategy_ids::KeepSilent));
        auto const count = silent == report.strategyCounts.end() ? 0 : silent->second;
        report.silenceRate = static_cast<double>(count) / static_cast<double>(report.selections.size());
    }
    return report;
}

SimResult simulate(Scenario const& scenario, SimOptions const& options)
{
    auto clock = VirtualClock {};
    auto provider = ScriptedProvider(scenario.providerScript, scenario.seed);
    auto channel = InlineChannel(provider, clock);
    auto const& catalog = scenario.catalog ? *scenario.catalog : defaultCatalog();

    auto result = SimResult {};
    auto room = Room(RoomConfig {
                         .id = "sim",
                         .capacity = scenario.personas.size() + 1,
                         .timer = scenario.roomTimer,
                         .transcriptPath = options.transcriptPath,
                     },
                     clock);

    auto config = OrchestratorConfig { .room = "sim" };
    config.action.speed = TypingSpeed(scenario.wpm);
    room.attachAgent(AgentSetup {
        .nickname = scenario.agentNickname,
        .providers = ProviderChannels { channel, channel, channel },
        .catalog = catalog,
        .prompts = PromptPack::builtin(),
        .config = config,
        .log =
            [&](json const& record) {
                result.logRecords.push_back(record);
                if (options.log)
                    options.log(record);
            },
    });
    auto const agent = *room.agentId();

    auto participants = std::map<std::string, ParticipantId> {};
    auto labels = std::map<std::string, MessageId> {};

    auto const resolve = [&](std::string const& target) {
        auto const& state = room.state();
        if (target == "@last" || target == "@agent_last")
        {
            for (auto it = state.history.rbegin(); it != state.history.rend(); ++it)
                if (target == "@last" || it->author == agent)
                    return it->id;
            throw ConfigError("timeline target " + target + " has no message to refer to");
        }
        return labels.at(target);
    };

    for (auto const& step: scenario.timeline)
    {
        clock.callAfter(step.at, [&, step] {
            auto const nickname = [&] {
                for (auto const& p: scenario.personas)
                    if (p.id == step.persona)
                        return p.nickname;
                return step.persona;
            };
            switch (step.action)
            {
                case ScenarioAction::join: participants.emplace(step.persona, room.join(nickname()).id); break;
                case ScenarioAction::message:
                {
                    auto const id = room.postMessage(participants.at(step.persona), step.text);
                    if (step.label)
                        labels.emplace(*step.label, id);
                    break;
                }
                case ScenarioAction::reply:
                {
                    auto const id = room.postMessage(participants.at(step.persona), step.text, resolve(step.target));
                    if (step.label)
                        labels.emplace(*step.label, id);
                    break;
                }
                case ScenarioAction::reaction_add:
                    room.addReaction(participants.at(step.persona), resolve(step.target), step.emoji);
                    break;
                case ScenarioAction::reaction_remove:
                    room.removeReaction(participants.at(step.persona), resolve(step.target), step.emoji);
                    break;
                case ScenarioAction::typing: room.typing(participants.at(step.persona), step.active); break;
            }
        });
    }

    try
    {
        clock.runUntilIdle();
    }
    catch (ScriptExhausted const& e)
    {
        auto const calls = provider.callLogJson();
        spdlog::error("simulation aborted: {}", e.what());
        if (!calls.empty())
            spdlog::error("unanswered request: {}", calls.back().dump());
        throw;
    }

    result.report = reportFromLog(result.logRecords);
    auto const& state = room.state();
    result.report.participants = state.participants.size();
    result.report.messages = state.history.size();
    result.report.reactions = state.reactions.size();
    result.report.frames = room.lastSeq();
    if (options.transcriptPath)
        result.report.transcript = options.transcriptPath->string();
    result.finalState = state;
    result.transcriptJsonl = room.transcriptJsonl();
    result.callLog = provider.callLogJson();
    return result;
}

} // namespace huma
