// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/action.hpp>
#include <huma/clock.hpp>
#include <huma/domain.hpp>
#include <huma/orchestrator.hpp>
#include <huma/prompt_pack.hpp>
#include <huma/room.hpp>
#include <huma/scripted_provider.hpp>
#include <huma/strategy.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace huma::test
{

inline std::filesystem::path dataDir()
{
    return HUMA_DATA_DIR;
}

inline std::filesystem::path fixtureDir()
{
    return HUMA_FIXTURE_DIR;
}

inline std::string readText(std::filesystem::path const& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    auto out = std::ostringstream {};
    out << in.rdbuf();
    return out.str();
}

inline nlohmann::json readJson(std::filesystem::path const& path)
{
    return nlohmann::json::parse(readText(path));
}

inline ParticipantId pid(std::string id)
{
    return ParticipantId { std::move(id) };
}

inline MessageId mid(std::string id)
{
    return MessageId { std::move(id) };
}

inline ChatEvent joined(std::string id, std::string nickname, Millis at = Millis { 0 }, bool isAgent = false)
{
    return ChatEvent { ParticipantJoined { Participant { pid(std::move(id)), std::move(nickname), isAgent } }, at };
}

inline ChatEvent said(std::string id, std::string author, std::string text, Millis at = Millis { 0 })
{
    return ChatEvent { MessageSent { Message { mid(std::move(id)), pid(std::move(author)), std::move(text),
                                               std::nullopt, at } },
                       at };
}

inline ChatEvent replied(std::string id, std::string author, std::string parent, std::string text,
                         Millis at = Millis { 0 })
{
    return ChatEvent { ReplySent { Message { mid(std::move(id)), pid(std::move(author)), std::move(text),
                                             mid(std::move(parent)), at } },
                       at };
}

inline ChatEvent reacted(std::string message, std::string emoji, std::string participant, Millis at = Millis { 0 })
{
    return ChatEvent { ReactionAdded { Reaction { mid(std::move(message)), std::move(emoji), pid(std::move(participant)) } },
                       at };
}

inline ChatEvent unreacted(std::string message, std::string emoji, std::string participant, Millis at = Millis { 0 })
{
    return ChatEvent {
        ReactionRemoved { Reaction { mid(std::move(message)), std::move(emoji), pid(std::move(participant)) } }, at
    };
}

inline ChatEvent typed(std::string participant, Millis at = Millis { 0 }, bool active = true)
{
    return ChatEvent { TypingStarted { pid(std::move(participant)), active }, at };
}

inline ConversationState fold(std::vector<ChatEvent> const& events, ConversationState state = {})
{
    for (auto const& e: events)
        state = applyEvent(state, e);
    return state;
}

/// AgentPort over a plain ConversationState; every action becomes an event at clock time.
class FakePort final: public AgentPort
{
  public:
    FakePort(Clock& clock, Participant self): _clock(clock), _self(std::move(self))
    {
        applyEventInPlace(_state, ChatEvent { ParticipantJoined { _self }, _clock.now() });
    }

    ConversationState const& state() const override { return _state; }
    Participant const& self() const override { return _self; }

    MessageId sendMessage(std::string const& text, std::optional<MessageId> const& replyTo) override
    {
        if (failDelivery)
            throw DeliveryError("channel down");
        auto message = Message { MessageId { "a" + std::to_string(++_sent) }, _self.id, text, replyTo, _clock.now() };
        if (replyTo)
            apply(ChatEvent { ReplySent { message }, _clock.now() });
        else
            apply(ChatEvent { MessageSent { message }, _clock.now() });
        delivered.push_back(message);
        return message.id;
    }

    void addReaction(MessageId const& target, std::string const& emoji) override
    {
        apply(ChatEvent { ReactionAdded { Reaction { target, emoji, _self.id } }, _clock.now() });
        reactions.push_back({ target, emoji, _self.id });
    }

    void setTyping(bool active) override
    {
        typingCalls.emplace_back(_clock.now(), active);
        if (active)
            apply(ChatEvent { TypingStarted { _self.id, true }, _clock.now() });
        else
            apply(ChatEvent { TypingStarted { _self.id, false }, _clock.now() });
    }

    void storeReflection(std::string const& reflection) override
    {
        _state.lastReflection = reflection;
        reflections.push_back(reflection);
    }

    /// Applies an outside event (another participant) to the shared state.
    void apply(ChatEvent const& event) { applyEventInPlace(_state, event); }

    std::vector<Message> delivered;
    std::vector<Reaction> reactions;
    std::vector<std::pair<Millis, bool>> typingCalls;
    std::vector<std::string> reflections;
    bool failDelivery = false;

  private:
    Clock& _clock;
    Participant _self;
    ConversationState _state;
    std::size_t _sent = 0;
};

/// Agent stack on a virtual clock: FakePort + scripted provider + orchestrator.
struct AgentRig
{
    explicit AgentRig(nlohmann::json script, StrategyCatalog const& catalog = defaultCatalog(),
                      OrchestratorConfig config = {}):
        provider(ScriptedProvider::fromJson(script)),
        channel(provider, clock),
        port(clock, Participant { pid("agent"), "Mia", true }),
        orchestrator(port, clock, ProviderChannels { channel, channel, channel }, catalog, PromptPack::builtin(),
                     std::move(config), [this](nlohmann::json const& r) { log.push_back(r); })
    {
    }

    /// Applies a human event and hands it to the orchestrator, as a room does.
    void human(ChatEvent const& event)
    {
        port.apply(event);
        orchestrator.onEvent(event);
    }

    std::vector<nlohmann::json> logEvents(std::string const& name) const
    {
        auto out = std::vector<nlohmann::json> {};
        for (auto const& r: log)
            if (r.value("event", "") == name)
                out.push_back(r);
        return out;
    }

    std::vector<ProviderRequest> requests(std::string const& role) const
    {
        auto out = std::vector<ProviderRequest> {};
        for (auto const& r: provider.callLog())
            if (r.role == role)
                out.push_back(r);
        return out;
    }

    VirtualClock clock;
    ScriptedProvider provider;
    InlineChannel channel;
    FakePort port;
    std::vector<nlohmann::json> log;
    Orchestrator orchestrator;
};

inline nlohmann::json scores(nlohmann::json map, double fallback = 0.0, bool unlimited = false, int latency = 0)
{
    auto rule = nlohmann::json { { "kind", "score_map" }, { "scores", std::move(map) }, { "default", fallback } };
    if (unlimited)
        rule["unlimited"] = true;
    if (latency)
        rule["latency_ms"] = latency;
    return rule;
}

inline nlohmann::json toolTurn(nlohmann::json calls, std::string notes = {}, int latency = 0, bool unlimited = false)
{
    auto rule = nlohmann::json { { "kind", "tool_turn" }, { "calls", std::move(calls) }, { "notes", std::move(notes) } };
    if (latency)
        rule["latency_ms"] = latency;
    if (unlimited)
        rule["unlimited"] = true;
    return rule;
}

inline nlohmann::json sendMessage(std::string text)
{
    return { { "tool", "send_message" }, { "arguments", { { "text", std::move(text) } } } };
}

inline nlohmann::json sendReply(std::string target, std::string text)
{
    return { { "tool", "send_reply" }, { "arguments", { { "target_message_id", std::move(target) }, { "text", std::move(text) } } } };
}

inline nlohmann::json addReaction(std::string target, std::string emoji)
{
    return { { "tool", "add_reaction" },
             { "arguments", { { "target_message_id", std::move(target) }, { "emoji", std::move(emoji) } } } };
}

inline nlohmann::json sentence(std::string text, bool unlimited = true, int latency = 0)
{
    auto rule = nlohmann::json { { "kind", "sentence" }, { "text", std::move(text) } };
    if (unlimited)
        rule["unlimited"] = true;
    if (latency)
        rule["latency_ms"] = latency;
    return rule;
}

inline nlohmann::json emptyTurns()
{
    return toolTurn(nlohmann::json::array(), {}, 0, true);
}

} // namespace huma::test
