// SPDX-License-Identifier: Apache-2.0
#include <huma/errors.hpp>
#include <huma/provider.hpp>
#include <huma/room.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <sstream>

namespace huma
{

using nlohmann::json;

class Room::AgentPortImpl final: public AgentPort
{
  public:
    AgentPortImpl(Room& room, Participant self): _room(room), _self(std::move(self)) {}

    ConversationState const& state() const override { return _room._state; }
    Participant const& self() const override { return _self; }

    MessageId sendMessage(std::string const& text, std::optional<MessageId> const& replyTo) override
    {
        return _room.postMessage(_self.id, text, replyTo);
    }

    void addReaction(MessageId const& target, std::string const& emoji) override
    {
        _room.addReaction(_self.id, target, emoji);
    }

    void setTyping(bool active) override { _room.typing(_self.id, active); }

    void storeReflection(std::string const& reflection) override { _room.recordReflection(reflection); }

  private:
    Room& _room;
    Participant _self;
};

Room::Room(RoomConfig config, Clock& clock):
    _config(std::move(config)), _clock(clock), _alive(std::make_shared<bool>(true))
{
    if (_config.id.empty())
        throw RoomError("invalid_room", "room id is empty");
    if (_config.capacity == 0)
        throw RoomError("invalid_room", "room capacity must be at least 1");

    if (_config.transcriptPath)
    {
        if (_config.transcriptPath->has_parent_path())
            std::filesystem::create_directories(_config.transcriptPath->parent_path());
        _file.emplace(*_config.transcriptPath, std::ios::out | std::ios::trunc);
        if (!*_file)
            throw ConfigError("cannot open transcript " + _config.transcriptPath->string());
    }

    if (_config.timer)
    {
        if (_config.timer->count() <= 0)
            throw RoomError("invalid_room", "timer must be positive");
        _deadline = _clock.now() + std::chrono::duration_cast<Millis>(*_config.timer);
        broadcast(timerFrame(_config.timer->count(), _clock.now(), _seq + 1), Origin::server);
        scheduleTimerTick();
    }
}

Room::~Room()
{
    _timer.cancel();
    _orchestrator.reset();
}

std::string Room::uniqueNickname(std::string const& requested) const
{
    auto const taken = [&](std::string const& name) {
        return std::ranges::any_of(_state.participants, [&](Participant const& p) { return p.nickname == name; });
    };
    if (!taken(requested))
        return requested;
    for (auto n = 2;; ++n)
    {
        auto candidate = requested + "-" + std::to_string(n);
        if (!taken(candidate))
            return candidate;
    }
}

Participant Room::join(std::string const& nickname)
{
    return addParticipant(nickname, false);
}

Participant Room::addParticipant(std::string const& nickname, bool isAgent)
{
    auto const trimmed = trim(nickname);
    if (trimmed.empty())
        throw RoomError("invalid_nickname", "nickname must not be empty");
    if (codePointCount(trimmed) > 40)
        throw RoomError("invalid_nickname", "nickname is longer than 40 characters");
    if (_state.participants.size() >= _config.capacity)
        throw RoomError("room_full", "room '" + _config.id + "' is full (" + std::to_string(_config.capacity) + ")");

    auto participant = Participant {
        ParticipantId { "p" + std::to_string(_nextParticipant) },
        uniqueNickname(trimmed),
        isAgent,
    };
    apply(ChatEvent { ParticipantJoined { participant }, _clock.now() }, isAgent ? Origin::agent : Origin::human);
    ++_nextParticipant;
    broadcast(rosterFrame(_state.participants, _clock.now(), _seq + 1), Origin::server);
    return participant;
}

MessageId Room::postMessage(ParticipantId const& author, std::string const& text, std::optional<MessageId> const& replyTo)
{
    auto message = Message {
        MessageId { "m" + std::to_string(_nextMessage) },
        author,
        text,
        replyTo,
        _clock.now(),
    };
    auto event = replyTo ? ChatEvent { ReplySent { message }, _clock.now() }
                         : ChatEvent { MessageSent { message }, _clock.now() };
    apply(event, Origin::human);
    ++_nextMessage;
    return message.id;
}

void Room::addReaction(ParticipantId const& participant, MessageId const& message, std::string const& emoji)
{
    apply(ChatEvent { ReactionAdded { Reaction { message, emoji, participant } }, _clock.now() }, Origin::human);
}

void Room::removeReaction(ParticipantId const& participant, MessageId const& message, std::string const& emoji)
{
    apply(ChatEvent { ReactionRemoved { Reaction { message, emoji, participant } }, _clock.now() }, Origin::human);
}

void Room::typing(ParticipantId const& participant, bool active)
{
    apply(ChatEvent { TypingStarted { participant, active }, _clock.now() }, Origin::human);
}

void Room::handleClientFrame(ParticipantId const& participant, json const& frame)
{
    if (!frame.is_object() || !frame.contains("type") || !frame["type"].is_string())
        throw RoomError("bad_frame", "frame must be an object with a string 'type'");
    auto const type = frame["type"].get<std::string>();
    auto const payload = frame.value("payload", json::object());
    if (!payload.is_object())
        throw RoomError("bad_frame", "payload must be an object");

    auto const str = [&](char const* key) {
        auto const it = payload.find(key);
        if (it == payload.end() || !it->is_string())
            throw RoomError("bad_frame", type + " frame needs string field '" + key + "'");
        return it->get<std::string>();
    };

    if (type == frame_type::Message)
        postMessage(participant, str("text"));
    else if (type == frame_type::Reply)
        postMessage(participant, str("text"), MessageId { str("target_message_id") });
    else if (type == frame_type::ReactionAdd)
        addReaction(participant, MessageId { str("target_message_id") }, str("emoji"));
    else if (type == frame_type::ReactionRemove)
        removeReaction(participant, MessageId { str("target_message_id") }, str("emoji"));
    else if (type == frame_type::Typing)
        typing(participant, payload.value("active", true));
    else
        throw RoomError("bad_frame", "clients cannot send '" + type + "' frames");
}

void Room::apply(ChatEvent const& event, Origin origin)
{
    if (_agentPort && event.actor() == _agentPort->self().id)
        origin = Origin::agent;

    applyEventInPlace(_state, event);
    broadcast(frameFromEvent(event, _seq + 1), origin);

    if (origin == Origin::human && _orchestrator)
    {
        auto alive = std::weak_ptr<bool>(_alive);
        _clock.post([this, alive, event] {
            if (!alive.expired() && _orchestrator)
                _orchestrator->onEvent(event);
        });
    }
}

void Room::broadcast(WireFrame const& frame, Origin origin)
{
    if (frame.seq != _seq + 1)
        throw std::logic_error("room frames must be numbered consecutively");
    _seq = frame.seq;

    auto record = TranscriptRecord { _clock.now(), origin, frame, std::nullopt };
    persist(record);
    _records.push_back(std::move(record));

    auto text = json(frame).dump();
    _frameTexts.push_back(text);

    // Sinks may unsubscribe themselves while being called.
    auto const subscribers = _subscribers;
    for (auto const& [id, sink]: subscribers)
        sink(frame, text);
}

void Room::persist(TranscriptRecord const& record)
{
    if (!_file)
        return;
    *_file << json(record).dump() << '\n';
    _file->flush();
    if (!*_file)
        spdlog::error("room {}: transcript write failed", _config.id);
}

void Room::recordReflection(std::string const& reflection)
{
    _state.lastReflection = reflection;
    auto record = TranscriptRecord { _clock.now(), Origin::agent, std::nullopt, reflection };
    persist(record);
    _records.push_back(std::move(record));
}

Room::SubscriberId Room::subscribe(FrameSink sink)
{
    auto const id = _nextSubscriber++;
    auto text = _frameTexts.begin();
    for (auto const& record: _records)
        if (record.frame)
            sink(*record.frame, *text++);
    _subscribers.emplace(id, std::move(sink));
    return id;
}

void Room::unsubscribe(SubscriberId id)
{
    _subscribers.erase(id);
}

Orchestrator& Room::attachAgent(AgentSetup setup)
{
    if (_orchestrator)
        throw RoomError("agent_attached", "room '" + _config.id + "' already has an agent");

    auto self = addParticipant(setup.nickname, true);
    _agentPort = std::make_unique<AgentPortImpl>(*this, self);
    if (setup.config.room == OrchestratorConfig {}.room)
        setup.config.room = _config.id;
    _orchestrator = std::make_unique<Orchestrator>(*_agentPort, _clock, setup.providers, setup.catalog, setup.prompts,
                                                   std::move(setup.config), std::move(setup.log));
    return *_orchestrator;
}

std::optional<ParticipantId> Room::agentId() const
{
    if (!_agentPort)
        return std::nullopt;
    return _agentPort->self().id;
}

std::string Room::transcriptJsonl() const
{
    auto out = std::ostringstream {};
    for (auto const& record: _records)
        out << json(record).dump() << '\n';
    return out.str();
}

std::optional<std::int64_t> Room::remainingSeconds() const
{
    if (!_deadline)
        return std::nullopt;
    auto const left = std::max(Millis { 0 }, *_deadline - _clock.now());
    return (left.count() + 999) / 1000;
}

void Room::scheduleTimerTick()
{
    auto const remaining = *remainingSeconds();
    if (remaining <= 0)
        return;
    auto const next = remaining > 10 ? std::max<std::int64_t>(((remaining - 1) / 60) * 60, 10) : remaining - 1;
    auto const due = *_deadline - Millis { next * 1000 };
    auto alive = std::weak_ptr<bool>(_alive);
    _timer = _clock.callAfter(due - _clock.now(), [this, alive, next] {
        if (alive.expired())
            return;
        broadcast(timerFrame(next, _clock.now(), _seq + 1), Origin::server);
        scheduleTimerTick();
    });
}

} // namespace huma
