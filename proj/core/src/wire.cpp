// SPDX-License-Identifier: Apache-2.0
#include <huma/errors.hpp>
#include <huma/wire.hpp>

#include <algorithm>
#include <array>

namespace huma
{

using nlohmann::json;

bool isKnownFrameType(std::string_view type) noexcept
{
    static constexpr auto Types = std::array {
        frame_type::Join,   frame_type::Message, frame_type::Reply,  frame_type::ReactionAdd, frame_type::ReactionRemove,
        frame_type::Typing, frame_type::Timer,   frame_type::Roster, frame_type::Error,
    };
    return std::ranges::find(Types, type) != Types.end();
}

void to_json(json& j, WireFrame const& frame)
{
    j = json { { "type", frame.type }, { "seq", frame.seq }, { "payload", frame.payload } };
}

void from_json(json const& j, WireFrame& frame)
{
    frame.type = j.at("type").get<std::string>();
    frame.seq = j.at("seq").get<std::uint64_t>();
    frame.payload = j.at("payload");
}

namespace
{

json publicParticipant(Participant const& p)
{
    return json { { "id", p.id.value }, { "nickname", p.nickname } };
}

json wireMessage(Message const& m)
{
    auto j = json(m);
    j["delivered"] = true; // reserved; no read-receipt semantics yet
    return j;
}

} // namespace

WireFrame frameFromEvent(ChatEvent const& event, std::uint64_t seq)
{
    auto frame = WireFrame { {}, json::object(), seq };
    auto& p = frame.payload;
    switch (event.kind())
    {
        case EventKind::participant_joined:
            frame.type = frame_type::Join;
            p["participant"] = publicParticipant(std::get<ParticipantJoined>(event.payload).participant);
            break;
        case EventKind::message_sent:
            frame.type = frame_type::Message;
            p["message"] = wireMessage(std::get<MessageSent>(event.payload).message);
            break;
        case EventKind::reply_sent:
            frame.type = frame_type::Reply;
            p["message"] = wireMessage(std::get<ReplySent>(event.payload).message);
            break;
        case EventKind::reaction_added:
            frame.type = frame_type::ReactionAdd;
            p["reaction"] = std::get<ReactionAdded>(event.payload).reaction;
            break;
        case EventKind::reaction_removed:
            frame.type = frame_type::ReactionRemove;
            p["reaction"] = std::get<ReactionRemoved>(event.payload).reaction;
            break;
        case EventKind::typing_started:
        {
            auto const& t = std::get<TypingStarted>(event.payload);
            frame.type = frame_type::Typing;
            p["participant"] = t.participant.value;
            p["active"] = t.active;
            break;
        }
    }
    p["occurred_at"] = event.occurredAt.count();
    return frame;
}

std::optional<ChatEvent> eventFromFrame(WireFrame const& frame, bool isAgent)
{
    auto const& p = frame.payload;
    auto event = ChatEvent {};
    event.occurredAt = Millis { p.at("occurred_at").get<std::int64_t>() };

    if (frame.type == frame_type::Join)
    {
        auto participant = Participant {
            ParticipantId { p.at("participant").at("id").get<std::string>() },
            p.at("participant").at("nickname").get<std::string>(),
            isAgent,
        };
        event.payload = ParticipantJoined { std::move(participant) };
    }
    else if (frame.type == frame_type::Message)
        event.payload = MessageSent { p.at("message").get<Message>() };
    else if (frame.type == frame_type::Reply)
        event.payload = ReplySent { p.at("message").get<Message>() };
    else if (frame.type == frame_type::ReactionAdd)
        event.payload = ReactionAdded { p.at("reaction").get<Reaction>() };
    else if (frame.type == frame_type::ReactionRemove)
        event.payload = ReactionRemoved { p.at("reaction").get<Reaction>() };
    else if (frame.type == frame_type::Typing)
        event.payload = TypingStarted { ParticipantId { p.at("participant").get<std::string>() },
                                        p.value("active", true) };
    else
        return std::nullopt;
    return event;
}

WireFrame rosterFrame(std::vector<Participant> const& participants, Millis at, std::uint64_t seq)
{
    auto list = json::array();
    for (auto const& participant: participants)
        list.push_back(publicParticipant(participant));
    return WireFrame { std::string(frame_type::Roster),
                       json { { "participants", std::move(list) }, { "occurred_at", at.count() } }, seq };
}

WireFrame timerFrame(std::int64_t remainingSeconds, Millis at, std::uint64_t seq)
{
    return WireFrame { std::string(frame_type::Timer),
                       json { { "remaining_seconds", remainingSeconds }, { "occurred_at", at.count() } }, seq };
}

WireFrame errorFrame(std::string_view code, std::string_view message)
{
    return WireFrame { std::string(frame_type::Error), json { { "code", code }, { "message", message } }, 0 };
}

std::string_view toString(Origin origin) noexcept
{
    switch (origin)
    {
        case Origin::human: return "human";
        case Origin::agent: return "agent";
        case Origin::server: return "server";
    }
    return "unknown";
}

void to_json(json& j, TranscriptRecord const& record)
{
    j = json { { "received_at", record.receivedAt.count() }, { "origin", std::string(toString(record.origin)) } };
    if (record.frame)
        j["frame"] = *record.frame;
    if (record.reflection)
        j["reflection"] = *record.reflection;
}

TranscriptRecord transcriptRecordFromJson(json const& j)
{
    auto record = TranscriptRecord {};
    record.receivedAt = Millis { j.at("received_at").get<std::int64_t>() };
    auto const origin = j.at("origin").get<std::string>();
    if (origin == "human")
        record.origin = Origin::human;
    else if (origin == "agent")
        record.origin = Origin::agent;
    else if (origin == "server")
        record.origin = Origin::server;
    else
        throw std::invalid_argument("unknown origin '" + origin + "'");
    if (auto it = j.find("frame"); it != j.end())
        record.frame = it->get<WireFrame>();
    if (auto it = j.find("reflection"); it != j.end())
        record.reflection = it->get<std::string>();
    if (record.frame.has_value() == record.reflection.has_value())
        throw std::invalid_argument("record must hold exactly one of frame or reflection");
    return record;
}

ReplaySummary replayTranscript(std::istream& in)
{
    auto summary = ReplaySummary {};
    auto line = std::string {};
    auto number = std::size_t { 0 };
    while (std::getline(in, line))
    {
        ++number;
        if (line.empty())
            continue;

        auto record = TranscriptRecord {};
        try
        {
            record = transcriptRecordFromJson(json::parse(line));
        }
        catch (std::exception const& e)
        {
            throw TranscriptError(number, std::string("corrupt record: ") + e.what());
        }
        ++summary.records;

        if (record.reflection)
        {
            summary.state.lastReflection = *record.reflection;
            continue;
        }

        auto const& frame = *record.frame;
        if (!isKnownFrameType(frame.type) || frame.type == frame_type::Error)
            throw TranscriptError(number, "unexpected frame type '" + frame.type + "'");
        if (frame.seq != summary.lastSeq + 1)
            throw TranscriptError(number, "seq " + std::to_string(frame.seq) + " does not follow "
                                              + std::to_string(summary.lastSeq));
        summary.lastSeq = frame.seq;
        ++summary.frames;

        try
        {
            auto const event = eventFromFrame(frame, record.origin == Origin::agent);
            if (!event)
                continue;
            applyEventInPlace(summary.state, *event);
            if (event->kind() == EventKind::reaction_added || event->kind() == EventKind::reaction_removed)
                ++summary.reactionEvents;
        }
        catch (Error const& e)
        {
            throw TranscriptError(number, std::string("event does not apply: ") + e.what());
        }
        catch (json::exception const& e)
        {
            throw TranscriptError(number, std::string("malformed frame payload: ") + e.what());
        }
    }
    return summary;
}

} // namespace huma
