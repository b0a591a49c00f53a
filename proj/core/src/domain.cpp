// SPDX-License-Identifier: Apache-2.0
#include <huma/domain.hpp>
#include <huma/errors.hpp>

#include <algorithm>
#include <array>
#include <sstream>

namespace huma
{

namespace
{

template <typename... Ts>
struct Overloaded: Ts...
{
    using Ts::operator()...;
};
template <typename... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr auto KindNames = std::array<std::string_view, 6> {
    "participant_joined", "message_sent", "reaction_added", "reaction_removed", "reply_sent", "typing_started",
};

void requireParticipant(ConversationState const& state, ParticipantId const& id, std::string_view what)
{
    if (!state.findParticipant(id))
        throw UnknownReference(std::string(what) + " references unknown participant '" + id.value + "'");
}

void validateMessage(ConversationState const& state, Message const& message, bool isReply)
{
    requireParticipant(state, message.author, "message");
    if (message.id.value.empty())
        throw InvalidEvent("message id is empty");
    if (isBlank(message.text))
        throw InvalidEvent("message '" + message.id.value + "' has empty text");
    if (state.findMessage(message.id))
        throw InvalidEvent("duplicate message id '" + message.id.value + "'");
    if (!state.history.empty() && message.sentAt < state.history.back().sentAt)
        throw InvalidEvent("message '" + message.id.value + "' is older than the latest message");
    if (isReply)
    {
        if (!message.replyTo)
            throw InvalidEvent("reply '" + message.id.value + "' has no parent");
        if (!state.findMessage(*message.replyTo))
            throw UnknownReference("reply '" + message.id.value + "' targets unknown message '"
                                   + message.replyTo->value + "'");
    }
    else if (message.replyTo)
    {
        throw InvalidEvent("message_sent '" + message.id.value + "' must not carry a parent; use reply_sent");
    }
}

void validate(ConversationState const& state, ChatEvent const& event)
{
    if (event.occurredAt < state.lastEventAt)
        throw InvalidEvent("event at " + std::to_string(event.occurredAt.count()) + " ms precedes last event at "
                           + std::to_string(state.lastEventAt.count()) + " ms");

    std::visit(Overloaded {
                   [&](ParticipantJoined const& e) {
                       if (e.participant.id.value.empty())
                           throw InvalidEvent("participant id is empty");
                       if (isBlank(e.participant.nickname))
                           throw InvalidEvent("participant '" + e.participant.id.value + "' has an empty nickname");
                       if (state.findParticipant(e.participant.id))
                           throw InvalidEvent("participant '" + e.participant.id.value + "' already joined");
                   },
                   [&](MessageSent const& e) { validateMessage(state, e.message, false); },
                   [&](ReplySent const& e) { validateMessage(state, e.message, true); },
                   [&](ReactionAdded const& e) {
                       requireParticipant(state, e.reaction.participant, "reaction");
                       if (!state.findMessage(e.reaction.messageId))
                           throw UnknownReference("reaction on unknown message '" + e.reaction.messageId.value + "'");
                       if (e.reaction.emoji.empty())
                           throw InvalidEvent("reaction has no emoji");
                       if (state.reactions.contains(e.reaction))
                           throw InvalidEvent("reaction " + e.reaction.emoji + " on '" + e.reaction.messageId.value
                                              + "' is already active");
                   },
                   [&](ReactionRemoved const& e) {
                       if (!state.reactions.contains(e.reaction))
                           throw UnknownReference("no active reaction " + e.reaction.emoji + " by '"
                                                  + e.reaction.participant.value + "' on '"
                                                  + e.reaction.messageId.value + "'");
                   },
                   [&](TypingStarted const& e) { requireParticipant(state, e.participant, "typing indicator"); },
               },
               event.payload);
}

void appendMessage(ConversationState& state, Message const& message)
{
    state.history.push_back(message);
    state.typing.erase(message.author);
}

} // namespace

ParticipantId const& ChatEvent::actor() const
{
    return std::visit(Overloaded {
                          [](ParticipantJoined const& e) -> ParticipantId const& { return e.participant.id; },
                          [](MessageSent const& e) -> ParticipantId const& { return e.message.author; },
                          [](ReplySent const& e) -> ParticipantId const& { return e.message.author; },
                          [](ReactionAdded const& e) -> ParticipantId const& { return e.reaction.participant; },
                          [](ReactionRemoved const& e) -> ParticipantId const& { return e.reaction.participant; },
                          [](TypingStarted const& e) -> ParticipantId const& { return e.participant; },
                      },
                      payload);
}

std::string_view toString(EventKind kind) noexcept
{
    return KindNames.at(static_cast<std::size_t>(kind));
}

std::optional<EventKind> eventKindFromString(std::string_view name) noexcept
{
    for (auto i = std::size_t { 0 }; i < KindNames.size(); ++i)
        if (KindNames[i] == name)
            return static_cast<EventKind>(i);
    return std::nullopt;
}

Participant const* ConversationState::findParticipant(ParticipantId const& id) const
{
    auto const it = std::ranges::find(participants, id, &Participant::id);
    return it == participants.end() ? nullptr : &*it;
}

Message const* ConversationState::findMessage(MessageId const& id) const
{
    // Lookups overwhelmingly target recent messages.
    auto const it = std::find_if(history.rbegin(), history.rend(), [&](Message const& m) { return m.id == id; });
    return it == history.rend() ? nullptr : &*it;
}

std::vector<ParticipantId> ConversationState::typingAt(Millis now) const
{
    auto result = std::vector<ParticipantId> {};
    for (auto const& [id, expiry]: typing)
        if (expiry > now)
            result.push_back(id);
    return result;
}

void applyEventInPlace(ConversationState& state, ChatEvent const& event)
{
    validate(state, event);

    // Nothing below throws except on allocation failure.
    std::erase_if(state.typing, [&](auto const& entry) { return entry.second <= event.occurredAt; });
    state.lastEventAt = event.occurredAt;

    std::visit(Overloaded {
                   [&](ParticipantJoined const& e) { state.participants.push_back(e.participant); },
                   [&](MessageSent const& e) { appendMessage(state, e.message); },
                   [&](ReplySent const& e) { appendMessage(state, e.message); },
                   [&](ReactionAdded const& e) { state.reactions.insert(e.reaction); },
                   [&](ReactionRemoved const& e) { state.reactions.erase(e.reaction); },
                   [&](TypingStarted const& e) {
                       if (e.active)
                           state.typing[e.participant] = event.occurredAt + TypingDecay;
                       else
                           state.typing.erase(e.participant);
                   },
               },
               event.payload);
}

ConversationState applyEvent(ConversationState const& state, ChatEvent const& event)
{
    auto next = state;
    applyEventInPlace(next, event);
    return next;
}

namespace
{

std::string singleLine(std::string_view text)
{
    auto out = std::string(text);
    std::ranges::replace(out, '\n', ' ');
    std::ranges::replace(out, '\r', ' ');
    return out;
}

std::string nicknameOf(ConversationState const& state, ParticipantId const& id)
{
    auto const* p = state.findParticipant(id);
    return p ? p->nickname : id.value;
}

} // namespace

std::string renderContext(ConversationState const& state, std::size_t limit, RenderOptions options)
{
    auto const count = std::min(limit, state.history.size());
    auto const begin = state.history.end() - static_cast<std::ptrdiff_t>(count);

    auto out = std::ostringstream {};
    for (auto it = begin; it != state.history.end(); ++it)
    {
        auto const& m = *it;
        if (options.withIds)
            out << '[' << m.id.value << "] ";
        out << nicknameOf(state, m.author) << ": ";
        if (m.replyTo)
        {
            auto const* parent = state.findMessage(*m.replyTo);
            auto const parentText = parent ? singleLine(parent->text) : std::string {};
            auto quote = codePointPrefix(parentText, options.quoteLength);
            auto const elided = quote.size() < parentText.size();
            while (elided && !quote.empty() && quote.back() == ' ')
                quote.remove_suffix(1);
            out << "↳ re: «" << quote << (elided ? "…" : "") << "» ";
        }
        out << singleLine(m.text);

        // Reactions are ordered (message, emoji, participant), so equal emojis are adjacent.
        auto const first = state.reactions.lower_bound(Reaction { m.id, {}, {} });
        auto emoji = std::string {};
        auto opened = false;
        for (auto r = first; r != state.reactions.end() && r->messageId == m.id; ++r)
        {
            if (!opened)
            {
                out << " (" << r->emoji << ' ';
                opened = true;
            }
            else if (r->emoji != emoji)
                out << "; " << r->emoji << ' ';
            else
                out << ", ";
            emoji = r->emoji;
            out << nicknameOf(state, r->participant);
        }
        if (opened)
            out << ')';
        out << '\n';
    }
    return out.str();
}

// --- serialization --------------------------------------------------------------------------

void to_json(nlohmann::json& j, Participant const& p)
{
    j = nlohmann::json { { "id", p.id.value }, { "nickname", p.nickname }, { "is_agent", p.isAgent } };
}

void from_json(nlohmann::json const& j, Participant& p)
{
    p.id = ParticipantId { j.at("id").get<std::string>() };
    p.nickname = j.at("nickname").get<std::string>();
    p.isAgent = j.value("is_agent", false);
}

void to_json(nlohmann::json& j, Message const& m)
{
    j = nlohmann::json {
        { "id", m.id.value },
        { "author", m.author.value },
        { "text", m.text },
        { "sent_at", m.sentAt.count() },
    };
    j["reply_to"] = m.replyTo ? nlohmann::json(m.replyTo->value) : nlohmann::json(nullptr);
}

void from_json(nlohmann::json const& j, Message& m)
{
    m.id = MessageId { j.at("id").get<std::string>() };
    m.author = ParticipantId { j.at("author").get<std::string>() };
    m.text = j.at("text").get<std::string>();
    m.sentAt = Millis { j.at("sent_at").get<std::int64_t>() };
    m.replyTo.reset();
    if (auto it = j.find("reply_to"); it != j.end() && !it->is_null())
        m.replyTo = MessageId { it->get<std::string>() };
}

void to_json(nlohmann::json& j, Reaction const& r)
{
    j = nlohmann::json {
        { "message_id", r.messageId.value },
        { "emoji", r.emoji },
        { "participant", r.participant.value },
    };
}

void from_json(nlohmann::json const& j, Reaction& r)
{
    r.messageId = MessageId { j.at("message_id").get<std::string>() };
    r.emoji = j.at("emoji").get<std::string>();
    r.participant = ParticipantId { j.at("participant").get<std::string>() };
}

void to_json(nlohmann::json& j, ChatEvent const& e)
{
    auto payload = std::visit(Overloaded {
                                  [](ParticipantJoined const& p) { return nlohmann::json(p.participant); },
                                  [](MessageSent const& p) { return nlohmann::json(p.message); },
                                  [](ReplySent const& p) { return nlohmann::json(p.message); },
                                  [](ReactionAdded const& p) { return nlohmann::json(p.reaction); },
                                  [](ReactionRemoved const& p) { return nlohmann::json(p.reaction); },
                                  [](TypingStarted const& p) {
                                      return nlohmann::json { { "participant", p.participant.value },
                                                              { "active", p.active } };
                                  },
                              },
                              e.payload);
    j = nlohmann::json {
        { "kind", std::string(toString(e.kind())) },
        { "payload", std::move(payload) },
        { "occurred_at", e.occurredAt.count() },
    };
}

void from_json(nlohmann::json const& j, ChatEvent& e)
{
    auto const name = j.at("kind").get<std::string>();
    auto const kind = eventKindFromString(name);
    if (!kind)
        throw InvalidEvent("unknown event kind '" + name + "'");
    auto const& p = j.at("payload");
    e.occurredAt = Millis { j.at("occurred_at").get<std::int64_t>() };
    switch (*kind)
    {
        case EventKind::participant_joined: e.payload = ParticipantJoined { p.get<Participant>() }; break;
        case EventKind::message_sent: e.payload = MessageSent { p.get<Message>() }; break;
        case EventKind::reaction_added: e.payload = ReactionAdded { p.get<Reaction>() }; break;
        case EventKind::reaction_removed: e.payload = ReactionRemoved { p.get<Reaction>() }; break;
        case EventKind::reply_sent: e.payload = ReplySent { p.get<Message>() }; break;
        case EventKind::typing_started:
            e.payload = TypingStarted { ParticipantId { p.at("participant").get<std::string>() },
                                        p.value("active", true) };
            break;
    }
}

nlohmann::json toCanonicalJson(ConversationState const& state)
{
    auto typing = nlohmann::json::object();
    for (auto const& [id, expiry]: state.typing)
        typing[id.value] = expiry.count();

    return nlohmann::json {
        { "participants", state.participants },
        { "history", state.history },
        { "reactions", nlohmann::json(std::vector<Reaction>(state.reactions.begin(), state.reactions.end())) },
        { "typing", std::move(typing) },
        { "last_reflection",
          state.lastReflection ? nlohmann::json(*state.lastReflection) : nlohmann::json(nullptr) },
        { "last_event_at", state.lastEventAt.count() },
    };
}

std::string canonicalDump(ConversationState const& state)
{
    return toCanonicalJson(state).dump();
}

// --- text helpers ---------------------------------------------------------------------------

namespace
{

bool isContinuation(unsigned char c) noexcept
{
    return (c & 0xC0U) == 0x80U;
}

} // namespace

std::size_t codePointCount(std::string_view utf8) noexcept
{
    return static_cast<std::size_t>(
        std::ranges::count_if(utf8, [](char c) { return !isContinuation(static_cast<unsigned char>(c)); }));
}

std::string_view codePointPrefix(std::string_view utf8, std::size_t count) noexcept
{
    auto seen = std::size_t { 0 };
    for (auto i = std::size_t { 0 }; i < utf8.size(); ++i)
    {
        if (isContinuation(static_cast<unsigned char>(utf8[i])))
            continue;
        if (seen == count)
            return utf8.substr(0, i);
        ++seen;
    }
    return utf8;
}

std::string_view codePointSuffix(std::string_view utf8, std::size_t count) noexcept
{
    auto const total = codePointCount(utf8);
    if (count >= total)
        return utf8;
    auto const prefix = codePointPrefix(utf8, total - count);
    return utf8.substr(prefix.size());
}

bool isBlank(std::string_view text) noexcept
{
    return std::ranges::all_of(text, [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
}

} // namespace huma
