// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/clock.hpp>

#include <nlohmann/json.hpp>

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace huma
{

template <typename Tag>
struct StrongId
{
    std::string value;

    StrongId() = default;
    explicit StrongId(std::string v): value(std::move(v)) {}

    auto operator<=>(StrongId const&) const = default;
    bool operator==(StrongId const&) const = default;
};

using ParticipantId = StrongId<struct ParticipantTag>;
using MessageId = StrongId<struct MessageTag>;

/// How long a typing indicator stays visible without a refresh.
inline constexpr Millis TypingDecay { 6000 };

struct Participant
{
    ParticipantId id;
    std::string nickname;
    bool isAgent = false;

    bool operator==(Participant const&) const = default;
};

struct Message
{
    MessageId id;
    ParticipantId author;
    std::string text;
    std::optional<MessageId> replyTo;
    Millis sentAt { 0 };

    bool operator==(Message const&) const = default;
};

struct Reaction
{
    MessageId messageId;
    std::string emoji;
    ParticipantId participant;

    auto operator<=>(Reaction const&) const = default;
    bool operator==(Reaction const&) const = default;
};

// One payload type per event kind; the variant index is the kind.
struct ParticipantJoined
{
    Participant participant;
};
struct MessageSent
{
    Message message;
};
struct ReactionAdded
{
    Reaction reaction;
};
struct ReactionRemoved
{
    Reaction reaction;
};
struct ReplySent
{
    Message message;
};
/// `active == false` clears the indicator before its decay (used when a typist abandons a message).
struct TypingStarted
{
    ParticipantId participant;
    bool active = true;
};

enum class EventKind
{
    participant_joined,
    message_sent,
    reaction_added,
    reaction_removed,
    reply_sent,
    typing_started,
};

using EventPayload =
    std::variant<ParticipantJoined, MessageSent, ReactionAdded, ReactionRemoved, ReplySent, TypingStarted>;

struct ChatEvent
{
    EventPayload payload;
    Millis occurredAt { 0 };

    [[nodiscard]] EventKind kind() const noexcept { return static_cast<EventKind>(payload.index()); }

    /// The participant that caused the event.
    [[nodiscard]] ParticipantId const& actor() const;
};

[[nodiscard]] std::string_view toString(EventKind kind) noexcept;
[[nodiscard]] std::optional<EventKind> eventKindFromString(std::string_view name) noexcept;

struct ConversationState
{
    std::vector<Participant> participants; // join order
    std::vector<Message> history;          // ordered by sentAt
    std::set<Reaction> reactions;
    std::map<ParticipantId, Millis> typing; // participant -> indicator expiry
    std::optional<std::string> lastReflection;
    Millis lastEventAt { 0 };

    [[nodiscard]] Participant const* findParticipant(ParticipantId const& id) const;
    [[nodiscard]] Message const* findMessage(MessageId const& id) const;

    /// Participants whose typing indicator is still live at `now`.
    [[nodiscard]] std::vector<ParticipantId> typingAt(Millis now) const;

    bool operator==(ConversationState const&) const = default;
};

/// Returns `state` with exactly the effect of `event` applied.
///
/// Throws UnknownReference when the event names a missing participant, message or reaction and
/// InvalidEvent for malformed, duplicate or out-of-order events.
[[nodiscard]] ConversationState applyEvent(ConversationState const& state, ChatEvent const& event);

/// In-place variant of applyEvent with the strong exception guarantee.
void applyEventInPlace(ConversationState& state, ChatEvent const& event);

struct RenderOptions
{
    /// Prefix each line with "[<message id>] " so tools can target messages.
    bool withIds = false;
    /// Parent quote length in characters before eliding with "…".
    std::size_t quoteLength = 40;
};

/// Renders the newest `limit` messages one per line as "nickname: text".
///
/// Replies carry a "↳ re: «parent snippet» " prefix before their text and active reactions
/// follow their message as " (👍 alice, bob; 🎉 carol)", emojis in byte order.
[[nodiscard]] std::string renderContext(ConversationState const& state, std::size_t limit, RenderOptions options = {});

// --- serialization --------------------------------------------------------------------------

void to_json(nlohmann::json& j, Participant const& p);
void from_json(nlohmann::json const& j, Participant& p);
void to_json(nlohmann::json& j, Message const& m);
void from_json(nlohmann::json const& j, Message& m);
void to_json(nlohmann::json& j, Reaction const& r);
void from_json(nlohmann::json const& j, Reaction& r);
void to_json(nlohmann::json& j, ChatEvent const& e);
void from_json(nlohmann::json const& j, ChatEvent& e);

/// Canonical serialized form (sorted keys, deterministic element order).
[[nodiscard]] nlohmann::json toCanonicalJson(ConversationState const& state);
[[nodiscard]] std::string canonicalDump(ConversationState const& state);

// --- text helpers ---------------------------------------------------------------------------

/// Number of Unicode code points in a UTF-8 string. Invalid bytes count as one each.
[[nodiscard]] std::size_t codePointCount(std::string_view utf8) noexcept;

/// The first `count` code points of `utf8`.
[[nodiscard]] std::string_view codePointPrefix(std::string_view utf8, std::size_t count) noexcept;

/// The last `count` code points of `utf8`.
[[nodiscard]] std::string_view codePointSuffix(std::string_view utf8, std::size_t count) noexcept;

[[nodiscard]] bool isBlank(std::string_view text) noexcept;

} // namespace huma
