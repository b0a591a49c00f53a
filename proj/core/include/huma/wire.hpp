// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/domain.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace huma
{

namespace frame_type
{
inline constexpr std::string_view Join = "join";
inline constexpr std::string_view Message = "message";
inline constexpr std::string_view Reply = "reply";
inline constexpr std::string_view ReactionAdd = "reaction_add";
inline constexpr std::string_view ReactionRemove = "reaction_remove";
inline constexpr std::string_view Typing = "typing";
inline constexpr std::string_view Timer = "timer";
inline constexpr std::string_view Roster = "roster";
inline constexpr std::string_view Error = "error";
} // namespace frame_type

[[nodiscard]] bool isKnownFrameType(std::string_view type) noexcept;

/// Server-to-client envelope: {"type": ..., "seq": n, "payload": {...}}. Room frames carry
/// seq >= 1, strictly increasing per room. Error frames are session-local and carry seq 0.
struct WireFrame
{
    std::string type;
    nlohmann::json payload = nlohmann::json::object();
    std::uint64_t seq = 0;

    bool operator==(WireFrame const&) const = default;
};

void to_json(nlohmann::json& j, WireFrame const& frame);
void from_json(nlohmann::json const& j, WireFrame& frame);

/// Projects a domain event onto the wire. Participant flags such as is_agent are never written.
[[nodiscard]] WireFrame frameFromEvent(ChatEvent const& event, std::uint64_t seq);

/// Inverse of frameFromEvent for the six domain frame types; nullopt for timer/roster/error.
/// `isAgent` restores the participant flag for join frames.
[[nodiscard]] std::optional<ChatEvent> eventFromFrame(WireFrame const& frame, bool isAgent = false);

[[nodiscard]] WireFrame rosterFrame(std::vector<Participant> const& participants, Millis at, std::uint64_t seq);
[[nodiscard]] WireFrame timerFrame(std::int64_t remainingSeconds, Millis at, std::uint64_t seq);
[[nodiscard]] WireFrame errorFrame(std::string_view code, std::string_view message);

enum class Origin
{
    human,
    agent,
    server,
};

[[nodiscard]] std::string_view toString(Origin origin) noexcept;

/// One transcript line: a broadcast frame, or an agent reflection annotation.
/// {"received_at": ms, "origin": "human"|"agent"|"server", "frame": {...}}
/// {"received_at": ms, "origin": "agent", "reflection": "..."}
struct TranscriptRecord
{
    Millis receivedAt { 0 };
    Origin origin = Origin::server;
    std::optional<WireFrame> frame;
    std::optional<std::string> reflection;
};

void to_json(nlohmann::json& j, TranscriptRecord const& record);
[[nodiscard]] TranscriptRecord transcriptRecordFromJson(nlohmann::json const& j);

struct ReplaySummary
{
    ConversationState state;
    std::size_t records = 0;
    std::size_t frames = 0;
    std::uint64_t lastSeq = 0;
    std::size_t reactionEvents = 0;
};

/// Folds a JSONL transcript back into a ConversationState. Throws TranscriptError naming the
/// offending line for unparsable records, non-contiguous seq, or events that do not apply.
[[nodiscard]] ReplaySummary replayTranscript(std::istream& in);

} // namespace huma
