// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/clock.hpp>
#include <huma/domain.hpp>
#include <huma/orchestrator.hpp>
#include <huma/wire.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace huma
{

struct RoomConfig
{
    std::string id;
    std::size_t capacity = 8;
    /// Countdown length; frames go out every minute and each of the last ten seconds.
    std::optional<std::chrono::seconds> timer;
    /// JSONL transcript file, appended as frames are broadcast.
    std::optional<std::filesystem::path> transcriptPath;
};

struct AgentSetup
{
    std::string nickname;
    ProviderChannels providers;
    StrategyCatalog const& catalog;
    PromptPack const& prompts;
    OrchestratorConfig config {};
    LogSink log {};
};

/// Receives each broadcast frame together with its serialized text.
using FrameSink = std::function<void(WireFrame const& frame, std::string const& text)>;

/// A chat room's authoritative state: applies participant actions as domain events, assigns ids
/// and seq numbers, persists every frame before fanning it out, and feeds human events to the
/// attached agent. Not thread-safe: all calls must come from the room's clock thread.
class Room
{
  public:
    Room(RoomConfig config, Clock& clock);
    ~Room();

    Room(Room const&) = delete;
    Room& operator=(Room const&) = delete;

    [[nodiscard]] std::string const& id() const noexcept { return _config.id; }
    [[nodiscard]] RoomConfig const& config() const noexcept { return _config; }
    [[nodiscard]] ConversationState const& state() const noexcept { return _state; }
    [[nodiscard]] std::uint64_t lastSeq() const noexcept { return _seq; }

    /// Adds a participant, suffixing the nickname on collision ("alice-2"). Throws RoomError
    /// with code "room_full" or "invalid_nickname".
    Participant join(std::string const& nickname);

    MessageId postMessage(ParticipantId const& author, std::string const& text,
                          std::optional<MessageId> const& replyTo = std::nullopt);
    void addReaction(ParticipantId const& participant, MessageId const& message, std::string const& emoji);
    void removeReaction(ParticipantId const& participant, MessageId const& message, std::string const& emoji);
    void typing(ParticipantId const& participant, bool active = true);

    /// Applies an inbound client frame ({"type": ..., "payload": {...}}) on behalf of
    /// `participant`. Throws RoomError("bad_frame") for malformed frames; domain errors
    /// (UnknownReference, InvalidEvent) propagate.
    void handleClientFrame(ParticipantId const& participant, nlohmann::json const& frame);

    using SubscriberId = std::uint64_t;

    /// Replays every frame broadcast so far to `sink`, then streams live frames.
    SubscriberId subscribe(FrameSink sink);
    void unsubscribe(SubscriberId id);

    /// Adds the agent as an ordinary participant and starts its workflow with the room's current
    /// history. Throws RoomError("agent_attached") if one is already present.
    Orchestrator& attachAgent(AgentSetup setup);
    [[nodiscard]] Orchestrator* agent() noexcept { return _orchestrator.get(); }
    [[nodiscard]] std::optional<ParticipantId> agentId() const;

    [[nodiscard]] std::vector<TranscriptRecord> const& transcript() const noexcept { return _records; }
    [[nodiscard]] std::string transcriptJsonl() const;

    /// Seconds left on the countdown, if one is running.
    [[nodiscard]] std::optional<std::int64_t> remainingSeconds() const;

  private:
    class AgentPortImpl;

    void apply(ChatEvent const& event, Origin origin);
    void broadcast(WireFrame const& frame, Origin origin);
    void persist(TranscriptRecord const& record);
    void scheduleTimerTick();
    void recordReflection(std::string const& reflection);
    Participant addParticipant(std::string const& nickname, bool isAgent);
    std::string uniqueNickname(std::string const& requested) const;

    RoomConfig _config;
    Clock& _clock;
    ConversationState _state;
    std::uint64_t _seq = 0;
    std::uint64_t _nextParticipant = 1;
    std::uint64_t _nextMessage = 1;
    std::vector<TranscriptRecord> _records;
    std::vector<std::string> _frameTexts;
    std::map<SubscriberId, FrameSink> _subscribers;
    SubscriberId _nextSubscriber = 1;
    std::optional<std::ofstream> _file;

    std::optional<Millis> _deadline;
    TimerHandle _timer;

    std::unique_ptr<AgentPortImpl> _agentPort;
    std::unique_ptr<Orchestrator> _orchestrator;
    std::shared_ptr<bool> _alive;
};

} // namespace huma
