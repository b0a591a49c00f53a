// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/action.hpp>
#include <huma/clock.hpp>
#include <huma/domain.hpp>
#include <huma/provider.hpp>
#include <huma/strategy.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace huma
{

class PromptPack;

enum class Stage
{
    idle,
    routing,
    acting,
    reflecting,
};

enum class RunOutcome
{
    completed,
    interrupted,
    failed,
};

[[nodiscard]] std::string_view toString(Stage stage) noexcept;
[[nodiscard]] std::string_view toString(RunOutcome outcome) noexcept;

struct WorkflowState
{
    Stage stage = Stage::idle;
    std::optional<ChatEvent> currentEvent;
    std::optional<PendingWork> pending;
};

/// Bounded FIFO of events waiting for the workflow. Overflow drops the oldest entry.
class InterruptQueue
{
  public:
    static constexpr std::size_t DefaultCapacity = 256;

    explicit InterruptQueue(std::size_t capacity = DefaultCapacity);

    /// Returns true if an old event was dropped to make room.
    bool push(ChatEvent event);
    [[nodiscard]] std::deque<ChatEvent> drain();

    [[nodiscard]] bool empty() const noexcept { return _entries.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return _entries.size(); }
    [[nodiscard]] std::size_t capacity() const noexcept { return _capacity; }

  private:
    std::size_t _capacity;
    std::deque<ChatEvent> _entries;
};

/// Backends per pipeline stage; all three may be the same channel.
struct ProviderChannels
{
    ProviderChannel& router;
    ProviderChannel& action;
    ProviderChannel& reflection;
};

struct OrchestratorConfig
{
    std::string room = "room";
    std::size_t contextLimit = 50;
    std::size_t queueCapacity = InterruptQueue::DefaultCapacity;
    ActionConfig action {};
};

/// Receives one structured record per stage transition (plus typing and warning records).
/// Every record carries room, run_id, event, at and interrupted.
using LogSink = std::function<void(nlohmann::json const&)>;

struct OrchestratorStats
{
    std::uint64_t runs = 0;
    std::uint64_t selections = 0;
    std::uint64_t completed = 0;
    std::uint64_t interrupted = 0;
    std::uint64_t failed = 0;
    std::uint64_t reflections = 0;
    std::uint64_t droppedEvents = 0;
};

/// Runs routing -> acting -> reflecting for a room's agent, one run at a time.
///
/// Interrupt rules: an event that arrives while the agent is idle starts a run; one that arrives
/// during a typing wait cancels the wait and restarts at routing with the undelivered calls kept
/// as PendingWork; one that arrives while a provider call is in flight waits in the queue until
/// the call returns, and all queued events are coalesced into a single restart. Events authored
/// by the agent are ignored.
class Orchestrator
{
  public:
    Orchestrator(AgentPort& port, Clock& clock, ProviderChannels providers, StrategyCatalog const& catalog,
                 PromptPack const& prompts, OrchestratorConfig config = {}, LogSink log = {});
    ~Orchestrator();

    Orchestrator(Orchestrator const&) = delete;
    Orchestrator& operator=(Orchestrator const&) = delete;

    /// `event` must already be applied to the port's state.
    void onEvent(ChatEvent const& event);

    [[nodiscard]] Stage stage() const noexcept { return _stage; }
    [[nodiscard]] WorkflowState workflowState() const;
    [[nodiscard]] bool providerInFlight() const noexcept { return _inFlight; }
    [[nodiscard]] std::size_t queuedEvents() const noexcept { return _queue.size(); }

    [[nodiscard]] ActivationHistory const& activations() const noexcept { return _activations; }
    [[nodiscard]] Scratchpad const& scratchpad() const noexcept { return _scratchpad; }
    [[nodiscard]] std::optional<PendingWork> const& pending() const noexcept { return _pending; }
    [[nodiscard]] OrchestratorStats const& stats() const noexcept { return _stats; }

    /// The context block shown to every provider call of the current run.
    [[nodiscard]] std::string renderRunContext() const;

  private:
    class GatedChannel;

    void startRun();
    void onScores(ProviderResult result);
    void act(Strategy const& strategy, std::optional<PendingWork> consumed);
    void onActionDone(ActionOutcome outcome, std::string strategyId, std::optional<PendingWork> consumed);
    void reflect(ActionOutcome const& outcome);
    void onReflection(ProviderResult result);
    void finishRun(RunOutcome outcome);
    void enterStage(Stage stage);
    void log(nlohmann::json record);

    AgentPort& _port;
    Clock& _clock;
    StrategyCatalog const& _catalog;
    PromptPack const& _prompts;
    OrchestratorConfig _config;
    LogSink _log;

    std::unique_ptr<GatedChannel> _router;
    std::unique_ptr<GatedChannel> _action;
    std::unique_ptr<GatedChannel> _reflection;
    std::unique_ptr<ActionAgent> _agent;

    Stage _stage = Stage::idle;
    InterruptQueue _queue;
    std::optional<ChatEvent> _currentEvent;
    std::optional<PendingWork> _pending;
    ActivationHistory _activations;
    Scratchpad _scratchpad;
    CancelToken _interrupt;
    bool _inFlight = false;
    bool _runInterrupted = false;
    std::optional<std::string> _runStrategy;
    std::string _lastActionSummary;
    std::uint64_t _runId = 0;
    OrchestratorStats _stats;
    std::shared_ptr<bool> _alive;
};

/// One-line description of an event for prompts ("bob replied to m3", ...).
[[nodiscard]] std::string describeEvent(ChatEvent const& event, ConversationState const& state);

} // namespace huma
