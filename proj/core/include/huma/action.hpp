// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/clock.hpp>
#include <huma/domain.hpp>
#include <huma/provider.hpp>
#include <huma/strategy.hpp>
#include <huma/turn.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace huma
{

class PromptPack;

/// Words-per-minute typing rate, validated to the human range [50, 100] on construction.
class TypingSpeed
{
  public:
    static constexpr int MinWpm = 50;
    static constexpr int MaxWpm = 100;
    static constexpr int DefaultWpm = 70;

    /// Throws ConfigError outside [50, 100].
    explicit TypingSpeed(int wpm = DefaultWpm);

    [[nodiscard]] int wpm() const noexcept { return _wpm; }

    bool operator==(TypingSpeed const&) const = default;

  private:
    int _wpm;
};

/// Time to type `text`: one word is five characters (code points), so
/// round(chars / 5 / wpm * 60000) ms, rounding halves up.
[[nodiscard]] Millis typingDuration(std::string_view text, TypingSpeed speed);

struct TypingPlan
{
    std::string text;
    Millis duration { 0 };

    static TypingPlan make(std::string text, TypingSpeed speed);
};

/// Free-text reasoning buffer that outlives interruptions. Holds at most 4000 characters;
/// appending beyond that drops the oldest characters.
class Scratchpad
{
  public:
    static constexpr std::size_t Capacity = 4000;

    void append(std::string_view notes, Millis at);

    [[nodiscard]] std::string const& notes() const noexcept { return _notes; }
    [[nodiscard]] Millis updatedAt() const noexcept { return _updatedAt; }
    [[nodiscard]] bool empty() const noexcept { return _notes.empty(); }

    bool operator==(Scratchpad const&) const = default;

  private:
    std::string _notes;
    Millis _updatedAt { 0 };
};

struct Verdict
{
    bool accepted = true;
    std::string error;

    bool operator==(Verdict const&) const = default;
};

/// Error text returned to the model for the second and later message sends in one turn.
inline constexpr auto SequentialSendError =
    "error: only one send_message or send_reply is allowed per turn. This message was NOT sent. "
    "Send it in a separate, later turn.";

/// Accepts the first message-producing call and every reaction; rejects later message sends.
[[nodiscard]] std::vector<Verdict> validateTurn(Turn const& turn);

/// The agent's hands in the room. Implementations apply each action as a chat event authored by
/// the agent.
class AgentPort
{
  public:
    virtual ~AgentPort() = default;

    [[nodiscard]] virtual ConversationState const& state() const = 0;
    [[nodiscard]] virtual Participant const& self() const = 0;

    /// Delivers a message or reply and returns its id. Throws UnknownReference for a bad reply
    /// target or DeliveryError if the channel fails.
    virtual MessageId sendMessage(std::string const& text, std::optional<MessageId> const& replyTo) = 0;
    virtual void addReaction(MessageId const& target, std::string const& emoji) = 0;
    virtual void setTyping(bool active) = 0;
    virtual void storeReflection(std::string const& reflection) = 0;
};

struct ToolResult
{
    ToolCall call;
    bool ok = true;
    std::string detail; // delivered message id, or the error text shown to the model
};

enum class ActionStatus
{
    completed,
    completed_silent,
    interrupted,
    failed,
};

[[nodiscard]] std::string_view toString(ActionStatus status) noexcept;

struct TurnOutcome
{
    ActionStatus status = ActionStatus::completed;
    std::vector<ToolResult> results;
    /// Accepted calls that were not delivered because of an interrupt.
    std::vector<ToolCall> undelivered;
    std::string failure;
};

/// Interrupted tool intentions carried into the next workflow run.
struct PendingWork
{
    Scratchpad scratchpad;
    std::vector<ToolCall> intendedCalls; // never empty
    std::string interruptedStrategy;
};

struct ActionContext
{
    /// Renders the current conversation context (transcript, reflection, scratchpad, pending
    /// work). Called before every provider turn so each turn sees what the previous one did.
    std::function<std::string()> render;
    std::optional<PendingWork> pending;
};

struct ActionOutcome
{
    ActionStatus status = ActionStatus::completed;
    std::vector<ToolResult> results;
    std::vector<ToolCall> undelivered;
    std::size_t providerTurns = 0;
    std::string failure;
};

struct ActionConfig
{
    TypingSpeed speed {};
    std::size_t maxTurns = 4;
    /// Typing indicators decay client-side, so a long wait re-announces typing this often.
    Millis typingRefresh { 4000 };
    std::string agentName = "you";
};

/// Executes one strategy: prompts the provider for tool turns, validates them, simulates typing
/// and delivers. One execution at a time; completion callbacks run on the clock.
class ActionAgent
{
  public:
    using TypingObserver = std::function<void(Millis duration)>;

    ActionAgent(AgentPort& port, Clock& clock, ProviderChannel& provider, PromptPack const& prompts,
                ActionConfig config = {});
    ~ActionAgent();

    ActionAgent(ActionAgent const&) = delete;
    ActionAgent& operator=(ActionAgent const&) = delete;

    /// Reactions are applied at once. The accepted message (if any) announces typing, waits its
    /// TypingPlan duration and is then delivered, unless `interrupt` fires first: then nothing is
    /// delivered, typing is cleared and the outcome is interrupted with the call undelivered.
    void executeTurn(Turn const& turn, std::vector<Verdict> const& verdicts, CancelToken interrupt,
                     std::function<void(TurnOutcome)> done);

    /// Runs the strategy's provider loop. Scratchpad notes returned by the provider are appended
    /// to `scratchpad` as soon as they arrive, so they survive interruptions.
    void runStrategy(Strategy const& strategy, ActionContext context, Scratchpad& scratchpad, CancelToken interrupt,
                     std::function<void(ActionOutcome)> done);

    void setTypingObserver(TypingObserver observer) { _typingObserver = std::move(observer); }

    [[nodiscard]] ActionConfig const& config() const noexcept { return _config; }

  private:
    struct Run;

    void nextProviderTurn(std::shared_ptr<Run> run);
    void onProviderTurn(std::shared_ptr<Run> run, ProviderResult result);
    void finish(std::shared_ptr<Run> const& run, ActionStatus status, std::string failure = {});
    ToolResult applyImmediate(ToolCall const& call);

    AgentPort& _port;
    Clock& _clock;
    ProviderChannel& _provider;
    PromptPack const& _prompts;
    ActionConfig _config;
    TypingObserver _typingObserver;
    std::shared_ptr<bool> _alive;
};

/// Text block describing interrupted intentions, shared by router and action prompts.
[[nodiscard]] std::string renderPendingWork(PendingWork const& pending);

} // namespace huma
