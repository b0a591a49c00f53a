// SPDX-License-Identifier: Apache-2.0
#include <huma/action.hpp>
#include <huma/errors.hpp>
#include <huma/prompt_pack.hpp>

#include <spdlog/spdlog.h>

#include <sstream>

namespace huma
{

TypingSpeed::TypingSpeed(int wpm): _wpm(wpm)
{
    if (wpm < MinWpm || wpm > MaxWpm)
        throw ConfigError("typing speed " + std::to_string(wpm) + " wpm is outside [" + std::to_string(MinWpm) + ", "
                          + std::to_string(MaxWpm) + "]");
}

Millis typingDuration(std::string_view text, TypingSpeed speed)
{
    // chars / 5 / wpm * 60000 == chars * 12000 / wpm, computed exactly in integers.
    auto const chars = static_cast<std::int64_t>(codePointCount(text));
    auto const wpm = static_cast<std::int64_t>(speed.wpm());
    return Millis { (chars * 12000 * 2 + wpm) / (2 * wpm) };
}

TypingPlan TypingPlan::make(std::string text, TypingSpeed speed)
{
    auto const duration = typingDuration(text, speed);
    return TypingPlan { std::move(text), duration };
}

void Scratchpad::append(std::string_view notes, Millis at)
{
    auto const trimmed = trim(notes);
    if (trimmed.empty())
        return;
    if (!_notes.empty())
        _notes += '\n';
    _notes += trimmed;
    if (codePointCount(_notes) > Capacity)
        _notes = std::string(codePointSuffix(_notes, Capacity));
    _updatedAt = at;
}

std::vector<Verdict> validateTurn(Turn const& turn)
{
    auto verdicts = std::vector<Verdict> {};
    verdicts.reserve(turn.calls.size());
    auto sent = false;
    for (auto const& call: turn.calls)
    {
        if (!producesMessage(call.tool()))
            verdicts.push_back(Verdict {});
        else if (!sent)
        {
            sent = true;
            verdicts.push_back(Verdict {});
        }
        else
            verdicts.push_back(Verdict { false, SequentialSendError });
    }
    return verdicts;
}

std::string_view toString(ActionStatus status) noexcept
{
    switch (status)
    {
        case ActionStatus::completed: return "completed";
        case ActionStatus::completed_silent: return "completed_silent";
        case ActionStatus::interrupted: return "interrupted";
        case ActionStatus::failed: return "failed";
    }
    return "unknown";
}

std::string renderPendingWork(PendingWork const& pending)
{
    auto out = std::ostringstream {};
    out << "You were interrupted while carrying out '" << pending.interruptedStrategy
        << "'. These actions were NOT performed:\n";
    for (auto const& call: pending.intendedCalls)
        out << "- " << call.describe() << '\n';
    return out.str();
}

// --- ActionAgent ----------------------------------------------------------------------------

namespace
{

struct TurnExecution
{
    TurnOutcome outcome;
    std::optional<ToolCall> message;
    TimerHandle deliveryTimer;
    TimerHandle refreshTimer;
    CancelToken interrupt;
    std::size_t listener = 0;
    std::function<void(TurnOutcome)> done;
    bool finished = false;
};

void scheduleRefresh(std::shared_ptr<TurnExecution> const& exec, Clock& clock, AgentPort& port, Millis every,
                     std::weak_ptr<bool> alive)
{
    exec->refreshTimer = clock.callAfter(every, [exec, &clock, &port, every, alive] {
        if (alive.expired() || exec->finished)
            return;
        port.setTyping(true);
        scheduleRefresh(exec, clock, port, every, alive);
    });
}

} // namespace

struct ActionAgent::Run
{
    Strategy strategy;
    ActionContext context;
    Scratchpad* scratchpad = nullptr;
    CancelToken interrupt;
    std::function<void(ActionOutcome)> done;
    ActionOutcome outcome;
    std::vector<std::string> log;
};

ActionAgent::ActionAgent(AgentPort& port, Clock& clock, ProviderChannel& provider, PromptPack const& prompts,
                         ActionConfig config):
    _port(port),
    _clock(clock),
    _provider(provider),
    _prompts(prompts),
    _config(std::move(config)),
    _alive(std::make_shared<bool>(true))
{
    if (_config.maxTurns == 0)
        throw ConfigError("max_turns must be at least 1");
    if (_config.typingRefresh <= Millis { 0 })
        throw ConfigError("typing refresh interval must be positive");
}

ActionAgent::~ActionAgent() = default;

ToolResult ActionAgent::applyImmediate(ToolCall const& call)
{
    try
    {
        _port.addReaction(*call.target(), call.emoji());
        return ToolResult { call, true, "reacted" };
    }
    catch (UnknownReference const& e)
    {
        return ToolResult { call, false, std::string("error: ") + e.what() };
    }
    catch (InvalidEvent const& e)
    {
        return ToolResult { call, false, std::string("error: ") + e.what() };
    }
}

void ActionAgent::executeTurn(Turn const& turn, std::vector<Verdict> const& verdicts, CancelToken interrupt,
                              std::function<void(TurnOutcome)> done)
{
    if (verdicts.size() != turn.calls.size())
        throw std::invalid_argument("one verdict per tool call required");

    auto exec = std::make_shared<TurnExecution>();
    exec->interrupt = interrupt;
    exec->done = std::move(done);

    for (auto i = std::size_t { 0 }; i < turn.calls.size(); ++i)
    {
        auto const& call = turn.calls[i];
        if (!verdicts[i].accepted)
        {
            exec->outcome.results.push_back(ToolResult { call, false, verdicts[i].error });
            continue;
        }
        if (producesMessage(call.tool()))
        {
            if (exec->message)
                throw std::invalid_argument("turn has more than one accepted message; validate it first");
            exec->message = call;
            continue;
        }
        try
        {
            exec->outcome.results.push_back(applyImmediate(call));
        }
        catch (DeliveryError const& e)
        {
            exec->outcome.status = ActionStatus::failed;
            exec->outcome.failure = e.what();
            exec->done(std::move(exec->outcome));
            return;
        }
    }

    if (!exec->message)
    {
        exec->done(std::move(exec->outcome));
        return;
    }

    // An interrupt that queued while the provider was generating takes effect here, before typing.
    if (interrupt.cancelled())
    {
        exec->outcome.status = ActionStatus::interrupted;
        exec->outcome.undelivered.push_back(*exec->message);
        exec->done(std::move(exec->outcome));
        return;
    }

    auto const plan = TypingPlan::make(exec->message->text(), _config.speed);
    if (_typingObserver)
        _typingObserver(plan.duration);
    _port.setTyping(true);

    auto alive = std::weak_ptr<bool>(_alive);
    if (plan.duration > _config.typingRefresh)
        scheduleRefresh(exec, _clock, _port, _config.typingRefresh, alive);

    exec->listener = interrupt.onCancel([this, exec, alive] {
        if (alive.expired() || exec->finished)
            return;
        exec->finished = true;
        exec->deliveryTimer.cancel();
        exec->refreshTimer.cancel();
        _port.setTyping(false);
        exec->outcome.status = ActionStatus::interrupted;
        exec->outcome.undelivered.push_back(*exec->message);
        exec->done(std::move(exec->outcome));
    });

    exec->deliveryTimer = _clock.callAfter(plan.duration, [this, exec, alive] {
        if (alive.expired() || exec->finished)
            return;
        exec->finished = true;
        exec->refreshTimer.cancel();
        exec->interrupt.removeListener(exec->listener);

        auto const& call = *exec->message;
        auto const replyTo = call.tool() == Tool::send_reply ? call.target() : std::nullopt;
        try
        {
            auto const id = _port.sendMessage(call.text(), replyTo);
            exec->outcome.results.push_back(ToolResult { call, true, "delivered as " + id.value });
        }
        catch (UnknownReference const& e)
        {
            _port.setTyping(false);
            exec->outcome.results.push_back(ToolResult { call, false, std::string("error: ") + e.what() });
        }
        catch (InvalidEvent const& e)
        {
            _port.setTyping(false);
            exec->outcome.results.push_back(ToolResult { call, false, std::string("error: ") + e.what() });
        }
        catch (DeliveryError const& e)
        {
            exec->outcome.status = ActionStatus::failed;
            exec->outcome.failure = e.what();
        }
        exec->done(std::move(exec->outcome));
    });
}

void ActionAgent::runStrategy(Strategy const& strategy, ActionContext context, Scratchpad& scratchpad,
                              CancelToken interrupt, std::function<void(ActionOutcome)> done)
{
    auto run = std::make_shared<Run>();
    run->strategy = strategy;
    run->context = std::move(context);
    run->scratchpad = &scratchpad;
    run->interrupt = std::move(interrupt);
    run->done = std::move(done);

    if (strategy.id == strategy_ids::KeepSilent)
    {
        finish(run, ActionStatus::completed_silent);
        return;
    }

    if (strategy.id == strategy_ids::ContinuePending && run->context.pending)
    {
        auto const turn = Turn { run->context.pending->intendedCalls };
        auto const verdicts = validateTurn(turn);
        auto alive = std::weak_ptr<bool>(_alive);
        executeTurn(turn, verdicts, run->interrupt, [this, run, alive](TurnOutcome t) {
            if (alive.expired())
                return;
            run->outcome.results = std::move(t.results);
            run->outcome.undelivered = std::move(t.undelivered);
            finish(run, t.status, t.failure);
        });
        return;
    }

    nextProviderTurn(run);
}

void ActionAgent::nextProviderTurn(std::shared_ptr<Run> run)
{
    if (run->outcome.providerTurns >= _config.maxTurns)
    {
        finish(run, ActionStatus::completed);
        return;
    }
    if (run->outcome.providerTurns > 0 && run->interrupt.cancelled())
    {
        finish(run, ActionStatus::interrupted);
        return;
    }

    ++run->outcome.providerTurns;

    auto transcript = run->context.render ? run->context.render() : std::string {};
    if (!run->log.empty())
    {
        transcript += "## Your actions in this run\n";
        for (auto const& line: run->log)
            transcript += line + '\n';
    }

    auto request = ProviderRequest {
        .role = "action",
        .instruction = _prompts.render("action",
                                       {
                                           { "agent_name", _config.agentName },
                                           { "strategy_name", run->strategy.name },
                                           { "strategy_description", run->strategy.description },
                                           { "max_turns", std::to_string(_config.maxTurns) },
                                       }),
        .transcript = std::move(transcript),
        .kind = ResponseKind::tool_turn,
        .tools = toolSchemas(),
    };

    auto alive = std::weak_ptr<bool>(_alive);
    _provider.submit(std::move(request), [this, run, alive](ProviderResult result) {
        if (alive.expired())
            return;
        onProviderTurn(run, std::move(result));
    });
}

void ActionAgent::onProviderTurn(std::shared_ptr<Run> run, ProviderResult result)
{
    if (auto const* error = std::get_if<ProviderError>(&result))
    {
        spdlog::warn("action: provider failed during '{}': {}", run->strategy.id, error->what());
        finish(run, ActionStatus::failed, error->what());
        return;
    }
    auto const& response = std::get<ProviderResponse>(result);
    if (response.kind() != ResponseKind::tool_turn)
    {
        finish(run, ActionStatus::failed, "provider answered a tool request with " + std::string(toString(response.kind())));
        return;
    }

    run->scratchpad->append(response.notes, _clock.now());

    auto const& turn = response.turn();
    if (turn.calls.empty())
    {
        finish(run, run->interrupt.cancelled() ? ActionStatus::interrupted : ActionStatus::completed);
        return;
    }

    auto const verdicts = validateTurn(turn);
    auto const turnNumber = run->outcome.providerTurns;
    auto alive = std::weak_ptr<bool>(_alive);
    executeTurn(turn, verdicts, run->interrupt, [this, run, alive, turnNumber](TurnOutcome t) {
        if (alive.expired())
            return;
        for (auto& r: t.results)
        {
            run->log.push_back("turn " + std::to_string(turnNumber) + ": " + r.call.describe() + " -> " + r.detail);
            run->outcome.results.push_back(std::move(r));
        }
        switch (t.status)
        {
            case ActionStatus::interrupted:
                run->outcome.undelivered = std::move(t.undelivered);
                finish(run, ActionStatus::interrupted);
                return;
            case ActionStatus::failed: finish(run, ActionStatus::failed, t.failure); return;
            case ActionStatus::completed:
            case ActionStatus::completed_silent: nextProviderTurn(run); return;
        }
    });
}

void ActionAgent::finish(std::shared_ptr<Run> const& run, ActionStatus status, std::string failure)
{
    run->outcome.status = status;
    run->outcome.failure = std::move(failure);
    auto done = std::move(run->done);
    done(std::move(run->outcome));
}

} // namespace huma
