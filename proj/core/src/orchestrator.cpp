// SPDX-License-Identifier: Apache-2.0
#include <huma/orchestrator.hpp>
#include <huma/prompt_pack.hpp>

#include <spdlog/spdlog.h>

#include <sstream>

namespace huma
{

using nlohmann::json;

std::string_view toString(Stage stage) noexcept
{
    switch (stage)
    {
        case Stage::idle: return "idle";
        case Stage::routing: return "routing";
        case Stage::acting: return "acting";
        case Stage::reflecting: return "reflecting";
    }
    return "unknown";
}

std::string_view toString(RunOutcome outcome) noexcept
{
    switch (outcome)
    {
        case RunOutcome::completed: return "completed";
        case RunOutcome::interrupted: return "interrupted";
        case RunOutcome::failed: return "failed";
    }
    return "unknown";
}

InterruptQueue::InterruptQueue(std::size_t capacity): _capacity(capacity)
{
    if (capacity == 0)
        throw ConfigError("interrupt queue capacity must be at least 1");
}

bool InterruptQueue::push(ChatEvent event)
{
    auto dropped = false;
    if (_entries.size() >= _capacity)
    {
        _entries.pop_front();
        dropped = true;
    }
    _entries.push_back(std::move(event));
    return dropped;
}

std::deque<ChatEvent> InterruptQueue::drain()
{
    return std::exchange(_entries, {});
}

std::string describeEvent(ChatEvent const& event, ConversationState const& state)
{
    auto const name = [&](ParticipantId const& id) {
        auto const* p = state.findParticipant(id);
        return p ? p->nickname : id.value;
    };
    auto out = std::ostringstream {};
    switch (event.kind())
    {
        case EventKind::participant_joined:
            out << std::get<ParticipantJoined>(event.payload).participant.nickname << " joined the chat";
            break;
        case EventKind::message_sent:
        {
            auto const& m = std::get<MessageSent>(event.payload).message;
            out << name(m.author) << " sent message " << m.id.value;
            break;
        }
        case EventKind::reply_sent:
        {
            auto const& m = std::get<ReplySent>(event.payload).message;
            out << name(m.author) << " replied to " << m.replyTo->value << " with message " << m.id.value;
            break;
        }
        case EventKind::reaction_added:
        {
            auto const& r = std::get<ReactionAdded>(event.payload).reaction;
            out << name(r.participant) << " reacted " << r.emoji << " to " << r.messageId.value;
            break;
        }
        case EventKind::reaction_removed:
        {
            auto const& r = std::get<ReactionRemoved>(event.payload).reaction;
            out << name(r.participant) << " removed their " << r.emoji << " reaction from " << r.messageId.value;
            break;
        }
        case EventKind::typing_started:
        {
            auto const& t = std::get<TypingStarted>(event.payload);
            out << name(t.participant) << (t.active ? " started typing" : " stopped typing");
            break;
        }
    }
    return out.str();
}

/// Marks provider calls as in flight and, when queued events are waiting as the call returns,
/// raises the run's interrupt so it takes effect at the next interruptible point.
class Orchestrator::GatedChannel final: public ProviderChannel
{
  public:
    GatedChannel(Orchestrator& owner, ProviderChannel& inner): _owner(owner), _inner(inner) {}

    void submit(ProviderRequest request, std::function<void(ProviderResult)> done) override
    {
        _owner._inFlight = true;
        auto alive = std::weak_ptr<bool>(_owner._alive);
        _inner.submit(std::move(request), [this, alive, done = std::move(done)](ProviderResult result) {
            if (alive.expired())
                return;
            _owner._inFlight = false;
            if (!_owner._queue.empty())
                _owner._interrupt.cancel();
            done(std::move(result));
        });
    }

  private:
    Orchestrator& _owner;
    ProviderChannel& _inner;
};

Orchestrator::Orchestrator(AgentPort& port, Clock& clock, ProviderChannels providers, StrategyCatalog const& catalog,
                           PromptPack const& prompts, OrchestratorConfig config, LogSink log):
    _port(port),
    _clock(clock),
    _catalog(catalog),
    _prompts(prompts),
    _config(std::move(config)),
    _log(std::move(log)),
    _router(std::make_unique<GatedChannel>(*this, providers.router)),
    _action(std::make_unique<GatedChannel>(*this, providers.action)),
    _reflection(std::make_unique<GatedChannel>(*this, providers.reflection)),
    _queue(_config.queueCapacity),
    _activations(catalog.size()),
    _alive(std::make_shared<bool>(true))
{
    if (_config.contextLimit == 0)
        throw ConfigError("context limit must be at least 1");
    if (_config.action.agentName == ActionConfig {}.agentName)
        _config.action.agentName = _port.self().nickname;
    _agent = std::make_unique<ActionAgent>(_port, _clock, *_action, _prompts, _config.action);
    _agent->setTypingObserver([this](Millis duration) {
        this->log(json { { "event", "typing" }, { "duration_ms", duration.count() } });
    });
}

Orchestrator::~Orchestrator() = default;

WorkflowState Orchestrator::workflowState() const
{
    return WorkflowState { _stage, _currentEvent, _pending };
}

void Orchestrator::onEvent(ChatEvent const& event)
{
    if (event.actor() == _port.self().id)
        return;

    if (_queue.push(event))
    {
        ++_stats.droppedEvents;
        spdlog::warn("room {}: interrupt queue full, dropped oldest event", _config.room);
        log(json { { "event", "queue_overflow" } });
    }

    if (_inFlight)
        return; // drained when the call returns

    switch (_stage)
    {
        case Stage::idle: startRun(); break;
        case Stage::acting: _interrupt.cancel(); break; // typing wait
        case Stage::routing:
        case Stage::reflecting: break;
    }
}

void Orchestrator::startRun()
{
    auto events = _queue.drain();
    _currentEvent = events.back();
    ++_runId;
    ++_stats.runs;
    _runInterrupted = false;
    _runStrategy.reset();
    _lastActionSummary.clear();
    _interrupt = CancelToken {};

    enterStage(Stage::routing);
    log(json {
        { "event", "trigger" },
        { "kind", std::string(toString(_currentEvent->kind())) },
        { "coalesced", events.size() },
    });

    auto request = buildScoringRequest(renderRunContext(), _catalog, _prompts, _config.action.agentName);
    auto alive = std::weak_ptr<bool>(_alive);
    _router->submit(std::move(request), [this, alive](ProviderResult result) {
        if (!alive.expired())
            onScores(std::move(result));
    });
}

void Orchestrator::onScores(ProviderResult result)
{
    if (!_queue.empty())
    {
        // New events arrived while the router was thinking; its answer is stale.
        _runInterrupted = true;
        finishRun(RunOutcome::interrupted);
        startRun();
        return;
    }

    auto const* response = std::get_if<ProviderResponse>(&result);
    if (!response || response->kind() != ResponseKind::score_map)
    {
        auto const reason = response ? std::string("wrong response kind")
                                     : std::string(std::get<ProviderError>(result).what());
        spdlog::warn("room {}: router unavailable ({}), keeping silent", _config.room, reason);
        log(json { { "event", "router_unavailable" }, { "reason", reason } });

        auto const* silent = _catalog.find(strategy_ids::KeepSilent);
        auto const fallback = silent ? *silent
                                     : Strategy { std::string(strategy_ids::KeepSilent), "Keep Silent",
                                                  "Say nothing.", true };
        act(fallback, std::exchange(_pending, std::nullopt));
        return;
    }

    auto scores = normalizeScores(response->scores(), _catalog, response->warnings);
    for (auto const& w: scores.warnings)
        spdlog::warn("room {}: router: {}", _config.room, w);
    if (!_pending && _catalog.find(strategy_ids::ContinuePending))
        scores.scores[std::string(strategy_ids::ContinuePending)] = 0.0;

    auto const decision = selectStrategy(scores.scores, _catalog, _activations);
    _activations.record(decision.strategy);
    ++_stats.selections;
    _runStrategy = decision.strategy;
    log(json {
        { "event", "selected" },
        { "appropriateness", decision.appropriateness },
        { "timeliness", decision.timeliness },
        { "combined", decision.combined },
    });

    act(_catalog.get(decision.strategy), std::exchange(_pending, std::nullopt));
}

void Orchestrator::act(Strategy const& strategy, std::optional<PendingWork> consumed)
{
    if (!_runStrategy)
        _runStrategy = strategy.id;
    enterStage(Stage::acting);

    auto context = ActionContext {
        .render = [this, consumed] {
            auto text = renderRunContext();
            if (consumed)
                text += "## Interrupted intentions\n" + renderPendingWork(*consumed);
            return text;
        },
        .pending = consumed,
    };
    auto alive = std::weak_ptr<bool>(_alive);
    _agent->runStrategy(strategy, std::move(context), _scratchpad, _interrupt,
                        [this, alive, id = strategy.id, consumed](ActionOutcome outcome) {
                            if (!alive.expired())
                                onActionDone(std::move(outcome), id, consumed);
                        });
}

void Orchestrator::onActionDone(ActionOutcome outcome, std::string strategyId, std::optional<PendingWork> consumed)
{
    auto summary = std::ostringstream {};
    if (outcome.status == ActionStatus::completed_silent)
        summary << "You stayed silent.\n";
    for (auto const& r: outcome.results)
        summary << "- " << r.call.describe() << " -> " << r.detail << '\n';
    _lastActionSummary = summary.str();

    switch (outcome.status)
    {
        case ActionStatus::interrupted:
            _runInterrupted = true;
            if (!outcome.undelivered.empty())
            {
                auto const origin = strategyId == strategy_ids::ContinuePending && consumed
                                        ? consumed->interruptedStrategy
                                        : strategyId;
                _pending = PendingWork { _scratchpad, std::move(outcome.undelivered), origin };
            }
            finishRun(RunOutcome::interrupted);
            break;
        case ActionStatus::failed:
            spdlog::warn("room {}: action stage failed: {}", _config.room, outcome.failure);
            finishRun(RunOutcome::failed);
            break;
        case ActionStatus::completed:
        case ActionStatus::completed_silent: reflect(outcome); return;
    }

    if (!_queue.empty())
        startRun();
    else
        enterStage(Stage::idle);
}

void Orchestrator::reflect(ActionOutcome const&)
{
    enterStage(Stage::reflecting);
    auto request = ProviderRequest {
        .role = "reflection",
        .instruction = _prompts.render("reflection", { { "agent_name", _config.action.agentName } }),
        .transcript = renderRunContext() + "## What you did this run\n" + _lastActionSummary,
        .kind = ResponseKind::sentence,
    };
    auto alive = std::weak_ptr<bool>(_alive);
    _reflection->submit(std::move(request), [this, alive](ProviderResult result) {
        if (!alive.expired())
            onReflection(std::move(result));
    });
}

void Orchestrator::onReflection(ProviderResult result)
{
    auto outcome = RunOutcome::failed;
    if (auto const* response = std::get_if<ProviderResponse>(&result);
        response && response->kind() == ResponseKind::sentence)
    {
        auto sentence = firstSentence(response->sentence());
        if (!sentence.empty())
        {
            _port.storeReflection(sentence);
            ++_stats.reflections;
            outcome = RunOutcome::completed;
            log(json { { "event", "reflection" }, { "text", sentence } });
        }
        else
            spdlog::warn("room {}: empty reflection, keeping the previous one", _config.room);
    }
    else
    {
        auto const reason = std::holds_alternative<ProviderError>(result)
                                ? std::string(std::get<ProviderError>(result).what())
                                : std::string("wrong response kind");
        spdlog::warn("room {}: reflection failed ({}), keeping the previous one", _config.room, reason);
    }

    finishRun(outcome);
    if (!_queue.empty())
        startRun();
    else
        enterStage(Stage::idle);
}

void Orchestrator::finishRun(RunOutcome outcome)
{
    switch (outcome)
    {
        case RunOutcome::completed: ++_stats.completed; break;
        case RunOutcome::interrupted: ++_stats.interrupted; break;
        case RunOutcome::failed: ++_stats.failed; break;
    }
    log(json { { "event", "run_end" }, { "outcome", std::string(toString(outcome)) } });
}

void Orchestrator::enterStage(Stage stage)
{
    _stage = stage;
    log(json { { "event", "stage" }, { "stage", std::string(toString(stage)) } });
}

void Orchestrator::log(json record)
{
    if (!_log)
        return;
    record["room"] = _config.room;
    record["run_id"] = _runId;
    record["at"] = _clock.now().count();
    record["interrupted"] = _runInterrupted;
    record["strategy"] = _runStrategy ? json(*_runStrategy) : json(nullptr);
    _log(record);
}

std::string Orchestrator::renderRunContext() const
{
    auto const& state = _port.state();
    auto const& self = _port.self();
    auto out = std::ostringstream {};

    out << "## Participants\n";
    for (auto const& p: state.participants)
        out << "- " << p.nickname << (p.id == self.id ? " (you)" : "") << '\n';

    out << "## Conversation (oldest first)\n"
        << renderContext(state, _config.contextLimit, RenderOptions { .withIds = true });

    auto typing = std::vector<std::string> {};
    for (auto const& id: state.typingAt(_clock.now()))
        if (id != self.id)
            if (auto const* p = state.findParticipant(id))
                typing.push_back(p->nickname);
    if (!typing.empty())
    {
        out << "## Typing now\n";
        for (auto const& name: typing)
            out << "- " << name << '\n';
    }

    if (_currentEvent)
        out << "## Latest event\n" << describeEvent(*_currentEvent, state) << '\n';
    if (state.lastReflection)
        out << "## Your last reflection\n" << *state.lastReflection << '\n';
    if (!_scratchpad.empty())
        out << "## Your scratchpad\n" << _scratchpad.notes() << '\n';
    if (_pending)
        out << "## Interrupted intentions\n" << renderPendingWork(*_pending);
    return out.str();
}

} // namespace huma
