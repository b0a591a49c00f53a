// SPDX-License-Identifier: Apache-2.0
#include "test_support.hpp"

#include <huma/action.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace huma;
using namespace huma::test;
using nlohmann::json;

namespace
{

struct ActionRig
{
    explicit ActionRig(json script, ActionConfig config = {}):
        provider(ScriptedProvider::fromJson(script)),
        channel(provider, clock),
        port(clock, Participant { pid("agent"), "Mia", true }),
        agent(port, clock, channel, PromptPack::builtin(), std::move(config))
    {
        port.apply(joined("p1", "ana"));
        port.apply(said("m1", "p1", "anyone here?"));
    }

    ActionOutcome run(std::string_view strategyId, CancelToken interrupt = {}, std::optional<PendingWork> pending = {})
    {
        auto outcome = std::optional<ActionOutcome> {};
        auto context = ActionContext { [] { return std::string("## Conversation\nana: anyone here?\n"); },
                                       std::move(pending) };
        agent.runStrategy(defaultCatalog().get(strategyId), std::move(context), scratchpad, std::move(interrupt),
                          [&](ActionOutcome o) { outcome = std::move(o); });
        clock.runUntilIdle();
        EXPECT_TRUE(outcome.has_value());
        return outcome.value_or(ActionOutcome {});
    }

    VirtualClock clock;
    ScriptedProvider provider;
    InlineChannel channel;
    FakePort port;
    ActionAgent agent;
    Scratchpad scratchpad;
};

std::string repeat(std::string const& unit, std::size_t n)
{
    auto out = std::string {};
    for (auto i = std::size_t { 0 }; i < n; ++i)
        out += unit;
    return out;
}

} // namespace

TEST(TypingDuration, FiveCharactersPerWord)
{
    EXPECT_EQ(typingDuration("hello", TypingSpeed(60)), Millis { 1000 });
    EXPECT_EQ(typingDuration("héllo", TypingSpeed(60)), Millis { 1000 });
    EXPECT_EQ(typingDuration("", TypingSpeed(70)), Millis { 0 });
    // 1 char at 64 wpm is exactly 187.5 ms; halves round up.
    EXPECT_EQ(typingDuration("a", TypingSpeed(64)), Millis { 188 });
}

TEST(TypingDuration, MatchesFloatingOracle)
{
    auto rng = std::mt19937(11);
    for (auto i = 0; i < 2000; ++i)
    {
        auto const chars = std::uniform_int_distribution<std::size_t>(0, 500)(rng);
        auto const wpm = std::uniform_int_distribution<int>(50, 100)(rng);
        auto const expected = std::lround(static_cast<double>(chars) * 60000.0 / (5.0 * wpm));
        EXPECT_EQ(typingDuration(std::string(chars, 'x'), TypingSpeed(wpm)).count(), expected) << chars << " " << wpm;
    }
}

TEST(TypingSpeed, RejectsNonHumanRates)
{
    EXPECT_THROW(TypingSpeed(49), ConfigError);
    EXPECT_THROW(TypingSpeed(101), ConfigError);
    EXPECT_EQ(TypingSpeed().wpm(), 70);
}

TEST(ValidateTurn, OnlyFirstMessageAccepted)
{
    auto const turn = Turn { { ToolCall::addReaction(mid("m1"), "👍"), ToolCall::sendMessage("one"),
                               ToolCall::sendReply(mid("m1"), "two"), ToolCall::addReaction(mid("m1"), "🎉") } };
    auto const verdicts = validateTurn(turn);
    ASSERT_EQ(verdicts.size(), 4u);
    EXPECT_TRUE(verdicts[0].accepted);
    EXPECT_TRUE(verdicts[1].accepted);
    EXPECT_FALSE(verdicts[2].accepted);
    EXPECT_EQ(verdicts[2].error, SequentialSendError);
    EXPECT_TRUE(verdicts[3].accepted);
}

TEST(Scratchpad, KeepsNewestCharactersWithinCapacity)
{
    auto pad = Scratchpad {};
    pad.append("   ", Millis { 5 });
    EXPECT_TRUE(pad.empty());
    pad.append(repeat("a", 3000), Millis { 10 });
    pad.append(repeat("é", 3000), Millis { 20 });
    EXPECT_EQ(codePointCount(pad.notes()), Scratchpad::Capacity);
    EXPECT_EQ(pad.notes().substr(pad.notes().size() - 2), "é");
    EXPECT_EQ(pad.notes().front(), 'a');
    EXPECT_EQ(pad.updatedAt(), Millis { 20 });
}

TEST(ExecuteTurn, TypesThenDeliversWithRefresh)
{
    auto rig = ActionRig(json::array());
    auto const text = repeat("x", 60); // 10286 ms at 70 wpm
    auto outcome = std::optional<TurnOutcome> {};
    auto observed = Millis { 0 };
    rig.agent.setTypingObserver([&](Millis d) { observed = d; });
    auto const turn = Turn { { ToolCall::addReaction(mid("m1"), "👋"), ToolCall::sendMessage(text) } };
    rig.agent.executeTurn(turn, validateTurn(turn), CancelToken {}, [&](TurnOutcome o) { outcome = std::move(o); });

    EXPECT_EQ(rig.port.reactions.size(), 1u);
    EXPECT_FALSE(outcome);
    rig.clock.runUntilIdle();
    ASSERT_TRUE(outcome);
    EXPECT_EQ(outcome->status, ActionStatus::completed);
    EXPECT_EQ(observed, Millis { 10286 });
    ASSERT_EQ(rig.port.delivered.size(), 1u);
    EXPECT_EQ(rig.port.delivered[0].sentAt, Millis { 10286 });
    auto const expectedTyping = std::vector<std::pair<Millis, bool>> {
        { Millis { 0 }, true }, { Millis { 4000 }, true }, { Millis { 8000 }, true }
    };
    EXPECT_EQ(rig.port.typingCalls, expectedTyping);
}

TEST(ExecuteTurn, InterruptDuringTypingCancelsDelivery)
{
    auto rig = ActionRig(json::array());
    auto interrupt = CancelToken {};
    auto outcome = std::optional<TurnOutcome> {};
    auto const turn = Turn { { ToolCall::sendReply(mid("m1"), repeat("y", 35)) } }; // 6000 ms
    rig.agent.executeTurn(turn, validateTurn(turn), interrupt, [&](TurnOutcome o) { outcome = std::move(o); });
    rig.clock.callAfter(Millis { 2500 }, [&] { interrupt.cancel(); });
    rig.clock.runUntilIdle();

    ASSERT_TRUE(outcome);
    EXPECT_EQ(outcome->status, ActionStatus::interrupted);
    EXPECT_TRUE(rig.port.delivered.empty());
    ASSERT_EQ(outcome->undelivered.size(), 1u);
    EXPECT_EQ(outcome->undelivered[0], turn.calls[0]);
    ASSERT_FALSE(rig.port.typingCalls.empty());
    EXPECT_EQ(rig.port.typingCalls.back(), (std::pair { Millis { 2500 }, false }));
}

TEST(ExecuteTurn, AlreadyInterruptedNeverTypes)
{
    auto rig = ActionRig(json::array());
    auto interrupt = CancelToken {};
    interrupt.cancel();
    auto outcome = std::optional<TurnOutcome> {};
    auto const turn = Turn { { ToolCall::sendMessage("hi") } };
    rig.agent.executeTurn(turn, validateTurn(turn), interrupt, [&](TurnOutcome o) { outcome = std::move(o); });
    ASSERT_TRUE(outcome);
    EXPECT_EQ(outcome->status, ActionStatus::interrupted);
    EXPECT_TRUE(rig.port.typingCalls.empty());
}

TEST(ExecuteTurn, DeliveryFailureFailsTheTurn)
{
    auto rig = ActionRig(json::array());
    rig.port.failDelivery = true;
    auto outcome = std::optional<TurnOutcome> {};
    auto const turn = Turn { { ToolCall::sendMessage("hi") } };
    rig.agent.executeTurn(turn, validateTurn(turn), CancelToken {}, [&](TurnOutcome o) { outcome = std::move(o); });
    rig.clock.runUntilIdle();
    ASSERT_TRUE(outcome);
    EXPECT_EQ(outcome->status, ActionStatus::failed);
    EXPECT_EQ(outcome->failure, "channel down");
}

TEST(RunStrategy, RejectedSendIsFedBack)
{
    auto rig = ActionRig(json::array({
        toolTurn(json::array({ sendMessage("first"), sendMessage("second") }), "plan: greet"),
        toolTurn(json::array({ addReaction("m404", "👍") })),
        toolTurn(json::array()),
    }));
    auto const outcome = rig.run("ask_question");
    EXPECT_EQ(outcome.status, ActionStatus::completed);
    EXPECT_EQ(outcome.providerTurns, 3u);
    ASSERT_EQ(rig.port.delivered.size(), 1u);
    EXPECT_EQ(rig.port.delivered[0].text, "first");
    EXPECT_EQ(rig.scratchpad.notes(), "plan: greet");

    auto const log = rig.provider.callLog();
    ASSERT_EQ(log.size(), 3u);
    EXPECT_EQ(log[0].transcript.find("Your actions in this run"), std::string::npos);
    EXPECT_NE(log[1].transcript.find(SequentialSendError), std::string::npos);
    EXPECT_NE(log[1].transcript.find("delivered as a1"), std::string::npos);
    EXPECT_NE(log[2].transcript.find("turn 2: add_reaction"), std::string::npos);
    EXPECT_NE(log[2].transcript.find("-> error:"), std::string::npos);
    EXPECT_NE(log[0].instruction.find("Ask Question"), std::string::npos);
    EXPECT_EQ(log[0].kind, ResponseKind::tool_turn);
    EXPECT_TRUE(log[0].tools.has_value());
}

TEST(RunStrategy, StopsAtMaxTurns)
{
    auto rig = ActionRig(json::array({ toolTurn(json::array({ addReaction("m1", "👍") }), {}, 0, true) }));
    auto const outcome = rig.run("ask_question");
    EXPECT_EQ(outcome.status, ActionStatus::completed);
    EXPECT_EQ(outcome.providerTurns, 4u);
    EXPECT_EQ(rig.provider.callCount(), 4u);
}

TEST(RunStrategy, KeepSilentAsksNobody)
{
    auto rig = ActionRig(json::array());
    auto const outcome = rig.run(strategy_ids::KeepSilent);
    EXPECT_EQ(outcome.status, ActionStatus::completed_silent);
    EXPECT_EQ(rig.provider.callCount(), 0u);
}

TEST(RunStrategy, ProviderErrorFails)
{
    auto rig = ActionRig(json::array({ json { { "kind", "tool_turn" }, { "error", "parse" } } }));
    auto const outcome = rig.run("ask_question");
    EXPECT_EQ(outcome.status, ActionStatus::failed);
    EXPECT_FALSE(outcome.failure.empty());
}

TEST(RunStrategy, InterruptKeepsNotesAndUndeliveredCall)
{
    auto rig = ActionRig(json::array({ toolTurn(json::array({ sendMessage(repeat("z", 70)) }), "she asked about jazz") }));
    auto interrupt = CancelToken {};
    rig.clock.callAfter(Millis { 3000 }, [&] { interrupt.cancel(); });
    auto const outcome = rig.run("ask_question", interrupt);
    EXPECT_EQ(outcome.status, ActionStatus::interrupted);
    EXPECT_EQ(outcome.undelivered.size(), 1u);
    EXPECT_EQ(rig.scratchpad.notes(), "she asked about jazz");
    EXPECT_TRUE(rig.port.delivered.empty());
}

TEST(RunStrategy, ContinuePendingExecutesIntendedCalls)
{
    auto rig = ActionRig(json::array());
    auto pending = PendingWork { {}, { ToolCall::sendReply(mid("m1"), "yes, me!") }, "ask_question" };
    auto const outcome = rig.run(strategy_ids::ContinuePending, {}, pending);
    EXPECT_EQ(outcome.status, ActionStatus::completed);
    EXPECT_EQ(rig.provider.callCount(), 0u);
    ASSERT_EQ(rig.port.delivered.size(), 1u);
    EXPECT_EQ(rig.port.delivered[0].replyTo, mid("m1"));
}

TEST(PendingWork, RendersUndeliveredCalls)
{
    auto const text = renderPendingWork(PendingWork { {}, { ToolCall::sendMessage("hi all") }, "welcome_newcomer" });
    EXPECT_NE(text.find("welcome_newcomer"), std::string::npos);
    EXPECT_NE(text.find("send_message{\"text\":\"hi all\"}"), std::string::npos);
    EXPECT_NE(text.find("NOT performed"), std::string::npos);
}

TEST(ActionAgent, RejectsBadConfig)
{
    auto clock = VirtualClock {};
    auto provider = ScriptedProvider({});
    auto channel = InlineChannel(provider, clock);
    auto port = FakePort(clock, Participant { pid("agent"), "Mia", true });
    EXPECT_THROW(ActionAgent(port, clock, channel, PromptPack::builtin(), ActionConfig { .maxTurns = 0 }), ConfigError);
}
