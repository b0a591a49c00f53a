// SPDX-License-Identifier: Apache-2.0
#include <huma/domain.hpp>
#include <huma/errors.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace huma;
using namespace huma::test;
using namespace std::chrono_literals;

namespace
{

ConversationState trio()
{
    return fold({ joined("p1", "alice"), joined("p2", "bob"), joined("p3", "carol") });
}

} // namespace

TEST(ApplyEvent, JoinAddsParticipantInOrder)
{
    auto const state = trio();
    ASSERT_EQ(state.participants.size(), 3u);
    EXPECT_EQ(state.participants[0].nickname, "alice");
    EXPECT_EQ(state.participants[2].id, pid("p3"));
}

TEST(ApplyEvent, DuplicateJoinIsInvalid)
{
    EXPECT_THROW((void)applyEvent(trio(), joined("p1", "again")), InvalidEvent);
}

TEST(ApplyEvent, MessagesAppendToHistory)
{
    auto const state = fold({ said("m1", "p1", "hi", 10ms), said("m2", "p2", "hey", 20ms) }, trio());
    ASSERT_EQ(state.history.size(), 2u);
    EXPECT_EQ(state.history[1].text, "hey");
    EXPECT_EQ(state.lastEventAt, 20ms);
}

TEST(ApplyEvent, MessageFromUnknownParticipantIsUnknownReference)
{
    EXPECT_THROW((void)applyEvent(trio(), said("m1", "ghost", "boo")), UnknownReference);
}

TEST(ApplyEvent, ReplyToUnknownMessageIsUnknownReference)
{
    EXPECT_THROW((void)applyEvent(trio(), replied("m2", "p1", "nope", "hello")), UnknownReference);
}

TEST(ApplyEvent, ReplyKeepsParent)
{
    auto const state = fold({ said("m1", "p1", "hi"), replied("m2", "p2", "m1", "hello") }, trio());
    EXPECT_EQ(state.history.back().replyTo, mid("m1"));
}

TEST(ApplyEvent, BlankOrDuplicateMessagesAreInvalid)
{
    auto const state = fold({ said("m1", "p1", "hi") }, trio());
    EXPECT_THROW((void)applyEvent(state, said("m2", "p1", "   ")), InvalidEvent);
    EXPECT_THROW((void)applyEvent(state, said("m1", "p2", "again")), InvalidEvent);
}

TEST(ApplyEvent, EventsMustNotGoBackInTime)
{
    auto const state = fold({ said("m1", "p1", "hi", 50ms) }, trio());
    EXPECT_THROW((void)applyEvent(state, said("m2", "p1", "late", 40ms)), InvalidEvent);
}

TEST(ApplyEvent, ReactionsAddAndRemove)
{
    auto state = fold({ said("m1", "p1", "hi"), reacted("m1", "👍", "p2"), reacted("m1", "👍", "p3") }, trio());
    EXPECT_EQ(state.reactions.size(), 2u);
    EXPECT_THROW((void)applyEvent(state, reacted("m1", "👍", "p2")), InvalidEvent);
    state = applyEvent(state, unreacted("m1", "👍", "p2"));
    EXPECT_EQ(state.reactions.size(), 1u);
    EXPECT_THROW((void)applyEvent(state, unreacted("m1", "👍", "p2")), UnknownReference);
    EXPECT_THROW((void)applyEvent(state, reacted("m9", "👍", "p2")), UnknownReference);
}

TEST(ApplyEvent, FailedApplyLeavesStateUntouched)
{
    auto state = fold({ said("m1", "p1", "hi"), typed("p2", 100ms) }, trio());
    auto const before = state;
    EXPECT_THROW(applyEventInPlace(state, replied("m2", "p1", "missing", "x", 200ms)), UnknownReference);
    EXPECT_EQ(state, before);
}

TEST(ApplyEvent, TypingDecaysAfterSixSeconds)
{
    auto state = fold({ typed("p1", 1000ms) }, trio());
    EXPECT_EQ(state.typingAt(1000ms), std::vector<ParticipantId> { pid("p1") });
    EXPECT_EQ(state.typingAt(6999ms).size(), 1u);
    EXPECT_TRUE(state.typingAt(7000ms).empty());

    state = applyEvent(state, said("m1", "p2", "hi", 7000ms));
    EXPECT_TRUE(state.typing.empty()) << "expired indicators are pruned when the next event applies";
}

TEST(ApplyEvent, SendingClearsOwnTypingIndicator)
{
    auto const state = fold({ typed("p1", 0ms), said("m1", "p1", "done", 500ms) }, trio());
    EXPECT_TRUE(state.typingAt(500ms).empty());
}

TEST(ApplyEvent, InactiveTypingClearsIndicator)
{
    auto const state = fold({ typed("p1", 0ms), typed("p1", 100ms, false) }, trio());
    EXPECT_TRUE(state.typingAt(100ms).empty());
}

TEST(ApplyEvent, TypingRefreshExtendsIndicator)
{
    auto const state = fold({ typed("p1", 0ms), typed("p1", 4000ms) }, trio());
    EXPECT_EQ(state.typingAt(9000ms).size(), 1u);
}

TEST(ChatEvent, ActorAndKind)
{
    EXPECT_EQ(reacted("m1", "🎉", "p3").actor(), pid("p3"));
    EXPECT_EQ(reacted("m1", "🎉", "p3").kind(), EventKind::reaction_added);
    EXPECT_EQ(replied("m2", "p1", "m1", "x").kind(), EventKind::reply_sent);
    EXPECT_EQ(toString(EventKind::typing_started), "typing_started");
    EXPECT_EQ(eventKindFromString("participant_joined"), EventKind::participant_joined);
    EXPECT_FALSE(eventKindFromString("left"));
}

TEST(RenderContext, GoldenTranscript)
{
    auto const state = fold(
        {
            said("m1", "p1", "has anyone tried the new ramen place on fifth street downtown?", 1ms),
            replied("m2", "p2", "m1", "yes! the broth is amazing", 2ms),
            reacted("m2", "👍", "p1", 3ms),
            reacted("m2", "👍", "p3", 4ms),
            reacted("m2", "🎉", "p3", 5ms),
            said("m3", "p3", "adding it to my list\nthanks", 6ms),
        },
        trio());

    auto const expected = std::string(
        "alice: has anyone tried the new ramen place on fifth street downtown?\n"
        "bob: ↳ re: «has anyone tried the new ramen place on…» yes! the broth is amazing (🎉 carol; 👍 alice, carol)\n"
        "carol: adding it to my list thanks\n");
    EXPECT_EQ(renderContext(state, 50), expected);
}

TEST(RenderContext, WithIdsAndLimit)
{
    auto const state = fold({ said("m1", "p1", "one"), said("m2", "p2", "two"), said("m3", "p3", "three") }, trio());
    EXPECT_EQ(renderContext(state, 2, RenderOptions { .withIds = true }), "[m2] bob: two\n[m3] carol: three\n");
    EXPECT_EQ(renderContext(state, 0), "");
}

TEST(RenderContext, ShortParentIsQuotedWhole)
{
    auto const state = fold({ said("m1", "p1", "hi"), replied("m2", "p2", "m1", "hello") }, trio());
    EXPECT_EQ(renderContext(state, 1), "bob: ↳ re: «hi» hello\n");
}

TEST(Serialization, EventsRoundTrip)
{
    auto const events = std::vector<ChatEvent> {
        joined("p9", "zed", 1ms, true), said("m1", "p1", "hi ✨", 2ms), replied("m2", "p2", "m1", "yo", 3ms),
        reacted("m1", "🎉", "p3", 4ms), unreacted("m1", "🎉", "p3", 5ms), typed("p2", 6ms, false),
    };
    for (auto const& e: events)
    {
        auto const j = nlohmann::json(e);
        auto const back = j.get<ChatEvent>();
        EXPECT_EQ(nlohmann::json(back), j);
        EXPECT_EQ(back.kind(), e.kind());
        EXPECT_EQ(j.at("kind"), std::string(toString(e.kind())));
    }
}

TEST(Serialization, CanonicalFormIsOrderIndependentForReactions)
{
    auto const base = fold({ said("m1", "p1", "hi") }, trio());
    auto const a = fold({ reacted("m1", "👍", "p2"), reacted("m1", "🎉", "p3") }, base);
    auto const b = fold({ reacted("m1", "🎉", "p3"), reacted("m1", "👍", "p2") }, base);
    EXPECT_EQ(canonicalDump(a), canonicalDump(b));
}

TEST(TextHelpers, CodePoints)
{
    EXPECT_EQ(codePointCount("héllo"), 5u);
    EXPECT_EQ(codePointCount("👍🎉"), 2u);
    EXPECT_EQ(codePointCount(""), 0u);
    EXPECT_EQ(codePointPrefix("héllo", 2), "hé");
    EXPECT_EQ(codePointSuffix("héllo", 4), "éllo");
    EXPECT_EQ(codePointPrefix("ab", 10), "ab");
    EXPECT_TRUE(isBlank(" \t\n"));
    EXPECT_FALSE(isBlank(" x "));
}

// Property: applying a random valid event sequence step by step equals folding it in place,
// and every prefix's reaction set only references messages in history.
TEST(ApplyEventProperty, RandomSequencesStayConsistent)
{
    auto rng = std::mt19937_64 { 20240611 };
    for (auto trial = 0; trial < 200; ++trial)
    {
        auto state = trio();
        auto inPlace = state;
        auto t = Millis { 0 };
        auto nextMessage = 1;
        for (auto step = 0; step < 60; ++step)
        {
            t += Millis { static_cast<std::int64_t>(rng() % 3000) };
            auto const who = "p" + std::to_string(1 + rng() % 3);
            auto event = std::optional<ChatEvent> {};
            switch (rng() % 5)
            {
                case 0: event = said("m" + std::to_string(nextMessage++), who, "text " + std::to_string(step), t); break;
                case 1:
                    if (!state.history.empty())
                        event = replied("m" + std::to_string(nextMessage++), who,
                                        state.history[rng() % state.history.size()].id.value, "re", t);
                    break;
                case 2:
                    if (!state.history.empty())
                    {
                        auto r = reacted(state.history[rng() % state.history.size()].id.value, rng() % 2 ? "👍" : "🎉", who, t);
                        if (!state.reactions.contains(std::get<ReactionAdded>(r.payload).reaction))
                            event = r;
                    }
                    break;
                case 3:
                    if (!state.reactions.empty())
                    {
                        auto it = state.reactions.begin();
                        std::advance(it, static_cast<std::ptrdiff_t>(rng() % state.reactions.size()));
                        event = ChatEvent { ReactionRemoved { *it }, t };
                    }
                    break;
                default: event = typed(who, t); break;
            }
            if (!event)
                continue;
            state = applyEvent(state, *event);
            applyEventInPlace(inPlace, *event);
            ASSERT_EQ(state, inPlace);
            for (auto const& r: state.reactions)
                ASSERT_NE(state.findMessage(r.messageId), nullptr);
            for (auto const& id: state.typingAt(t))
                ASSERT_NE(state.findParticipant(id), nullptr);
        }
    }
}
