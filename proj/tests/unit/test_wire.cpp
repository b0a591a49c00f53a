// SPDX-License-Identifier: Apache-2.0
#include "test_support.hpp"

#include <huma/wire.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace huma;
using namespace huma::test;
using nlohmann::json;

namespace
{

std::string transcriptOf(std::vector<TranscriptRecord> const& records)
{
    auto out = std::string {};
    for (auto const& r: records)
        out += json(r).dump() + '\n';
    return out;
}

TranscriptRecord frameRecord(ChatEvent const& event, std::uint64_t seq, Origin origin = Origin::human)
{
    return TranscriptRecord { event.occurredAt, origin, frameFromEvent(event, seq), std::nullopt };
}

ReplaySummary replay(std::string const& text)
{
    auto in = std::istringstream(text);
    return replayTranscript(in);
}

std::size_t failingLine(std::string const& text)
{
    try
    {
        (void) replay(text);
    }
    catch (TranscriptError const& e)
    {
        return e.line();
    }
    return 0;
}

} // namespace

TEST(WireFrame, JoinNeverExposesAgentFlag)
{
    auto const frame = frameFromEvent(joined("p1", "Mia", Millis { 5 }, true), 3);
    EXPECT_EQ(json(frame), json::parse(R"({"type":"join","seq":3,
        "payload":{"participant":{"id":"p1","nickname":"Mia"},"occurred_at":5}})"));
    EXPECT_EQ(json(frame).dump().find("is_agent"), std::string::npos);
}

TEST(WireFrame, MessageAndReactionShapes)
{
    auto const reply = json(frameFromEvent(replied("m2", "p1", "m1", "sure", Millis { 40 }), 7));
    EXPECT_EQ(reply["type"], "reply");
    EXPECT_EQ(reply["payload"]["message"]["reply_to"], "m1");
    EXPECT_EQ(reply["payload"]["message"]["text"], "sure");
    EXPECT_EQ(reply["payload"]["message"]["delivered"], true);

    auto const reaction = json(frameFromEvent(reacted("m1", "🎉", "p2", Millis { 41 }), 8));
    EXPECT_EQ(reaction["type"], "reaction_add");
    EXPECT_EQ(reaction["payload"]["reaction"]["emoji"], "🎉");

    auto const typing = json(frameFromEvent(typed("p2", Millis { 42 }), 9));
    EXPECT_EQ(typing["payload"], json::parse(R"({"participant":"p2","active":true,"occurred_at":42})"));
}

TEST(WireFrame, ServiceFrames)
{
    auto const error = errorFrame("room_full", "no seats");
    EXPECT_EQ(error.seq, 0u);
    EXPECT_EQ(error.type, "error");
    EXPECT_EQ(error.payload["code"], "room_full");

    auto const roster = rosterFrame({ Participant { pid("p1"), "ana", false }, Participant { pid("p2"), "Mia", true } },
                                    Millis { 9 }, 4);
    EXPECT_EQ(json(roster)["payload"]["participants"],
              json::parse(R"([{"id":"p1","nickname":"ana"},{"id":"p2","nickname":"Mia"}])"));
    EXPECT_FALSE(eventFromFrame(roster));
    EXPECT_FALSE(eventFromFrame(timerFrame(60, Millis { 0 }, 5)));
    EXPECT_EQ(timerFrame(60, Millis { 0 }, 5).payload["remaining_seconds"], 60);

    EXPECT_TRUE(isKnownFrameType("reaction_remove"));
    EXPECT_FALSE(isKnownFrameType("poke"));
}

TEST(WireFrame, EventRoundTripProperty)
{
    auto rng = std::mt19937(5);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    for (auto i = 0; i < 500; ++i)
    {
        auto const at = Millis { pick(100000) };
        auto const p = "p" + std::to_string(pick(5));
        auto const m = "m" + std::to_string(pick(50));
        auto event = ChatEvent {};
        switch (pick(6))
        {
            case 0: event = joined(p, "nick" + std::to_string(pick(9)), at, pick(2) == 1); break;
            case 1: event = said(m, p, "text " + std::to_string(pick(1000)), at); break;
            case 2: event = replied(m, p, "m0", "re ✓", at); break;
            case 3: event = reacted(m, "👍", p, at); break;
            case 4: event = unreacted(m, "🔥", p, at); break;
            default: event = typed(p, at, pick(2) == 1); break;
        }
        auto const isAgent = event.kind() == EventKind::participant_joined
                             && std::get<ParticipantJoined>(event.payload).participant.isAgent;
        auto const frame = json(frameFromEvent(event, i + 1)).get<WireFrame>();
        auto const back = eventFromFrame(frame, isAgent);
        ASSERT_TRUE(back);
        EXPECT_EQ(json(*back), json(event));
    }
}

TEST(TranscriptRecord, HoldsFrameOrReflection)
{
    auto const reflection = TranscriptRecord { Millis { 3 }, Origin::agent, std::nullopt, "calm room." };
    EXPECT_EQ(json(reflection), json::parse(R"({"received_at":3,"origin":"agent","reflection":"calm room."})"));
    auto const back = transcriptRecordFromJson(json(reflection));
    EXPECT_EQ(back.reflection, "calm room.");

    EXPECT_THROW((void) transcriptRecordFromJson(json::parse(R"({"received_at":3,"origin":"agent"})")),
                 std::invalid_argument);
    EXPECT_THROW((void) transcriptRecordFromJson(json::parse(R"({"received_at":3,"origin":"robot","reflection":"x"})")),
                 std::invalid_argument);
}

TEST(Replay, RebuildsStateAndReflection)
{
    auto const events = std::vector<ChatEvent> {
        joined("p1", "ana", Millis { 0 }), joined("p2", "Mia", Millis { 10 }, true), said("m1", "p1", "hi", Millis { 20 }),
        replied("m2", "p2", "m1", "hello ana", Millis { 30 }), reacted("m2", "👍", "p1", Millis { 40 }),
        unreacted("m2", "👍", "p1", Millis { 50 }),
    };
    auto records = std::vector<TranscriptRecord> {};
    auto seq = std::uint64_t { 0 };
    for (auto const& e: events)
        records.push_back(frameRecord(e, ++seq, e.actor() == pid("p2") ? Origin::agent : Origin::human));
    records.insert(records.begin() + 2,
                   TranscriptRecord { Millis { 15 }, Origin::server, rosterFrame({}, Millis { 15 }, 3), std::nullopt });
    for (auto i = std::size_t { 3 }; i < records.size(); ++i)
        records[i].frame->seq = i + 1;
    records.push_back(TranscriptRecord { Millis { 60 }, Origin::agent, std::nullopt, "Ana is friendly." });

    auto const summary = replay(transcriptOf(records));
    auto expected = fold(events);
    expected.lastReflection = "Ana is friendly.";
    EXPECT_EQ(canonicalDump(summary.state), canonicalDump(expected));
    EXPECT_TRUE(summary.state.participants[1].isAgent);
    EXPECT_EQ(summary.frames, 7u);
    EXPECT_EQ(summary.records, 8u);
    EXPECT_EQ(summary.lastSeq, 7u);
    EXPECT_EQ(summary.reactionEvents, 2u);
}

TEST(Replay, ErrorsNameTheLine)
{
    auto const good = transcriptOf({ frameRecord(joined("p1", "ana"), 1), frameRecord(said("m1", "p1", "hi"), 2) });

    // Truncated final line.
    auto const truncated = good + json(frameRecord(said("m2", "p1", "again"), 3)).dump().substr(0, 30) + "\n";
    EXPECT_EQ(failingLine(truncated), 3u);

    // Sequence gap.
    EXPECT_EQ(failingLine(good + json(frameRecord(said("m2", "p1", "x"), 5)).dump() + "\n"), 3u);

    // Reordered lines.
    auto const reordered = transcriptOf({ frameRecord(said("m1", "p1", "hi"), 2), frameRecord(joined("p1", "ana"), 1) });
    EXPECT_EQ(failingLine(reordered), 1u);

    // Event that does not apply.
    EXPECT_EQ(failingLine(good + json(frameRecord(reacted("m9", "👍", "p1"), 3)).dump() + "\n"), 3u);

    // Session-local error frames never belong in a room transcript.
    auto const withError = good + json(TranscriptRecord { Millis { 0 }, Origin::server, errorFrame("x", "y"), std::nullopt }).dump() + "\n";
    EXPECT_EQ(failingLine(withError), 3u);

    // Malformed payload.
    EXPECT_EQ(failingLine(good + R"({"received_at":0,"origin":"human","frame":{"type":"message","seq":3,"payload":{}}})" + "\n"), 3u);

    EXPECT_EQ(failingLine(good + "\n"), 0u);
}
