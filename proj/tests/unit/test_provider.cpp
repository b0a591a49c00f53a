// SPDX-License-Identifier: Apache-2.0
#include "test_support.hpp"

#include <huma/provider.hpp>
#include <huma/scripted_provider.hpp>

#include <gtest/gtest.h>

using namespace huma;
using namespace huma::test;
using nlohmann::json;

namespace
{

ProviderRequest request(ResponseKind kind, std::string transcript = "ana: hi", std::string instruction = "go")
{
    auto r = ProviderRequest { .role = "test", .instruction = std::move(instruction), .transcript = std::move(transcript), .kind = kind };
    if (kind == ResponseKind::score_map)
        r.candidates = { "keep_silent", "ask_question" };
    if (kind == ResponseKind::tool_turn)
        r.tools = toolSchemas();
    return r;
}

} // namespace

TEST(ExtractJsonObject, FindsFirstBalancedObject)
{
    EXPECT_EQ(extractJsonObject("sure: {\"a\": {\"b\": 1}} and {\"c\": 2}"), "{\"a\": {\"b\": 1}}");
    EXPECT_EQ(extractJsonObject("{\"k\": \"a } inside\"} tail"), "{\"k\": \"a } inside\"}");
    EXPECT_EQ(extractJsonObject("{\"k\": \"escaped \\\" } quote\"}"), "{\"k\": \"escaped \\\" } quote\"}");
    EXPECT_FALSE(extractJsonObject("no braces here"));
    EXPECT_FALSE(extractJsonObject("{\"unbalanced\": 1"));
}

TEST(ParseScoreMap, AcceptsNumbersAndNumericStrings)
{
    auto warnings = std::vector<std::string> {};
    auto const scores = parseScoreMap("Ratings: {\"a\": 0.5, \"b\": \" 0.25 \", \"c\": \"high\", \"d\": null, \"e\": 1}",
                                      &warnings);
    EXPECT_EQ(scores, (ScoreMap { { "a", 0.5 }, { "b", 0.25 }, { "e", 1.0 } }));
    EXPECT_EQ(warnings.size(), 2u);
}

TEST(ParseScoreMap, RejectsTextWithoutObject)
{
    try
    {
        (void) parseScoreMap("keep silent please");
        FAIL();
    }
    catch (ProviderError const& e)
    {
        EXPECT_EQ(e.kind(), ProviderErrorKind::parse);
        EXPECT_EQ(e.raw(), "keep silent please");
    }
    EXPECT_THROW((void) parseScoreMap("{\"a\": 1,, }"), ProviderError);
}

TEST(FirstSentence, CutsAtTerminatorFollowedBySpace)
{
    EXPECT_EQ(firstSentence("  Things are calm. Next up: food."), "Things are calm.");
    EXPECT_EQ(firstSentence("Version 2.0 is out! Yay"), "Version 2.0 is out!");
    EXPECT_EQ(firstSentence("Really?! I doubt it."), "Really?!");
    EXPECT_EQ(firstSentence("Hmm... maybe later"), "Hmm...");
    EXPECT_EQ(firstSentence("no terminator at all"), "no terminator at all");
    EXPECT_EQ(firstSentence("   "), "");
}

TEST(FirstSentence, CapsAtCodePoints)
{
    EXPECT_EQ(firstSentence("ééééé", 3), "ééé");
    EXPECT_EQ(firstSentence("abc def", 4), "abc");
}

TEST(ScriptedProvider, UsesFirstMatchingRuleAndCountsUses)
{
    auto provider = ScriptedProvider::fromJson(json::array({
        json { { "kind", "sentence" }, { "contains", "pizza" }, { "text", "food talk." } },
        json { { "kind", "sentence" }, { "text", "generic." }, { "times", 2 } },
    }));
    EXPECT_EQ(provider.complete(request(ResponseKind::sentence, "bo: pizza?")).sentence(), "food talk.");
    EXPECT_EQ(provider.complete(request(ResponseKind::sentence, "bo: pizza?")).sentence(), "generic.");
    EXPECT_EQ(provider.complete(request(ResponseKind::sentence)).sentence(), "generic.");
    EXPECT_THROW((void) provider.complete(request(ResponseKind::sentence)), ScriptExhausted);
    EXPECT_EQ(provider.callCount(), 4u);
}

TEST(ScriptedProvider, MatchesInstructionAndKind)
{
    auto provider = ScriptedProvider::fromJson(json { { "rules",
                                                        json::array({
                                                            json { { "kind", "tool_turn" },
                                                                   { "instruction_contains", "Ask Question" },
                                                                   { "calls", json::array({ sendMessage("why?") }) } },
                                                            emptyTurns(),
                                                        }) } });
    EXPECT_TRUE(provider.complete(request(ResponseKind::tool_turn, "", "Strategy: Go Deeper")).turn().calls.empty());
    auto const turn = provider.complete(request(ResponseKind::tool_turn, "", "Strategy: Ask Question")).turn();
    ASSERT_EQ(turn.calls.size(), 1u);
    EXPECT_EQ(turn.calls[0].text(), "why?");
    EXPECT_THROW((void) provider.complete(request(ResponseKind::sentence)), ScriptExhausted);
}

TEST(ScriptedProvider, ScoreDefaultCoversCandidates)
{
    auto provider = ScriptedProvider::fromJson(json::array({ scores({ { "ask_question", 0.9 } }, 0.1) }));
    auto const response = provider.complete(request(ResponseKind::score_map));
    EXPECT_EQ(response.scores(), (ScoreMap { { "ask_question", 0.9 }, { "keep_silent", 0.1 } }));
}

TEST(ScriptedProvider, ScriptedErrorsAndRawReplies)
{
    auto provider = ScriptedProvider::fromJson(json::array({
        json { { "kind", "score_map" }, { "error", "transport" } },
        json { { "kind", "score_map" }, { "raw", "ok {\"keep_silent\": \"0.3\"}" } },
        json { { "kind", "tool_turn" }, { "raw", "not a turn" } },
    }));
    try
    {
        (void) provider.complete(request(ResponseKind::score_map));
        FAIL();
    }
    catch (ProviderError const& e)
    {
        EXPECT_EQ(e.kind(), ProviderErrorKind::transport);
    }
    EXPECT_EQ(provider.complete(request(ResponseKind::score_map)).scores().at("keep_silent"), 0.3);
    EXPECT_THROW((void) provider.complete(request(ResponseKind::tool_turn)), ProviderError);
}

TEST(ScriptedProvider, RejectsMalformedScripts)
{
    EXPECT_THROW((void) ScriptedProvider::rulesFromJson(json { { "nope", 1 } }), ConfigError);
    EXPECT_THROW((void) ScriptedProvider::rulesFromJson(json::array({ json { { "kind", "poem" } } })), ConfigError);
    EXPECT_THROW((void) ScriptedProvider::rulesFromJson(json::array({ json { { "kind", "sentence" } } })), ConfigError);
    EXPECT_THROW((void) ScriptedProvider::rulesFromJson(json::array({ json { { "kind", "score_map" } } })), ConfigError);
    EXPECT_THROW((void) ScriptedProvider::rulesFromJson(
                     json::array({ json { { "kind", "tool_turn" }, { "calls", json::array({ json { { "tool", "dance" } } }) } } })),
                 ConfigError);
    EXPECT_THROW((void) ScriptedProvider::rulesFromJson(
                     json::array({ json { { "kind", "sentence" }, { "text", "x" }, { "latency_ms", json::array({ 5, 1 }) } } })),
                 ConfigError);
}

TEST(ScriptedProvider, LatencyRangeIsSeededAndBounded)
{
    auto const script = json::array({ json { { "kind", "sentence" },
                                             { "text", "x" },
                                             { "unlimited", true },
                                             { "latency_ms", json::array({ 100, 200 }) } } });
    auto a = ScriptedProvider::fromJson(script, 7);
    auto b = ScriptedProvider::fromJson(script, 7);
    for (auto i = 0; i < 50; ++i)
    {
        auto const la = a.complete(request(ResponseKind::sentence)).simulatedLatency;
        EXPECT_EQ(la, b.complete(request(ResponseKind::sentence)).simulatedLatency);
        EXPECT_GE(la.count(), 100);
        EXPECT_LE(la.count(), 200);
    }
}

TEST(ScriptedProvider, CallLogRecordsRequests)
{
    auto provider = ScriptedProvider::fromJson(json::array({ sentence("x") }));
    auto const r = request(ResponseKind::sentence, "bo: hello", "reflect");
    (void) provider.complete(r);
    ASSERT_EQ(provider.callLog().size(), 1u);
    EXPECT_EQ(provider.callLog()[0], r);
    auto const logged = provider.callLogJson();
    EXPECT_EQ(logged[0]["kind"], "sentence");
    EXPECT_EQ(logged[0]["transcript"], "bo: hello");
    EXPECT_FALSE(logged[0].contains("tools"));
}

TEST(InlineChannel, DeliversAfterSimulatedLatency)
{
    auto clock = VirtualClock {};
    auto provider = ScriptedProvider::fromJson(json::array({
        sentence("late.", false, 250),
        json { { "kind", "sentence" }, { "error", "backend" } },
    }));
    auto channel = InlineChannel(provider, clock);

    auto got = std::optional<Millis> {};
    channel.submit(request(ResponseKind::sentence), [&](ProviderResult r) {
        ASSERT_TRUE(std::holds_alternative<ProviderResponse>(r));
        got = clock.now();
    });
    EXPECT_FALSE(got);
    clock.runUntilIdle();
    EXPECT_EQ(got, Millis { 250 });

    auto error = std::optional<ProviderErrorKind> {};
    channel.submit(request(ResponseKind::sentence), [&](ProviderResult r) {
        error = std::get<ProviderError>(r).kind();
    });
    clock.runUntilIdle();
    EXPECT_EQ(error, ProviderErrorKind::backend);

    EXPECT_THROW(channel.submit(request(ResponseKind::sentence), [](ProviderResult) {}), ScriptExhausted);
}
