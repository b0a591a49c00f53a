// SPDX-License-Identifier: Apache-2.0
#include <huma/turn.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace huma;
using namespace huma::test;
using nlohmann::json;

TEST(ToolCall, FactoriesCarryExactlyTheirFields)
{
    auto const m = ToolCall::sendMessage("hi");
    EXPECT_EQ(m.tool(), Tool::send_message);
    EXPECT_FALSE(m.target());
    EXPECT_EQ(m.arguments(), (json { { "text", "hi" } }));

    auto const r = ToolCall::sendReply(mid("m3"), "sure");
    EXPECT_EQ(r.arguments(), (json { { "target_message_id", "m3" }, { "text", "sure" } }));

    auto const e = ToolCall::addReaction(mid("m3"), "👍");
    EXPECT_EQ(e.arguments(), (json { { "target_message_id", "m3" }, { "emoji", "👍" } }));
    EXPECT_FALSE(producesMessage(e.tool()));
    EXPECT_TRUE(producesMessage(r.tool()));
}

TEST(ToolCall, ParsesArguments)
{
    auto const call = ToolCall::fromArguments(Tool::send_reply, json { { "target_message_id", "m1" }, { "text", "x" } });
    EXPECT_EQ(call, ToolCall::sendReply(mid("m1"), "x"));
    EXPECT_THROW((void)ToolCall::fromArguments(Tool::send_reply, json { { "text", "x" } }), std::invalid_argument);
    EXPECT_THROW((void)ToolCall::fromArguments(Tool::add_reaction, json::array()), std::invalid_argument);
    EXPECT_THROW((void)ToolCall::fromArguments(Tool::send_message, json { { "text", 5 } }), std::invalid_argument);
}

TEST(ToolCall, JsonRoundTrip)
{
    for (auto const& call: { ToolCall::sendMessage("a"), ToolCall::sendReply(mid("m2"), "b"),
                             ToolCall::addReaction(mid("m2"), "🎉") })
        EXPECT_EQ(toolCallFromJson(json(call)), call);
    EXPECT_THROW((void)toolCallFromJson(json { { "tool", "delete_message" }, { "arguments", json::object() } }),
                 std::invalid_argument);
}

TEST(ToolCall, DescribeIsCompact)
{
    EXPECT_EQ(ToolCall::sendMessage("hey").describe(), R"(send_message{"text":"hey"})");
}

TEST(Tools, NamesRoundTrip)
{
    for (auto tool: { Tool::send_message, Tool::send_reply, Tool::add_reaction })
        EXPECT_EQ(toolFromString(toString(tool)), tool);
    EXPECT_FALSE(toolFromString("send"));
}

TEST(Tools, SchemasMatchGoldenFile)
{
    EXPECT_EQ(toolSchemas(), readJson(fixtureDir() / "tool_schemas.json"));
}
