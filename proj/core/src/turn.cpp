// SPDX-License-Identifier: Apache-2.0
#include <huma/turn.hpp>

#include <stdexcept>

namespace huma
{

using nlohmann::json;

std::string_view toString(Tool tool) noexcept
{
    switch (tool)
    {
        case Tool::send_message: return "send_message";
        case Tool::send_reply: return "send_reply";
        case Tool::add_reaction: return "add_reaction";
    }
    return "unknown";
}

std::optional<Tool> toolFromString(std::string_view name) noexcept
{
    for (auto tool: { Tool::send_message, Tool::send_reply, Tool::add_reaction })
        if (toString(tool) == name)
            return tool;
    return std::nullopt;
}

ToolCall::ToolCall(Tool tool, std::string text, std::optional<MessageId> target, std::string emoji):
    _tool(tool), _text(std::move(text)), _target(std::move(target)), _emoji(std::move(emoji))
{
}

ToolCall ToolCall::sendMessage(std::string text)
{
    if (isBlank(text))
        throw std::invalid_argument("send_message requires non-empty text");
    return ToolCall(Tool::send_message, std::move(text), std::nullopt, {});
}

ToolCall ToolCall::sendReply(MessageId target, std::string text)
{
    if (isBlank(text))
        throw std::invalid_argument("send_reply requires non-empty text");
    if (target.value.empty())
        throw std::invalid_argument("send_reply requires target_message_id");
    return ToolCall(Tool::send_reply, std::move(text), std::move(target), {});
}

ToolCall ToolCall::addReaction(MessageId target, std::string emoji)
{
    if (emoji.empty())
        throw std::invalid_argument("add_reaction requires an emoji");
    if (target.value.empty())
        throw std::invalid_argument("add_reaction requires target_message_id");
    return ToolCall(Tool::add_reaction, {}, std::move(target), std::move(emoji));
}

namespace
{

std::string requireString(json const& args, char const* key, Tool tool)
{
    auto const it = args.find(key);
    if (it == args.end() || !it->is_string())
        throw std::invalid_argument(std::string(toString(tool)) + " is missing string argument '" + key + "'");
    return it->get<std::string>();
}

} // namespace

ToolCall ToolCall::fromArguments(Tool tool, json const& arguments)
{
    if (!arguments.is_object())
        throw std::invalid_argument(std::string(toString(tool)) + " arguments must be an object");
    switch (tool)
    {
        case Tool::send_message: return sendMessage(requireString(arguments, "text", tool));
        case Tool::send_reply:
            return sendReply(MessageId { requireString(arguments, "target_message_id", tool) },
                             requireString(arguments, "text", tool));
        case Tool::add_reaction:
            return addReaction(MessageId { requireString(arguments, "target_message_id", tool) },
                               requireString(arguments, "emoji", tool));
    }
    throw std::invalid_argument("unknown tool");
}

json ToolCall::arguments() const
{
    switch (_tool)
    {
        case Tool::send_message: return json { { "text", _text } };
        case Tool::send_reply: return json { { "target_message_id", _target->value }, { "text", _text } };
        case Tool::add_reaction: return json { { "target_message_id", _target->value }, { "emoji", _emoji } };
    }
    return json::object();
}

std::string ToolCall::describe() const
{
    return std::string(toString(_tool)) + arguments().dump();
}

void to_json(json& j, ToolCall const& call)
{
    j = json { { "tool", std::string(toString(call.tool())) }, { "arguments", call.arguments() } };
}

ToolCall toolCallFromJson(json const& j)
{
    auto const name = j.at("tool").get<std::string>();
    auto const tool = toolFromString(name);
    if (!tool)
        throw std::invalid_argument("unknown tool '" + name + "'");
    return ToolCall::fromArguments(*tool, j.at("arguments"));
}

json toolSchemas()
{
    auto const stringProp = [](char const* description) {
        return json { { "type", "string" }, { "description", description } };
    };
    auto const tool = [](char const* name, char const* description, json properties, json required) {
        return json {
            { "type", "function" },
            { "function",
              {
                  { "name", name },
                  { "description", description },
                  { "parameters",
                    { { "type", "object" }, { "properties", std::move(properties) }, { "required", std::move(required) } } },
              } },
        };
    };

    return json::array({
        tool("send_message",
             "Send a new chat message to the group. Only one message per turn; send follow-ups in later turns.",
             { { "text", stringProp("Message text as you would type it.") } }, { "text" }),
        tool("send_reply",
             "Reply to a specific earlier message. Counts as a message: only one message per turn.",
             { { "target_message_id", stringProp("Id of the message being replied to, e.g. m12.") },
               { "text", stringProp("Reply text.") } },
             { "target_message_id", "text" }),
        tool("add_reaction", "React to a message with a single emoji. May be combined with a message in one turn.",
             { { "target_message_id", stringProp("Id of the message to react to.") },
               { "emoji", stringProp("A single emoji, e.g. 👍.") } },
             { "target_message_id", "emoji" }),
    });
}

} // namespace huma
