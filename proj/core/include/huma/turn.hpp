// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/domain.hpp>

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace huma
{

enum class Tool
{
    send_message,
    send_reply,
    add_reaction,
};

[[nodiscard]] std::string_view toString(Tool tool) noexcept;
[[nodiscard]] std::optional<Tool> toolFromString(std::string_view name) noexcept;

/// send_message and send_reply produce a chat message; add_reaction does not.
[[nodiscard]] constexpr bool producesMessage(Tool tool) noexcept
{
    return tool == Tool::send_message || tool == Tool::send_reply;
}

/// One tool invocation requested by the model. Field presence matches the tool exactly:
/// send_message{text}, send_reply{target, text}, add_reaction{target, emoji}.
class ToolCall
{
  public:
    static ToolCall sendMessage(std::string text);
    static ToolCall sendReply(MessageId target, std::string text);
    static ToolCall addReaction(MessageId target, std::string emoji);

    /// Parses the tool's JSON arguments ({"text"}, {"target_message_id","text"},
    /// {"target_message_id","emoji"}). Throws std::invalid_argument on a shape mismatch.
    static ToolCall fromArguments(Tool tool, nlohmann::json const& arguments);

    [[nodiscard]] Tool tool() const noexcept { return _tool; }
    [[nodiscard]] std::string const& text() const noexcept { return _text; }
    [[nodiscard]] std::optional<MessageId> const& target() const noexcept { return _target; }
    [[nodiscard]] std::string const& emoji() const noexcept { return _emoji; }

    [[nodiscard]] nlohmann::json arguments() const;
    [[nodiscard]] std::string describe() const;

    bool operator==(ToolCall const&) const = default;

  private:
    ToolCall(Tool tool, std::string text, std::optional<MessageId> target, std::string emoji);

    Tool _tool;
    std::string _text;
    std::optional<MessageId> _target;
    std::string _emoji;
};

/// {"tool": "...", "arguments": {...}}
void to_json(nlohmann::json& j, ToolCall const& call);
ToolCall toolCallFromJson(nlohmann::json const& j);

/// One batch of tool calls returned by a single provider response.
struct Turn
{
    std::vector<ToolCall> calls;

    bool operator==(Turn const&) const = default;
};

/// Provider-facing schemas for the three tools, in chat-completions "tools" format.
[[nodiscard]] nlohmann::json toolSchemas();

} // namespace huma
