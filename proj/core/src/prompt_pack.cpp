// SPDX-License-Identifier: Apache-2.0
#include <huma/errors.hpp>
#include <huma/prompt_pack.hpp>

#include <fstream>
#include <sstream>

namespace huma
{

namespace
{

constexpr auto BuiltinVersion = "1";

constexpr auto RouterTemplate = R"(You are {{agent_name}}, a member of an informal online group chat. You are reading the conversation and deciding how, or whether, to take part next.

Rate how well each conversational strategy below fits the current moment, from 0 (clearly wrong) to 1 (clearly right). Staying silent is often right: people talk to each other without needing you. Consider the whole conversation, your scratchpad, your last reflection and any interrupted intentions.

Strategies:
{{strategies}}
Answer with a single JSON object mapping every strategy id to a number between 0 and 1, for example {"keep_silent": 0.4, "ask_question": 0.7}. No other text.
)";

constexpr auto ActionTemplate = R"(You are {{agent_name}}, a member of an informal online group chat. Write like a person typing in a group chat: short, casual, lowercase is fine, no lists or headings, never mention being an assistant.

Strategy for this turn: {{strategy_name}}
{{strategy_description}}

Use the tools to act. You may add reactions alongside a message, but send at most one message (send_message or send_reply) per turn; if you want to say more, send the next message in a later turn. Stop calling tools when you are done. You have at most {{max_turns}} turns.
Any text you write besides tool calls is kept as your private scratchpad.
)";

constexpr auto ReflectionTemplate = R"(You are {{agent_name}}, a member of an informal online group chat. In one sentence, reflect on where the conversation is going and on your own recent behaviour, and note a nearby topic worth exploring next. Reply with that single sentence only.
)";

std::string readFile(std::filesystem::path const& path)
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot read " + path.string());
    auto buffer = std::ostringstream {};
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

PromptPack::PromptPack(std::string version, std::map<std::string, std::string, std::less<>> templates):
    _version(std::move(version)), _templates(std::move(templates))
{
    for (auto const* name: RequiredTemplates)
        if (!_templates.contains(name))
            throw ConfigError(std::string("prompt pack lacks template '") + name + "'");
}

PromptPack const& PromptPack::builtin()
{
    static auto const pack = PromptPack(BuiltinVersion,
                                        {
                                            { "router", RouterTemplate },
                                            { "action", ActionTemplate },
                                            { "reflection", ReflectionTemplate },
                                        });
    return pack;
}

PromptPack PromptPack::load(std::filesystem::path const& dir)
{
    auto version = readFile(dir / "VERSION");
    while (!version.empty() && (version.back() == '\n' || version.back() == '\r'))
        version.pop_back();
    auto templates = std::map<std::string, std::string, std::less<>> {};
    for (auto const* name: RequiredTemplates)
        templates.emplace(name, readFile(dir / (std::string(name) + ".txt")));
    return PromptPack(std::move(version), std::move(templates));
}

std::string const& PromptPack::raw(std::string_view name) const
{
    auto const it = _templates.find(name);
    if (it == _templates.end())
        throw ConfigError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

std::string PromptPack::render(std::string_view name, Variables const& variables) const
{
    auto const& text = raw(name);
    auto out = std::string {};
    out.reserve(text.size());
    auto pos = std::size_t { 0 };
    while (pos < text.size())
    {
        auto const open = text.find("{{", pos);
        if (open == std::string::npos)
        {
            out.append(text, pos);
            break;
        }
        auto const close = text.find("}}", open + 2);
        if (close == std::string::npos)
            throw ConfigError("unterminated placeholder in template '" + std::string(name) + "'");
        out.append(text, pos, open - pos);
        auto const key = std::string_view(text).substr(open + 2, close - open - 2);
        auto const value = variables.find(key);
        if (value == variables.end())
            throw ConfigError("template '" + std::string(name) + "' needs a value for {{" + std::string(key) + "}}");
        out += value->second;
        pos = close + 2;
    }
    return out;
}

} // namespace huma
