// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <huma/http_provider.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>

namespace huma
{

using nlohmann::json;

namespace
{

std::optional<std::string> env(std::string const& name)
{
    if (auto const* value = std::getenv(name.c_str()); value && *value)
        return std::string(value);
    return std::nullopt;
}

std::string upper(std::string_view text)
{
    auto out = std::string(text);
    std::ranges::transform(out, out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool transient(int status)
{
    return status == 429 || status >= 500;
}

std::string excerpt(std::string const& body)
{
    return body.size() <= 200 ? body : body.substr(0, 200) + "...";
}

} // namespace

HttpProviderConfig HttpProviderConfig::fromEnvironment(std::string_view role)
{
    auto const lookup = [&](std::string const& base) {
        if (!role.empty())
            if (auto value = env(base + "_" + upper(role)))
                return value;
        return env(base);
    };

    auto config = HttpProviderConfig {};
    auto url = lookup("HUMA_LLM_URL");
    if (!url)
        throw ConfigError("HUMA_LLM_URL is not set");
    config.url = *url;
    config.apiKey = lookup("HUMA_LLM_KEY").value_or("");
    config.model = lookup("HUMA_LLM_MODEL").value_or("");
    return config;
}

HttpTransport defaultHttpTransport()
{
    return [](HttpProviderConfig const& config, std::string const& body) {
        static auto const pattern = std::regex(R"(^(https?://[^/]+)(/.*)?$)");
        auto match = std::smatch {};
        if (!std::regex_match(config.url, match, pattern))
            throw ProviderError(ProviderErrorKind::transport, "malformed endpoint URL: " + config.url);
        auto const path = match[2].matched ? match[2].str() : std::string("/");

        auto client = httplib::Client(match[1].str());
        auto const seconds = config.timeout.count() / 1000;
        auto const micros = (config.timeout.count() % 1000) * 1000;
        client.set_connection_timeout(seconds, micros);
        client.set_read_timeout(seconds, micros);
        client.set_write_timeout(seconds, micros);

        auto headers = httplib::Headers {};
        if (!config.apiKey.empty())
            headers.emplace("Authorization", "Bearer " + config.apiKey);

        auto const result = client.Post(path, headers, body, "application/json");
        if (!result)
            throw ProviderError(ProviderErrorKind::transport,
                                "request to " + config.url + " failed: " + httplib::to_string(result.error()));
        return HttpReply { result->status, result->body };
    };
}

json buildChatRequest(HttpProviderConfig const& config, ProviderRequest const& request)
{
    auto body = json {
        { "messages",
          json::array({
              json { { "role", "system" }, { "content", request.instruction } },
              json { { "role", "user" }, { "content", request.transcript } },
          }) },
    };
    if (!config.model.empty())
        body["model"] = config.model;
    if (request.kind == ResponseKind::tool_turn)
    {
        body["tools"] = request.tools.value_or(toolSchemas());
        body["tool_choice"] = "auto";
    }
    for (auto const& [key, value]: config.parameters.items())
        body[key] = value;
    return body;
}

ProviderResponse parseChatResponse(ResponseKind kind, std::string const& body)
{
    auto const fail = [&](std::string const& message) {
        return ProviderError(ProviderErrorKind::parse, message, body);
    };

    auto root = json::parse(body, nullptr, false);
    if (root.is_discarded())
        throw fail("backend reply is not JSON");
    if (!root.is_object())
        throw fail("backend reply is not a JSON object");
    if (auto const it = root.find("error"); it != root.end() && !it->is_null())
    {
        auto const message = it->is_object() ? it->value("message", it->dump()) : it->dump();
        throw ProviderError(ProviderErrorKind::backend, "backend error: " + message, body);
    }

    auto const choices = root.find("choices");
    if (choices == root.end() || !choices->is_array() || choices->empty())
        throw fail("backend reply has no choices");
    auto const& choice = choices->front();
    if (!choice.is_object() || !choice.contains("message") || !choice["message"].is_object())
        throw fail("backend choice has no message");
    auto const& message = choice["message"];

    auto content = std::string {};
    if (auto const it = message.find("content"); it != message.end() && !it->is_null())
    {
        if (!it->is_string())
            throw fail("message content is not a string");
        content = it->get<std::string>();
    }

    auto response = ProviderResponse {};
    response.raw = body;
    switch (kind)
    {
        case ResponseKind::sentence:
            if (isBlank(content))
                throw fail("backend returned no text");
            response.payload = content;
            break;
        case ResponseKind::score_map:
            try
            {
                response.payload = parseScoreMap(content, &response.warnings);
            }
            catch (ProviderError const& e)
            {
                throw fail(e.what());
            }
            break;
        case ResponseKind::tool_turn:
        {
            auto turn = Turn {};
            if (auto const it = message.find("tool_calls"); it != message.end() && !it->is_null())
            {
                if (!it->is_array())
                    throw fail("tool_calls is not an array");
                for (auto const& call: *it)
                {
                    if (!call.is_object() || !call.contains("function") || !call["function"].is_object())
                        throw fail("tool call without a function object");
                    auto const& function = call["function"];
                    auto const name = function.value("name", "");
                    auto const tool = toolFromString(name);
                    if (!tool)
                        throw fail("unknown tool '" + name + "'");
                    auto arguments = function.value("arguments", json::object());
                    if (arguments.is_string())
                    {
                        arguments = json::parse(arguments.get<std::string>(), nullptr, false);
                        if (arguments.is_discarded())
                            throw fail("arguments of " + name + " are not valid JSON");
                    }
                    try
                    {
                        turn.calls.push_back(ToolCall::fromArguments(*tool, arguments));
                    }
                    catch (std::exception const& e)
                    {
                        throw fail(name + ": " + e.what());
                    }
                }
            }
            response.notes = trim(content);
            response.payload = std::move(turn);
            break;
        }
    }
    return response;
}

HttpProvider::HttpProvider(HttpProviderConfig config, HttpTransport transport):
    _config(std::move(config)), _transport(std::move(transport))
{
    if (_config.url.empty())
        throw ConfigError("HTTP provider needs an endpoint URL");
    if (!_config.parameters.is_object())
        throw ConfigError("HTTP provider parameters must be a JSON object");
}

ProviderResponse HttpProvider::complete(ProviderRequest const& request)
{
    auto const body = buildChatRequest(_config, request).dump();

    auto reply = std::optional<HttpReply> {};
    for (auto attempt = 1; attempt <= 2; ++attempt)
    {
        try
        {
            reply = _transport(_config, body);
        }
        catch (ProviderError const& e)
        {
            if (e.kind() != ProviderErrorKind::transport || attempt == 2)
            {
                spdlog::error("provider {}: {}", request.role, e.what());
                throw;
            }
            spdlog::warn("provider {}: {}; retrying", request.role, e.what());
            continue;
        }
        if (transient(reply->status) && attempt == 1)
        {
            spdlog::warn("provider {}: HTTP {}; retrying", request.role, reply->status);
            continue;
        }
        break;
    }

    if (reply->status < 200 || reply->status >= 300)
    {
        auto error = ProviderError(transient(reply->status) ? ProviderErrorKind::transport : ProviderErrorKind::backend,
                                   "HTTP " + std::to_string(reply->status) + " from " + _config.url, reply->body);
        spdlog::error("provider {}: {} body={}", request.role, error.what(), excerpt(reply->body));
        throw error;
    }

    try
    {
        return parseChatResponse(request.kind, reply->body);
    }
    catch (ProviderError const& e)
    {
        spdlog::error("provider {}: {} raw={}", request.role, e.what(), excerpt(e.raw()));
        throw;
    }
}

} // namespace huma
