// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/provider.hpp>

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace huma
{

struct HttpProviderConfig
{
    /// Full chat-completions endpoint, e.g. https://llm.example.com/v1/chat/completions.
    std::string url;
    std::string apiKey;
    /// Sent as "model" when non-empty.
    std::string model;
    /// Extra request fields (temperature, top_p, ...) merged into every request body.
    nlohmann::json parameters = nlohmann::json::object();
    Millis timeout { 60000 };

    /// Reads HUMA_LLM_URL, HUMA_LLM_KEY and HUMA_LLM_MODEL. For a non-empty `role`,
    /// HUMA_LLM_URL_<ROLE> (and _KEY_, _MODEL_) take precedence. Throws ConfigError when no
    /// URL is set.
    static HttpProviderConfig fromEnvironment(std::string_view role = {});
};

struct HttpReply
{
    int status = 0;
    std::string body;
};

/// Performs one POST of `body` to config.url. Throws ProviderError(transport) when no HTTP
/// reply was received.
using HttpTransport = std::function<HttpReply(HttpProviderConfig const& config, std::string const& body)>;

/// cpp-httplib transport supporting http and https endpoints.
[[nodiscard]] HttpTransport defaultHttpTransport();

/// Chat-completions backend. Transport failures, 429 and 5xx replies are retried once.
class HttpProvider final: public Provider
{
  public:
    explicit HttpProvider(HttpProviderConfig config, HttpTransport transport = defaultHttpTransport());

    ProviderResponse complete(ProviderRequest const& request) override;

    [[nodiscard]] HttpProviderConfig const& config() const noexcept { return _config; }

  private:
    HttpProviderConfig _config;
    HttpTransport _transport;
};

/// The request body sent for `request`: system instruction, user transcript, and for tool turns
/// the tool schemas with tool_choice "auto".
[[nodiscard]] nlohmann::json buildChatRequest(HttpProviderConfig const& config, ProviderRequest const& request);

/// Parses a chat-completions reply body for the expected response kind. Throws
/// ProviderError(backend) for error payloads and ProviderError(parse) for anything malformed;
/// the raw body is attached to the error either way.
[[nodiscard]] ProviderResponse parseChatResponse(ResponseKind kind, std::string const& body);

} // namespace huma
