// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/clock.hpp>
#include <huma/errors.hpp>
#include <huma/turn.hpp>

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace huma
{

enum class ResponseKind
{
    tool_turn,
    score_map,
    sentence,
};

[[nodiscard]] std::string_view toString(ResponseKind kind) noexcept;
[[nodiscard]] std::optional<ResponseKind> responseKindFromString(std::string_view name) noexcept;

using ScoreMap = std::map<std::string, double>;

struct ProviderRequest
{
    /// Which pipeline stage is asking (router, action, reflection); used for logging and routing
    /// to per-role backends.
    std::string role;
    std::string instruction;
    std::string transcript;
    ResponseKind kind = ResponseKind::sentence;
    /// Tool schemas; present iff kind == tool_turn.
    std::optional<nlohmann::json> tools;
    /// Strategy ids being scored; non-empty iff kind == score_map.
    std::vector<std::string> candidates;

    bool operator==(ProviderRequest const&) const = default;
};

void to_json(nlohmann::json& j, ProviderRequest const& request);

struct ProviderResponse
{
    /// Alternative index matches ResponseKind.
    std::variant<Turn, ScoreMap, std::string> payload;
    /// Free text the model produced next to its tool calls; becomes scratchpad notes.
    std::string notes;
    /// Original backend text, kept for logging.
    std::string raw;
    /// Lenient-parse notes (skipped entries and the like).
    std::vector<std::string> warnings;
    /// Generation time to simulate on a virtual clock. Always zero for live backends.
    Millis simulatedLatency { 0 };

    [[nodiscard]] ResponseKind kind() const noexcept { return static_cast<ResponseKind>(payload.index()); }
    [[nodiscard]] Turn const& turn() const { return std::get<Turn>(payload); }
    [[nodiscard]] ScoreMap const& scores() const { return std::get<ScoreMap>(payload); }
    [[nodiscard]] std::string const& sentence() const { return std::get<std::string>(payload); }
};

/// A language-model backend. complete() performs one blocking exchange.
///
/// Throws ProviderError (transport, parse, backend) or ScriptExhausted.
class Provider
{
  public:
    virtual ~Provider() = default;
    virtual ProviderResponse complete(ProviderRequest const& request) = 0;
};

using ProviderResult = std::variant<ProviderResponse, ProviderError>;

/// Asynchronous access to a provider from a clock-driven workflow. The completion always runs on
/// the clock's thread. ScriptExhausted is not converted into a result; it propagates.
class ProviderChannel
{
  public:
    virtual ~ProviderChannel() = default;
    virtual void submit(ProviderRequest request, std::function<void(ProviderResult)> done) = 0;
};

/// Calls the provider synchronously and delivers the result after the response's simulated
/// latency. Used with VirtualClock in tests and simulations.
class InlineChannel final: public ProviderChannel
{
  public:
    InlineChannel(Provider& provider, Clock& clock): _provider(provider), _clock(clock) {}

    void submit(ProviderRequest request, std::function<void(ProviderResult)> done) override;

  private:
    Provider& _provider;
    Clock& _clock;
};

// --- lenient parsing helpers shared by all backends -----------------------------------------

/// The first balanced {...} in `text`, honouring JSON string quoting.
[[nodiscard]] std::optional<std::string_view> extractJsonObject(std::string_view text);

/// Parses a strategy score map out of free-form model output. Non-numeric entries are skipped
/// (numeric strings are accepted) and reported in `warnings`.
///
/// Throws ProviderError(parse) if no JSON object can be found.
[[nodiscard]] ScoreMap parseScoreMap(std::string_view text, std::vector<std::string>* warnings = nullptr);

/// The first sentence of `text`: up to and including the first '.', '!' or '?' that ends the
/// text or is followed by whitespace, trimmed, and capped at `maxChars` code points.
[[nodiscard]] std::string firstSentence(std::string_view text, std::size_t maxChars = 300);

[[nodiscard]] std::string trim(std::string_view text);

} // namespace huma
