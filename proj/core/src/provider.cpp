// SPDX-License-Identifier: Apache-2.0
#include <huma/provider.hpp>

#include <charconv>
#include <cmath>

namespace huma
{

using nlohmann::json;

std::string_view toString(ResponseKind kind) noexcept
{
    switch (kind)
    {
        case ResponseKind::tool_turn: return "tool_turn";
        case ResponseKind::score_map: return "score_map";
        case ResponseKind::sentence: return "sentence";
    }
    return "unknown";
}

std::optional<ResponseKind> responseKindFromString(std::string_view name) noexcept
{
    for (auto kind: { ResponseKind::tool_turn, ResponseKind::score_map, ResponseKind::sentence })
        if (toString(kind) == name)
            return kind;
    return std::nullopt;
}

void to_json(json& j, ProviderRequest const& request)
{
    j = json {
        { "role", request.role },
        { "kind", std::string(toString(request.kind)) },
        { "instruction", request.instruction },
        { "transcript", request.transcript },
    };
    if (request.tools)
        j["tools"] = *request.tools;
    if (!request.candidates.empty())
        j["candidates"] = request.candidates;
}

void InlineChannel::submit(ProviderRequest request, std::function<void(ProviderResult)> done)
{
    auto result = [&]() -> ProviderResult {
        try
        {
            return _provider.complete(request);
        }
        catch (ProviderError const& e)
        {
            return e;
        }
    }();
    auto const latency = std::holds_alternative<ProviderResponse>(result)
                             ? std::get<ProviderResponse>(result).simulatedLatency
                             : Millis { 0 };
    _clock.callAfter(latency, [done = std::move(done), result = std::move(result)]() mutable {
        done(std::move(result));
    });
}

std::optional<std::string_view> extractJsonObject(std::string_view text)
{
    auto const start = text.find('{');
    if (start == std::string_view::npos)
        return std::nullopt;

    auto depth = 0;
    auto inString = false;
    auto escaped = false;
    for (auto i = start; i < text.size(); ++i)
    {
        auto const c = text[i];
        if (inString)
        {
            if (escaped)
                escaped = false;
            else if (c == '\\')
                escaped = true;
            else if (c == '"')
                inString = false;
            continue;
        }
        if (c == '"')
            inString = true;
        else if (c == '{')
            ++depth;
        else if (c == '}' && --depth == 0)
            return text.substr(start, i - start + 1);
    }
    return std::nullopt;
}

namespace
{

std::optional<double> lenientNumber(json const& value)
{
    if (value.is_number())
        return value.get<double>();
    if (value.is_string())
    {
        auto const s = trim(value.get<std::string>());
        auto result = 0.0;
        auto const [end, ec] = std::from_chars(s.data(), s.data() + s.size(), result);
        if (ec == std::errc {} && end == s.data() + s.size())
            return result;
    }
    return std::nullopt;
}

} // namespace

ScoreMap parseScoreMap(std::string_view text, std::vector<std::string>* warnings)
{
    auto const object = extractJsonObject(text);
    if (!object)
        throw ProviderError(ProviderErrorKind::parse, "score map response contains no JSON object", std::string(text));

    auto parsed = json::parse(*object, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw ProviderError(ProviderErrorKind::parse, "score map response is not valid JSON", std::string(text));

    auto scores = ScoreMap {};
    for (auto const& [key, value]: parsed.items())
    {
        auto const number = lenientNumber(value);
        if (!number || !std::isfinite(*number))
        {
            if (warnings)
                warnings->push_back("non-numeric score for '" + key + "' ignored");
            continue;
        }
        scores[key] = *number;
    }
    return scores;
}

std::string trim(std::string_view text)
{
    auto const isSpace = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
    while (!text.empty() && isSpace(text.front()))
        text.remove_prefix(1);
    while (!text.empty() && isSpace(text.back()))
        text.remove_suffix(1);
    return std::string(text);
}

std::string firstSentence(std::string_view text, std::size_t maxChars)
{
    auto const trimmed = trim(text);
    auto end = trimmed.size();
    for (auto i = std::size_t { 0 }; i < trimmed.size(); ++i)
    {
        auto const c = trimmed[i];
        if (c != '.' && c != '!' && c != '?')
            continue;
        // Swallow runs like "?!" or "...".
        auto j = i + 1;
        while (j < trimmed.size() && (trimmed[j] == '.' || trimmed[j] == '!' || trimmed[j] == '?'))
            ++j;
        if (j == trimmed.size() || trimmed[j] == ' ' || trimmed[j] == '\n' || trimmed[j] == '\t'
            || trimmed[j] == '\r')
        {
            end = j;
            break;
        }
        i = j - 1;
    }
    auto sentence = std::string_view(trimmed).substr(0, end);
    return trim(codePointPrefix(sentence, maxChars));
}

} // namespace huma
