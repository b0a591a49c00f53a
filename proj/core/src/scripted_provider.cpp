// SPDX-License-Identifier: Apache-2.0
#include <huma/scripted_provider.hpp>

#include <stdexcept>

namespace huma
{

using nlohmann::json;

namespace
{

ProviderErrorKind errorKindFromString(std::string const& name)
{
    if (name == "transport")
        return ProviderErrorKind::transport;
    if (name == "parse")
        return ProviderErrorKind::parse;
    if (name == "backend")
        return ProviderErrorKind::backend;
    throw ConfigError("unknown scripted error kind '" + name + "'");
}

Turn turnFromCalls(json const& calls)
{
    if (!calls.is_array())
        throw std::invalid_argument("'calls' must be an array");
    auto turn = Turn {};
    for (auto const& c: calls)
        turn.calls.push_back(toolCallFromJson(c));
    return turn;
}

} // namespace

ScriptRule ScriptRule::fromJson(json const& j)
{
    auto rule = ScriptRule {};
    auto const kindName = j.at("kind").get<std::string>();
    auto const kind = responseKindFromString(kindName);
    if (!kind)
        throw ConfigError("unknown response kind '" + kindName + "'");
    rule.kind = *kind;
    if (auto it = j.find("contains"); it != j.end() && !it->is_null())
        rule.contains = it->get<std::string>();
    if (auto it = j.find("instruction_contains"); it != j.end() && !it->is_null())
        rule.instructionContains = it->get<std::string>();
    rule.times = j.value("times", std::size_t { 1 });
    rule.unlimited = j.value("unlimited", false);
    if (auto it = j.find("latency_ms"); it != j.end())
    {
        if (it->is_array())
        {
            rule.latencyMin = Millis { it->at(0).get<std::int64_t>() };
            rule.latencyMax = Millis { it->at(1).get<std::int64_t>() };
        }
        else
            rule.latencyMin = rule.latencyMax = Millis { it->get<std::int64_t>() };
        if (rule.latencyMin.count() < 0 || rule.latencyMax < rule.latencyMin)
            throw ConfigError("invalid latency_ms range");
    }
    rule.reply = j;

    // Fail on malformed scripts at load time rather than mid-simulation.
    if (!j.contains("error") && !j.contains("raw"))
    {
        try
        {
            switch (rule.kind)
            {
                case ResponseKind::tool_turn: (void) turnFromCalls(j.value("calls", json::array())); break;
                case ResponseKind::score_map:
                    if (!j.contains("scores") && !j.contains("default"))
                        throw std::invalid_argument("score_map rule needs 'scores' or 'default'");
                    break;
                case ResponseKind::sentence: (void) j.at("text").get<std::string>(); break;
            }
        }
        catch (std::exception const& e)
        {
            throw ConfigError("malformed " + kindName + " rule: " + e.what());
        }
    }
    return rule;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptRule> rules, std::uint64_t seed): _rng(seed)
{
    _slots.reserve(rules.size());
    for (auto& r: rules)
        _slots.push_back(Slot { std::move(r) });
}

std::vector<ScriptRule> ScriptedProvider::rulesFromJson(json const& j)
{
    if (j.is_object() && !j.contains("rules"))
        throw ConfigError("provider script object needs a 'rules' array");
    auto const& list = j.is_object() ? j.at("rules") : j;
    if (!list.is_array())
        throw ConfigError("provider script must be an array of rules");
    auto rules = std::vector<ScriptRule> {};
    for (auto const& r: list)
        rules.push_back(ScriptRule::fromJson(r));
    return rules;
}

ScriptedProvider ScriptedProvider::fromJson(json const& j, std::uint64_t seed)
{
    return ScriptedProvider(rulesFromJson(j), seed);
}

ProviderResponse ScriptedProvider::complete(ProviderRequest const& request)
{
    auto lock = std::lock_guard(_mutex);
    _log.push_back(request);

    for (auto& slot: _slots)
    {
        if (slot.rule.kind != request.kind)
            continue;
        if (!slot.rule.unlimited && slot.used >= slot.rule.times)
            continue;
        if (slot.rule.contains && request.transcript.find(*slot.rule.contains) == std::string::npos)
            continue;
        if (slot.rule.instructionContains
            && request.instruction.find(*slot.rule.instructionContains) == std::string::npos)
            continue;
        ++slot.used;
        return build(slot.rule, request);
    }
    throw ScriptExhausted("no scripted " + std::string(toString(request.kind)) + " response left for "
                          + request.role + " request #" + std::to_string(_log.size()));
}

ProviderResponse ScriptedProvider::build(ScriptRule const& rule, ProviderRequest const& request)
{
    auto latency = rule.latencyMin;
    if (rule.latencyMax > rule.latencyMin)
    {
        auto const span = static_cast<std::uint64_t>((rule.latencyMax - rule.latencyMin).count()) + 1;
        latency += Millis { static_cast<std::int64_t>(_rng() % span) };
    }

    auto const& r = rule.reply;
    if (auto it = r.find("error"); it != r.end())
        throw ProviderError(errorKindFromString(it->get<std::string>()), "scripted provider failure", r.dump());

    auto response = ProviderResponse {};
    if (auto it = r.find("raw"); it != r.end())
        response = parseRawResponse(rule.kind, it->get<std::string>());
    else
    {
        switch (rule.kind)
        {
            case ResponseKind::tool_turn:
                response.payload = turnFromCalls(r.value("calls", json::array()));
                response.notes = r.value("notes", std::string {});
                break;
            case ResponseKind::score_map:
            {
                auto scores = ScoreMap {};
                if (auto d = r.find("default"); d != r.end())
                    for (auto const& id: request.candidates)
                        scores[id] = d->get<double>();
                if (auto s = r.find("scores"); s != r.end())
                    for (auto const& [id, value]: s->items())
                        scores[id] = value.get<double>();
                response.payload = std::move(scores);
                break;
            }
            case ResponseKind::sentence: response.payload = r.at("text").get<std::string>(); break;
        }
        response.raw = r.dump();
    }
    response.simulatedLatency = latency;
    return response;
}

std::vector<ProviderRequest> ScriptedProvider::callLog() const
{
    auto lock = std::lock_guard(_mutex);
    return _log;
}

json ScriptedProvider::callLogJson() const
{
    auto lock = std::lock_guard(_mutex);
    return json(_log);
}

std::size_t ScriptedProvider::callCount() const
{
    auto lock = std::lock_guard(_mutex);
    return _log.size();
}

ProviderResponse parseRawResponse(ResponseKind kind, std::string const& raw)
{
    auto response = ProviderResponse {};
    response.raw = raw;
    switch (kind)
    {
        case ResponseKind::score_map: response.payload = parseScoreMap(raw, &response.warnings); break;
        case ResponseKind::sentence: response.payload = raw; break;
        case ResponseKind::tool_turn:
        {
            auto const object = extractJsonObject(raw);
            auto parsed = object ? json::parse(*object, nullptr, false) : json(json::value_t::discarded);
            if (parsed.is_discarded() || !parsed.is_object())
                throw ProviderError(ProviderErrorKind::parse, "tool turn is not a JSON object", raw);
            try
            {
                response.payload = turnFromCalls(parsed.value("calls", json::array()));
            }
            catch (std::exception const& e)
            {
                throw ProviderError(ProviderErrorKind::parse, std::string("malformed tool turn: ") + e.what(), raw);
            }
            response.notes = parsed.value("notes", std::string {});
            break;
        }
    }
    return response;
}

} // namespace huma
