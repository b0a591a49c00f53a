// SPDX-License-Identifier: Apache-2.0
#include <huma/prompt_pack.hpp>
#include <huma/strategy.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace huma
{

using nlohmann::json;

void to_json(json& j, Strategy const& s)
{
    j = json {
        { "id", s.id },
        { "name", s.name },
        { "description", s.description },
        { "timeliness_exempt", s.timelinessExempt },
    };
}

void from_json(json const& j, Strategy& s)
{
    s.id = j.at("id").get<std::string>();
    s.name = j.value("name", s.id);
    s.description = j.at("description").get<std::string>();
    s.timelinessExempt = j.value("timeliness_exempt", false);
}

StrategyCatalog::StrategyCatalog(std::vector<Strategy> strategies): _strategies(std::move(strategies))
{
    if (_strategies.empty())
        throw CatalogError("strategy catalog is empty");
    auto seen = std::set<std::string_view> {};
    for (auto const& s: _strategies)
    {
        if (s.id.empty())
            throw CatalogError("strategy with empty id");
        if (!seen.insert(s.id).second)
            throw CatalogError("duplicate strategy id '" + s.id + "'");
        if (isBlank(s.description))
            throw CatalogError("strategy '" + s.id + "' has an empty description");
    }
}

StrategyCatalog StrategyCatalog::fromJson(json const& j)
{
    if (!j.is_array())
        throw CatalogError("strategy catalog must be a JSON array");
    auto strategies = std::vector<Strategy> {};
    for (auto const& entry: j)
    {
        try
        {
            strategies.push_back(entry.get<Strategy>());
        }
        catch (json::exception const& e)
        {
            throw CatalogError(std::string("malformed strategy entry: ") + e.what());
        }
    }
    return StrategyCatalog(std::move(strategies));
}

StrategyCatalog StrategyCatalog::load(std::filesystem::path const& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw CatalogError("cannot read catalog " + path.string());
    auto parsed = json::parse(in, nullptr, false);
    if (parsed.is_discarded())
        throw CatalogError("catalog " + path.string() + " is not valid JSON");
    return fromJson(parsed);
}

Strategy const* StrategyCatalog::find(std::string_view id) const
{
    auto const it = std::ranges::find(_strategies, id, &Strategy::id);
    return it == _strategies.end() ? nullptr : &*it;
}

Strategy const& StrategyCatalog::get(std::string_view id) const
{
    if (auto const* s = find(id))
        return *s;
    throw std::out_of_range("unknown strategy '" + std::string(id) + "'");
}

json StrategyCatalog::toJson() const
{
    return json(_strategies);
}

CatalogReport validateCatalog(StrategyCatalog const& catalog)
{
    auto report = CatalogReport {};
    for (auto const id: TimelinessExemptIds)
    {
        auto const* s = catalog.find(id);
        if (!s)
            report.errors.push_back("missing required strategy '" + std::string(id) + "'");
        else if (!s->timelinessExempt)
            report.errors.push_back("strategy '" + std::string(id) + "' must be timeliness_exempt");
    }
    for (auto const id: CoreStrategyIds)
        if (!catalog.find(id))
            report.warnings.push_back("catalog lacks core strategy '" + std::string(id) + "'");
    if (catalog.size() != DefaultCatalogSize)
        report.warnings.push_back("catalog has " + std::to_string(catalog.size()) + " strategies, expected "
                                  + std::to_string(DefaultCatalogSize));
    return report;
}

StrategyCatalog loadValidatedCatalog(std::filesystem::path const& path)
{
    auto catalog = StrategyCatalog::load(path);
    auto const report = validateCatalog(catalog);
    for (auto const& w: report.warnings)
        spdlog::warn("{}: {}", path.string(), w);
    if (!report.ok())
    {
        auto message = path.string() + ":";
        for (auto const& e: report.errors)
            message += " " + e + ";";
        throw CatalogError(message);
    }
    return catalog;
}

StrategyCatalog const& defaultCatalog()
{
    static auto const catalog = StrategyCatalog({
        { "keep_silent", "Keep Silent",
          "Say nothing this time. Right when people are talking among themselves, when the last message needs no "
          "answer, or when you spoke recently.",
          true },
        { "go_deeper", "Go Deeper",
          "Pick up the current topic and push it further with a concrete detail, follow-up thought or personal angle.",
          false },
        { "ask_question", "Ask Question",
          "Ask one short, open question that invites someone to share more about what they just said.", false },
        { "bridge_perspectives", "Bridge Perspectives",
          "Connect two members' points of view, especially when they disagree or talk past each other.", false },
        { "recall_message", "Recall Message",
          "Bring back something a member said earlier that is relevant again, crediting them by name.", false },
        { "refocus_to_goal", "Refocus to Goal",
          "Gently steer a drifting conversation back to the group's purpose without lecturing.", false },
        { "directly_mentioned", "Directly Mentioned",
          "Someone addressed you by name or asked you directly; answer them.", true },
        { "continue_pending", "Continue Pending",
          "Resume what you were about to say before being interrupted, if it still makes sense.", true },
        { "tell_a_story", "Tell a Story",
          "Share a short personal anecdote across a few consecutive messages, one message per turn.", true },
        { "welcome_newcomer", "Welcome Newcomer",
          "Greet someone who just joined or spoke for the first time and make them feel included.", false },
        { "share_tip", "Share Tip", "Offer a practical, specific tip that helps with what someone is trying to do.",
          false },
        { "light_humor", "Light Humor", "Add a light, friendly joke or playful remark that fits the mood.", false },
        { "acknowledge_emotion", "Acknowledge Emotion",
          "Recognise frustration, excitement or worry someone expressed before anything else.", false },
        { "summarize_thread", "Summarize Thread",
          "Briefly sum up where a long or tangled discussion has landed so far.", false },
        { "offer_example", "Offer Example", "Make an abstract point concrete with a short example.", false },
        { "invite_quiet_member", "Invite Quiet Member",
          "Draw in a member who has been quiet for a while with a low-pressure invitation.", false },
        { "agree_and_extend", "Agree and Extend",
          "Agree with a point someone made and add one small thing to it.", false },
        { "polite_disagree", "Polite Disagree",
          "Disagree with a claim respectfully, giving a reason, without escalating.", false },
        { "react_only", "React Only", "Respond with an emoji reaction to a message instead of writing.", false },
        { "defuse_tension", "Defuse Tension",
          "Calm a heated exchange by acknowledging both sides and lowering the temperature.", false },
    });
    return catalog;
}

ActivationHistory::ActivationHistory(std::size_t capacity): _capacity(capacity)
{
    if (capacity == 0)
        throw std::invalid_argument("activation history capacity must be at least 1");
}

void ActivationHistory::record(std::string strategyId)
{
    _entries.push_back(std::move(strategyId));
    while (_entries.size() > _capacity)
        _entries.pop_front();
}

std::optional<std::size_t> ActivationHistory::stepsSince(std::string_view strategyId) const
{
    auto const it = std::find(_entries.rbegin(), _entries.rend(), strategyId);
    if (it == _entries.rend())
        return std::nullopt;
    return static_cast<std::size_t>(std::distance(_entries.rbegin(), it));
}

ActivationHistory recordActivation(ActivationHistory history, std::string strategyId)
{
    history.record(std::move(strategyId));
    return history;
}

double timelinessScore(Strategy const& strategy, ActivationHistory const& history, std::size_t catalogSize)
{
    if (strategy.timelinessExempt)
        return 1.0;
    auto const k = history.stepsSince(strategy.id);
    if (!k)
        return 1.0;
    return std::min(1.0, static_cast<double>(*k) / static_cast<double>(catalogSize));
}

RouterDecision selectStrategy(ScoreMap const& scores, StrategyCatalog const& catalog, ActivationHistory const& history)
{
    auto best = std::optional<RouterDecision> {};
    for (auto const& strategy: catalog.strategies())
    {
        auto const it = scores.find(strategy.id);
        if (it == scores.end())
            throw std::invalid_argument("no appropriateness score for strategy '" + strategy.id + "'");
        auto const a = it->second;
        auto const t = timelinessScore(strategy, history, catalog.size());
        auto const combined = a + t;
        if (!best || combined > best->combined)
            best = RouterDecision { strategy.id, a, t, combined };
    }
    return *best;
}

std::string renderStrategyList(StrategyCatalog const& catalog)
{
    auto out = std::ostringstream {};
    auto n = 1;
    for (auto const& s: catalog.strategies())
        out << n++ << ". " << s.id << ": " << s.name << ". " << s.description << '\n';
    return out.str();
}

ProviderRequest buildScoringRequest(std::string const& context, StrategyCatalog const& catalog,
                                    PromptPack const& prompts, std::string const& agentName)
{
    auto request = ProviderRequest {
        .role = "router",
        .instruction = prompts.render("router", { { "agent_name", agentName }, { "strategies", renderStrategyList(catalog) } }),
        .transcript = context,
        .kind = ResponseKind::score_map,
    };
    for (auto const& s: catalog.strategies())
        request.candidates.push_back(s.id);
    return request;
}

AppropriatenessScores normalizeScores(ScoreMap const& raw, StrategyCatalog const& catalog,
                                      std::vector<std::string> warnings)
{
    auto result = AppropriatenessScores { {}, std::move(warnings) };
    for (auto const& s: catalog.strategies())
    {
        auto const it = raw.find(s.id);
        if (it == raw.end())
        {
            result.warnings.push_back("no score for '" + s.id + "', using 0");
            result.scores[s.id] = 0.0;
            continue;
        }
        if (!std::isfinite(it->second))
        {
            result.warnings.push_back("non-finite score for '" + s.id + "', using 0");
            result.scores[s.id] = 0.0;
            continue;
        }
        result.scores[s.id] = std::clamp(it->second, 0.0, 1.0);
    }
    for (auto const& [id, score]: raw)
        if (!catalog.find(id))
            result.warnings.push_back("score for unknown strategy '" + id + "' ignored");
    return result;
}

AppropriatenessScores scoreAppropriateness(std::string const& context, StrategyCatalog const& catalog,
                                           Provider& provider, PromptPack const& prompts, std::string const& agentName)
{
    auto const request = buildScoringRequest(context, catalog, prompts, agentName);
    try
    {
        auto const response = provider.complete(request);
        if (response.kind() != ResponseKind::score_map)
            throw ProviderError(ProviderErrorKind::parse, "provider answered a scoring request with "
                                                              + std::string(toString(response.kind())),
                                response.raw);
        auto scores = normalizeScores(response.scores(), catalog, response.warnings);
        for (auto const& w: scores.warnings)
            spdlog::warn("router: {}", w);
        return scores;
    }
    catch (ProviderError const& e)
    {
        throw RouterUnavailable(std::string("appropriateness scoring failed: ") + e.what());
    }
}

} // namespace huma
