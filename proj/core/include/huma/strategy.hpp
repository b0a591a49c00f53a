// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/provider.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <deque>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace huma
{

namespace strategy_ids
{
inline constexpr std::string_view KeepSilent = "keep_silent";
inline constexpr std::string_view DirectlyMentioned = "directly_mentioned";
inline constexpr std::string_view ContinuePending = "continue_pending";
inline constexpr std::string_view TellAStory = "tell_a_story";
} // namespace strategy_ids

/// Strategies whose timeliness is pinned to 1 regardless of how recently they ran.
inline constexpr auto TimelinessExemptIds = std::array<std::string_view, 4> {
    strategy_ids::KeepSilent,
    strategy_ids::DirectlyMentioned,
    strategy_ids::ContinuePending,
    strategy_ids::TellAStory,
};

/// The non-exempt strategies every stock catalog is expected to carry.
inline constexpr auto CoreStrategyIds = std::array<std::string_view, 5> {
    "go_deeper", "ask_question", "bridge_perspectives", "recall_message", "refocus_to_goal",
};

inline constexpr std::size_t DefaultCatalogSize = 20;

struct Strategy
{
    std::string id;
    std::string name;
    std::string description;
    bool timelinessExempt = false;

    bool operator==(Strategy const&) const = default;
};

void to_json(nlohmann::json& j, Strategy const& s);
void from_json(nlohmann::json const& j, Strategy& s);

/// Ordered set of strategies. Order matters: it breaks ties in selection.
class StrategyCatalog
{
  public:
    /// Throws CatalogError if empty, if ids repeat, or if a description is blank.
    explicit StrategyCatalog(std::vector<Strategy> strategies);

    /// Parses a JSON array of {id, name, description, timeliness_exempt}.
    static StrategyCatalog fromJson(nlohmann::json const& j);
    static StrategyCatalog load(std::filesystem::path const& path);

    [[nodiscard]] std::size_t size() const noexcept { return _strategies.size(); }
    [[nodiscard]] std::span<Strategy const> strategies() const noexcept { return _strategies; }
    [[nodiscard]] Strategy const& at(std::size_t index) const { return _strategies.at(index); }
    [[nodiscard]] Strategy const* find(std::string_view id) const;
    [[nodiscard]] Strategy const& get(std::string_view id) const;

    [[nodiscard]] nlohmann::json toJson() const;

  private:
    std::vector<Strategy> _strategies;
};

struct CatalogReport
{
    std::vector<std::string> errors;
    std::vector<std::string> warnings;

    [[nodiscard]] bool ok() const noexcept { return errors.empty(); }
};

/// Checks a catalog against the stock expectations: the four exempt ids must exist and be
/// flagged (errors); a size other than 20 or a missing core strategy is only a warning.
[[nodiscard]] CatalogReport validateCatalog(StrategyCatalog const& catalog);

/// Loads and validates; throws CatalogError listing every validation error.
[[nodiscard]] StrategyCatalog loadValidatedCatalog(std::filesystem::path const& path);

/// The built-in 20-strategy catalog shipped as data/catalog.json.
[[nodiscard]] StrategyCatalog const& defaultCatalog();

/// The last N strategy activations, most recent last. N is fixed at construction.
class ActivationHistory
{
  public:
    explicit ActivationHistory(std::size_t capacity);

    /// Appends, evicting the oldest entry when full.
    void record(std::string strategyId);

    [[nodiscard]] std::size_t capacity() const noexcept { return _capacity; }
    [[nodiscard]] std::size_t size() const noexcept { return _entries.size(); }
    [[nodiscard]] std::deque<std::string> const& entries() const noexcept { return _entries; }

    /// Number of activations recorded after the most recent activation of `strategyId`, or
    /// nullopt if it is not in the window.
    [[nodiscard]] std::optional<std::size_t> stepsSince(std::string_view strategyId) const;

    bool operator==(ActivationHistory const&) const = default;

  private:
    std::size_t _capacity;
    std::deque<std::string> _entries;
};

/// Value-returning form of ActivationHistory::record.
[[nodiscard]] ActivationHistory recordActivation(ActivationHistory history, std::string strategyId);

/// min(1, k/N) where k is the number of activations since the strategy last ran; 1 for exempt
/// strategies and for strategies absent from the window.
[[nodiscard]] double timelinessScore(Strategy const& strategy, ActivationHistory const& history,
                                     std::size_t catalogSize);

struct RouterDecision
{
    std::string strategy;
    double appropriateness = 0.0;
    double timeliness = 0.0;
    double combined = 0.0;

    bool operator==(RouterDecision const&) const = default;
};

/// Picks the strategy maximising appropriateness + timeliness; ties go to the earlier catalog
/// entry. Throws std::invalid_argument if `scores` lacks a catalog id.
[[nodiscard]] RouterDecision selectStrategy(ScoreMap const& scores, StrategyCatalog const& catalog,
                                            ActivationHistory const& history);

// --- appropriateness scoring ----------------------------------------------------------------

class PromptPack;

/// Builds the single batched scoring request for every catalog strategy.
[[nodiscard]] ProviderRequest buildScoringRequest(std::string const& context, StrategyCatalog const& catalog,
                                                  PromptPack const& prompts, std::string const& agentName);

struct AppropriatenessScores
{
    ScoreMap scores; // exactly the catalog ids, each in [0, 1]
    std::vector<std::string> warnings;
};

/// Clamps into [0, 1] and fills ids the provider omitted with 0, recording a warning for each.
[[nodiscard]] AppropriatenessScores normalizeScores(ScoreMap const& raw, StrategyCatalog const& catalog,
                                                    std::vector<std::string> warnings = {});

/// Raised when the provider cannot produce scores; the workflow falls back to keep_silent.
class RouterUnavailable: public Error
{
  public:
    using Error::Error;
};

/// Synchronous scoring: one provider call, then normalizeScores.
[[nodiscard]] AppropriatenessScores scoreAppropriateness(std::string const& context, StrategyCatalog const& catalog,
                                                         Provider& provider, PromptPack const& prompts,
                                                         std::string const& agentName = "you");

/// Numbered "1. id: Name. description" list used inside the scoring prompt.
[[nodiscard]] std::string renderStrategyList(StrategyCatalog const& catalog);

} // namespace huma
