// SPDX-License-Identifier: Apache-2.0
#include <huma/action.hpp>
#include <huma/strategy.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace huma;

namespace
{

ScoreMap randomScores(StrategyCatalog const& catalog, std::mt19937_64& rng)
{
    auto scores = ScoreMap {};
    for (auto const& s: catalog.strategies())
        scores[s.id] = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    return scores;
}

void selectStrategyDefaultCatalog(benchmark::State& state)
{
    auto const& catalog = defaultCatalog();
    auto rng = std::mt19937_64(1);
    auto const scores = randomScores(catalog, rng);
    auto history = ActivationHistory(catalog.size());
    for (auto i = 0; i < static_cast<int>(state.range(0)); ++i)
        history.record(catalog.at(rng() % catalog.size()).id);
    for (auto _: state)
        benchmark::DoNotOptimize(selectStrategy(scores, catalog, history));
}
BENCHMARK(selectStrategyDefaultCatalog)->Arg(0)->Arg(10)->Arg(20);

void timelinessOneStrategy(benchmark::State& state)
{
    auto const& catalog = defaultCatalog();
    auto history = ActivationHistory(catalog.size());
    for (auto i = std::size_t { 0 }; i < catalog.size(); ++i)
        history.record(catalog.at(i).id);
    auto const& target = catalog.get("go_deeper");
    for (auto _: state)
        benchmark::DoNotOptimize(timelinessScore(target, history, catalog.size()));
}
BENCHMARK(timelinessOneStrategy);

void typingDurationByLength(benchmark::State& state)
{
    auto const text = std::string(static_cast<std::size_t>(state.range(0)), 'x') + "😀 done";
    auto const speed = TypingSpeed(70);
    for (auto _: state)
        benchmark::DoNotOptimize(typingDuration(text, speed));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(typingDurationByLength)->Arg(16)->Arg(280)->Arg(4096);

} // namespace

BENCHMARK_MAIN();
