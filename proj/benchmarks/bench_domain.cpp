// SPDX-License-Identifier: Apache-2.0
#include <huma/domain.hpp>

#include <benchmark/benchmark.h>

#include <vector>

using namespace huma;

namespace
{

std::vector<ChatEvent> conversation(int messages)
{
    auto events = std::vector<ChatEvent> {};
    for (auto p = 0; p < 4; ++p)
        events.push_back(ChatEvent { ParticipantJoined { Participant { ParticipantId { "p" + std::to_string(p) },
                                                                       "user" + std::to_string(p), p == 0 } },
                                     Millis { p } });
    for (auto i = 0; i < messages; ++i)
    {
        auto const at = Millis { 10 + i * 10 };
        auto const author = ParticipantId { "p" + std::to_string(i % 4) };
        auto const id = MessageId { "m" + std::to_string(i + 1) };
        if (i > 0 && i % 3 == 0)
            events.push_back(ChatEvent { ReplySent { Message { id, author, "sounds good to me", MessageId { "m" + std::to_string(i) }, at } }, at });
        else
            events.push_back(ChatEvent { MessageSent { Message { id, author, "message number " + std::to_string(i), std::nullopt, at } }, at });
        if (i % 4 == 1)
            events.push_back(ChatEvent { ReactionAdded { Reaction { id, "👍", ParticipantId { "p" + std::to_string((i + 1) % 4) } } }, at });
    }
    return events;
}

void applyEventFold(benchmark::State& state)
{
    auto const events = conversation(static_cast<int>(state.range(0)));
    for (auto _: state)
    {
        auto conversationState = ConversationState {};
        for (auto const& e: events)
            applyEventInPlace(conversationState, e);
        benchmark::DoNotOptimize(conversationState);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(events.size()));
}
BENCHMARK(applyEventFold)->Arg(100)->Arg(1000);

void applyEventPure(benchmark::State& state)
{
    auto const events = conversation(static_cast<int>(state.range(0)));
    for (auto _: state)
    {
        auto conversationState = ConversationState {};
        for (auto const& e: events)
            conversationState = applyEvent(conversationState, e);
        benchmark::DoNotOptimize(conversationState);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * static_cast<std::int64_t>(events.size()));
}
BENCHMARK(applyEventPure)->Arg(100);

void renderContextWindow(benchmark::State& state)
{
    auto conversationState = ConversationState {};
    for (auto const& e: conversation(500))
        applyEventInPlace(conversationState, e);
    auto const limit = static_cast<std::size_t>(state.range(0));
    for (auto _: state)
        benchmark::DoNotOptimize(renderContext(conversationState, limit));
}
BENCHMARK(renderContextWindow)->Arg(20)->Arg(50)->Arg(200);

} // namespace
