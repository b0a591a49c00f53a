// SPDX-License-Identifier: Apache-2.0
#include <huma/clock.hpp>

#include <gtest/gtest.h>

#include <string>
#include <vector>

using namespace huma;
using namespace std::chrono_literals;

TEST(VirtualClock, RunsCallbacksInTimeOrder)
{
    auto clock = VirtualClock {};
    auto order = std::vector<int> {};
    clock.callAfter(300ms, [&] { order.push_back(3); });
    clock.callAfter(100ms, [&] { order.push_back(1); });
    clock.callAfter(200ms, [&] { order.push_back(2); });
    EXPECT_EQ(clock.runUntilIdle(), 3u);
    EXPECT_EQ(order, (std::vector<int> { 1, 2, 3 }));
    EXPECT_EQ(clock.now(), 300ms);
}

TEST(VirtualClock, TiesRunInSchedulingOrder)
{
    auto clock = VirtualClock {};
    auto order = std::string {};
    for (auto c: std::string("abcdef"))
        clock.callAfter(50ms, [&order, c] { order.push_back(c); });
    clock.runUntilIdle();
    EXPECT_EQ(order, "abcdef");
}

TEST(VirtualClock, CallbacksScheduledDuringRunUseCurrentTime)
{
    auto clock = VirtualClock {};
    auto seen = std::vector<Millis> {};
    clock.callAfter(10ms, [&] {
        seen.push_back(clock.now());
        clock.callAfter(5ms, [&] { seen.push_back(clock.now()); });
        clock.post([&] { seen.push_back(clock.now()); });
    });
    clock.runUntilIdle();
    EXPECT_EQ(seen, (std::vector<Millis> { 10ms, 10ms, 15ms }));
}

TEST(VirtualClock, AdvanceToStopsAtDeadline)
{
    auto clock = VirtualClock {};
    auto fired = 0;
    clock.callAfter(100ms, [&] { ++fired; });
    clock.callAfter(101ms, [&] { ++fired; });
    clock.advanceTo(100ms);
    EXPECT_EQ(fired, 1);
    EXPECT_EQ(clock.now(), 100ms);
    EXPECT_EQ(clock.pending(), 1u);
    clock.advanceBy(1ms);
    EXPECT_EQ(fired, 2);
    EXPECT_TRUE(clock.idle());
}

TEST(VirtualClock, CancelledTimersNeverFire)
{
    auto clock = VirtualClock {};
    auto fired = false;
    auto handle = clock.callAfter(10ms, [&] { fired = true; });
    EXPECT_TRUE(handle.active());
    handle.cancel();
    EXPECT_FALSE(handle.active());
    clock.runUntilIdle();
    EXPECT_FALSE(fired);
    EXPECT_EQ(clock.now(), 0ms);
}

TEST(VirtualClock, CancellingAFiredTimerIsHarmless)
{
    auto clock = VirtualClock {};
    auto count = 0;
    auto handle = clock.callAfter(1ms, [&] { ++count; });
    clock.runUntilIdle();
    EXPECT_FALSE(handle.active());
    handle.cancel();
    EXPECT_EQ(count, 1);
}

TEST(CancelToken, ListenersRunOnceSynchronously)
{
    auto token = CancelToken {};
    auto calls = 0;
    token.onCancel([&] { ++calls; });
    auto const removed = token.onCancel([&] { calls += 100; });
    token.removeListener(removed);
    EXPECT_FALSE(token.cancelled());
    token.cancel();
    EXPECT_TRUE(token.cancelled());
    EXPECT_EQ(calls, 1);
    token.cancel();
    EXPECT_EQ(calls, 1);
}

TEST(CancelToken, CopiesShareState)
{
    auto token = CancelToken {};
    auto copy = token;
    copy.cancel();
    EXPECT_TRUE(token.cancelled());
}
