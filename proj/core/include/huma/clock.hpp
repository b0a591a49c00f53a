// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <vector>

namespace huma
{

using Millis = std::chrono::milliseconds;

/// Handle to a scheduled callback. Cancelling an already-fired timer is a no-op.
class TimerHandle
{
  public:
    TimerHandle() = default;
    explicit TimerHandle(std::shared_ptr<bool> cancelled, std::function<void()> onCancel = {}):
        _cancelled(std::move(cancelled)), _onCancel(std::move(onCancel))
    {
    }

    void cancel()
    {
        if (_cancelled && !*_cancelled)
        {
            *_cancelled = true;
            if (_onCancel)
                _onCancel();
        }
    }

    [[nodiscard]] bool active() const noexcept { return _cancelled && !*_cancelled; }

  private:
    std::shared_ptr<bool> _cancelled;
    std::function<void()> _onCancel;
};

/// Time source and single-threaded scheduler. Every component that reads the time or waits
/// goes through this interface so tests and simulations can run on virtual time.
///
/// All callbacks run on the clock's logical thread, one at a time.
class Clock
{
  public:
    virtual ~Clock() = default;

    [[nodiscard]] virtual Millis now() const = 0;
    virtual TimerHandle callAfter(Millis delay, std::function<void()> fn) = 0;
    virtual void post(std::function<void()> fn) { callAfter(Millis { 0 }, std::move(fn)); }
};

/// Deterministic discrete-event clock. Callbacks due at the same instant run in scheduling order.
class VirtualClock final: public Clock
{
  public:
    explicit VirtualClock(Millis start = Millis { 0 }): _now(start) {}

    [[nodiscard]] Millis now() const override { return _now; }
    TimerHandle callAfter(Millis delay, std::function<void()> fn) override;

    /// Runs callbacks in time order until none remain due at or before `deadline`, then sets
    /// the clock to `deadline`.
    void advanceTo(Millis deadline);
    void advanceBy(Millis delta) { advanceTo(_now + delta); }

    /// Runs until the queue is empty. Returns the number of callbacks executed.
    std::size_t runUntilIdle();

    [[nodiscard]] bool idle() const;
    [[nodiscard]] std::size_t pending() const;

  private:
    struct Entry
    {
        Millis due;
        std::uint64_t order;
        std::shared_ptr<bool> cancelled;
        std::function<void()> fn;
    };
    struct Later
    {
        bool operator()(Entry const& a, Entry const& b) const
        {
            return a.due != b.due ? a.due > b.due : a.order > b.order;
        }
    };

    bool runOne(Millis deadline);
    void dropCancelled();

    Millis _now;
    std::uint64_t _order = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> _queue;
};

/// Cooperative cancellation flag shared between the party that requests an interrupt and the
/// task that observes it. Listeners run synchronously inside cancel().
class CancelToken
{
  public:
    CancelToken(): _state(std::make_shared<State>()) {}

    void cancel();
    [[nodiscard]] bool cancelled() const noexcept { return _state->cancelled; }

    /// Registers a listener; returns an id usable with removeListener. If already cancelled the
    /// listener is not stored and the caller is expected to check cancelled() first.
    std::size_t onCancel(std::function<void()> fn);
    void removeListener(std::size_t id);

  private:
    struct State
    {
        bool cancelled = false;
        std::size_t nextId = 0;
        std::vector<std::pair<std::size_t, std::function<void()>>> listeners;
    };
    std::shared_ptr<State> _state;
};

} // namespace huma
