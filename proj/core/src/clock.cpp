// SPDX-License-Identifier: Apache-2.0
#include <huma/clock.hpp>

#include <algorithm>

namespace huma
{

TimerHandle VirtualClock::callAfter(Millis delay, std::function<void()> fn)
{
    auto cancelled = std::make_shared<bool>(false);
    _queue.push(Entry {
        .due = _now + std::max(delay, Millis { 0 }),
        .order = _order++,
        .cancelled = cancelled,
        .fn = std::move(fn),
    });
    return TimerHandle { cancelled };
}

void VirtualClock::dropCancelled()
{
    while (!_queue.empty() && *_queue.top().cancelled)
        _queue.pop();
}

bool VirtualClock::runOne(Millis deadline)
{
    dropCancelled();
    if (_queue.empty() || _queue.top().due > deadline)
        return false;

    auto entry = _queue.top();
    _queue.pop();
    _now = std::max(_now, entry.due);
    *entry.cancelled = true; // fired
    entry.fn();
    return true;
}

void VirtualClock::advanceTo(Millis deadline)
{
    while (runOne(deadline))
    {
    }
    _now = std::max(_now, deadline);
}

std::size_t VirtualClock::runUntilIdle()
{
    auto count = std::size_t { 0 };
    while (runOne(Millis::max()))
        ++count;
    return count;
}

bool VirtualClock::idle() const
{
    return pending() == 0;
}

std::size_t VirtualClock::pending() const
{
    auto copy = _queue;
    auto count = std::size_t { 0 };
    while (!copy.empty())
    {
        if (!*copy.top().cancelled)
            ++count;
        copy.pop();
    }
    return count;
}

void CancelToken::cancel()
{
    if (_state->cancelled)
        return;
    _state->cancelled = true;
    auto listeners = std::move(_state->listeners);
    _state->listeners.clear();
    for (auto& [id, fn]: listeners)
        fn();
}

std::size_t CancelToken::onCancel(std::function<void()> fn)
{
    auto const id = _state->nextId++;
    if (!_state->cancelled)
        _state->listeners.emplace_back(id, std::move(fn));
    return id;
}

void CancelToken::removeListener(std::size_t id)
{
    std::erase_if(_state->listeners, [id](auto const& entry) { return entry.first == id; });
}

} // namespace huma
