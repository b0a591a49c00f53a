// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <huma/provider.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace huma
{

/// Creates the provider an attached agent uses for one role ("router", "action", "reflection").
/// Returning the same instance for every role is fine; providers must tolerate calls from
/// worker threads.
using ProviderFactory = std::function<std::shared_ptr<Provider>(std::string_view role)>;

struct ServerConfig
{
    /// host:port; port 0 picks a free port.
    std::string bind = "127.0.0.1:8080";
    /// Room transcripts are written to <dataDir>/rooms/<id>.jsonl.
    std::filesystem::path dataDir = "huma-data";
    std::optional<std::filesystem::path> catalogPath;
    std::optional<std::filesystem::path> promptPackDir;
    std::optional<std::filesystem::path> staticDir;
    int wpm = 70;
    std::optional<std::chrono::seconds> roomTimer;
    std::size_t roomCapacity = 8;
    std::string agentNickname = "Mia";
    std::size_t threads = 2;
    std::size_t providerThreads = 2;
    /// Frames queued for one session before it is dropped as a slow consumer.
    std::size_t sendQueueLimit = 1024;
    /// Empty: agents cannot be attached.
    ProviderFactory providers;
};

/// HTTP and WebSocket front end for chat rooms.
///
///   POST /rooms                    {"id"?, "capacity"?, "timer_seconds"?} -> 201 {"id"}
///   GET  /rooms                    -> 200 [{"id"}]
///   POST /rooms/{id}/agent         {"nickname"?} -> 201 {"participant_id", "nickname"}
///   GET  /rooms/{id}/transcript    -> 200 JSONL
///   GET  /ws/{id}?nickname=...     WebSocket upgrade
///   GET  /...                      static files from staticDir
///
/// Each room runs on its own strand; provider calls run on a separate worker pool.
class ChatServer
{
  public:
    /// Loads catalog and prompt pack; throws ConfigError or CatalogError.
    explicit ChatServer(ServerConfig config);
    ~ChatServer();

    ChatServer(ChatServer const&) = delete;
    ChatServer& operator=(ChatServer const&) = delete;

    /// Binds and starts the worker threads. Returns once the server accepts connections.
    void start();
    /// Stops accepting, closes sessions and joins all threads. Idempotent.
    void stop();
    /// Blocks until SIGINT or SIGTERM, then stops.
    void runUntilSignalled();

    [[nodiscard]] std::uint16_t port() const;
    [[nodiscard]] ServerConfig const& config() const;

    struct Impl;

  private:
    std::unique_ptr<Impl> _impl;
};

} // namespace huma
