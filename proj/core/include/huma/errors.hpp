// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace huma
{

class Error: public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// An event or tool call refers to a participant, message or reaction that does not exist.
class UnknownReference: public Error
{
  public:
    using Error::Error;
};

/// Malformed, duplicate or out-of-order event.
class InvalidEvent: public Error
{
  public:
    using Error::Error;
};

class ConfigError: public Error
{
  public:
    using Error::Error;
};

class CatalogError: public ConfigError
{
  public:
    using ConfigError::ConfigError;
};

enum class ProviderErrorKind
{
    transport,
    parse,
    backend,
};

class ProviderError: public Error
{
  public:
    ProviderError(ProviderErrorKind kind, std::string const& message, std::string raw = {}):
        Error(message), _kind(kind), _raw(std::move(raw))
    {
    }

    [[nodiscard]] ProviderErrorKind kind() const noexcept { return _kind; }
    [[nodiscard]] std::string const& raw() const noexcept { return _raw; }

  private:
    ProviderErrorKind _kind;
    std::string _raw;
};

/// A scripted provider received a request no remaining rule matches. This is a test
/// misconfiguration and is never swallowed by the workflow.
class ScriptExhausted: public Error
{
  public:
    using Error::Error;
};

class DeliveryError: public Error
{
  public:
    using Error::Error;
};

class RoomError: public Error
{
  public:
    RoomError(std::string code, std::string const& message): Error(message), _code(std::move(code)) {}

    [[nodiscard]] std::string const& code() const noexcept { return _code; }

  private:
    std::string _code;
};

class TranscriptError: public Error
{
  public:
    TranscriptError(std::size_t line, std::string const& message):
        Error("line " + std::to_string(line) + ": " + message), _line(line)
    {
    }

    [[nodiscard]] std::size_t line() const noexcept { return _line; }

  private:
    std::size_t _line;
};

} // namespace huma
