// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace huma
{

/// Plain-text prompt templates with {{name}} placeholders, keyed by stage name
/// ("router", "action", "reflection").
class PromptPack
{
  public:
    using Variables = std::map<std::string, std::string, std::less<>>;

    PromptPack(std::string version, std::map<std::string, std::string, std::less<>> templates);

    /// The templates compiled into the library; identical to data/prompts.
    static PromptPack const& builtin();

    /// Loads <dir>/VERSION and one <stage>.txt per required stage. Throws ConfigError.
    static PromptPack load(std::filesystem::path const& dir);

    [[nodiscard]] std::string const& version() const noexcept { return _version; }
    [[nodiscard]] std::string const& raw(std::string_view name) const;

    /// Substitutes every placeholder. Throws ConfigError for an unknown template or a
    /// placeholder without a value.
    [[nodiscard]] std::string render(std::string_view name, Variables const& variables) const;

    static constexpr auto RequiredTemplates = { "router", "action", "reflection" };

  private:
    std::string _version;
    std::map<std::string, std::string, std::less<>> _templates;
};

} // namespace huma
