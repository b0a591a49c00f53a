// SPDX-License-Identifier: Apache-2.0
#include <huma/errors.hpp>
#include <huma/prompt_pack.hpp>
#include <huma/scripted_provider.hpp>
#include <huma/sim.hpp>
#include <huma/strategy.hpp>
#include <huma/wire.hpp>

#ifdef HUMA_WITH_SERVER
#include <huma/http_provider.hpp>
#include <huma/server.hpp>
#endif

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace
{

using nlohmann::json;
namespace fs = std::filesystem;

void writeFile(fs::path const& path, std::string const& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    auto out = std::ofstream(path, std::ios::binary);
    out << content;
    if (!out)
        throw huma::ConfigError("cannot write " + path.string());
}

json readJson(fs::path const& path)
{
    auto in = std::ifstream(path);
    if (!in)
        throw huma::ConfigError("cannot open " + path.string());
    auto parsed = json::parse(in, nullptr, false);
    if (parsed.is_discarded())
        throw huma::ConfigError(path.string() + " is not valid JSON");
    return parsed;
}

struct SimulateArgs
{
    fs::path scenario;
    std::optional<fs::path> report;
    std::optional<fs::path> transcript;
    std::optional<fs::path> log;
    std::optional<fs::path> callLog;
};

int simulateCommand(SimulateArgs const& args)
{
    auto const scenario = huma::Scenario::load(args.scenario);

    auto transcript = args.transcript;
    if (!transcript && args.report)
        transcript = args.report->parent_path() / (args.report->stem().string() + ".transcript.jsonl");

    auto const result = huma::simulate(scenario, huma::SimOptions { .transcriptPath = transcript });

    auto const report = json(result.report).dump(2) + "\n";
    if (args.report)
    {
        writeFile(*args.report, report);
        std::cout << "runs " << result.report.runs << ", interrupted " << result.report.interruptionCount
                  << ", reflections " << result.report.reflections << ", messages " << result.report.messages
                  << "\nreport: " << args.report->string() << "\ntranscript: " << transcript->string() << '\n';
    }
    else
        std::cout << report;

    if (args.log)
    {
        auto lines = std::string {};
        for (auto const& record: result.logRecords)
            lines += record.dump() + "\n";
        writeFile(*args.log, lines);
    }
    if (args.callLog)
        writeFile(*args.callLog, result.callLog.dump(2) + "\n");
    return 0;
}

struct ReplayArgs
{
    fs::path transcript;
    std::optional<fs::path> expectReport;
    bool state = false;
};

int replayCommand(ReplayArgs const& args)
{
    auto in = std::ifstream(args.transcript);
    if (!in)
        throw huma::ConfigError("cannot open " + args.transcript.string());

    auto summary = huma::ReplaySummary {};
    try
    {
        summary = huma::replayTranscript(in);
    }
    catch (huma::TranscriptError const& e)
    {
        std::cerr << args.transcript.string() << ": " << e.what() << "\n";
        return 1;
    }

    auto const& state = summary.state;
    std::cout << "participants: " << state.participants.size() << '\n';
    for (auto const& p: state.participants)
        std::cout << "  " << p.id.value << ' ' << p.nickname << (p.isAgent ? " (agent)" : "") << '\n';
    std::cout << "messages: " << state.history.size() << '\n'
              << "reactions: " << state.reactions.size() << '\n'
              << "frames: " << summary.frames << '\n'
              << "last_seq: " << summary.lastSeq << '\n';
    if (args.state)
        std::cout << huma::canonicalDump(state) << '\n';

    if (args.expectReport)
    {
        auto const report = readJson(*args.expectReport);
        auto mismatches = std::vector<std::string> {};
        auto const check = [&](char const* key, std::size_t actual) {
            if (report.value(key, actual) != actual)
                mismatches.push_back(std::string(key) + ": report " + std::to_string(report.value(key, actual))
                                     + ", transcript " + std::to_string(actual));
        };
        check("participants", state.participants.size());
        check("messages", state.history.size());
        check("reactions", state.reactions.size());
        check("frames", summary.frames);
        for (auto const& m: mismatches)
            std::cerr << "mismatch " << m << '\n';
        if (!mismatches.empty())
            return 1;
        std::cout << "matches " << args.expectReport->string() << '\n';
    }
    return 0;
}

struct CatalogArgs
{
    std::optional<fs::path> catalog;
    bool json = false;
};

int catalogCommand(CatalogArgs const& args)
{
    auto const catalog = args.catalog ? huma::StrategyCatalog::load(*args.catalog) : huma::defaultCatalog();
    auto const report = huma::validateCatalog(catalog);

    if (args.json)
        std::cout << catalog.toJson().dump(2) << '\n';
    else
    {
        for (auto const& s: catalog.strategies())
            std::printf("%-22s %-28s %s\n", s.id.c_str(), s.name.c_str(), s.timelinessExempt ? "exempt" : "");
        std::printf("%zu strategies, %zu exempt\n", catalog.size(),
                    static_cast<std::size_t>(std::ranges::count_if(catalog.strategies(), &huma::Strategy::timelinessExempt)));
    }
    for (auto const& w: report.warnings)
        std::cerr << "warning: " << w << '\n';
    for (auto const& e: report.errors)
        std::cerr << "error: " << e << '\n';
    return report.ok() ? 0 : 1;
}

#ifdef HUMA_WITH_SERVER
struct ServeArgs
{
    huma::ServerConfig config;
    std::optional<fs::path> providerScript;
    std::uint64_t seed = 0;
    std::optional<int> timerSeconds;
};

int serveCommand(ServeArgs args)
{
    auto& config = args.config;
    if (args.timerSeconds)
        config.roomTimer = std::chrono::seconds(*args.timerSeconds);
    if (!config.staticDir)
    {
        auto const bundled = fs::path(HUMA_DEFAULT_DATA_DIR) / "web";
        if (fs::exists(bundled / "index.html"))
            config.staticDir = bundled;
    }

    if (args.providerScript)
    {
        auto provider = std::make_shared<huma::ScriptedProvider>(
            huma::ScriptedProvider::rulesFromJson(readJson(*args.providerScript)), args.seed);
        config.providers = [provider](std::string_view) { return provider; };
        spdlog::info("agents answer from script {}", args.providerScript->string());
    }
    else if (std::getenv("HUMA_LLM_URL"))
    {
        config.providers = [](std::string_view role) -> std::shared_ptr<huma::Provider> {
            return std::make_shared<huma::HttpProvider>(huma::HttpProviderConfig::fromEnvironment(role));
        };
    }
    else
        spdlog::warn("HUMA_LLM_URL is not set and no --provider-script given; agents cannot be attached");

    auto server = huma::ChatServer(std::move(config));
    server.runUntilSignalled();
    return 0;
}
#endif

} // namespace

int main(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("huma"));
    if (auto const* level = std::getenv("HUMA_LOG_LEVEL"))
        spdlog::set_level(spdlog::level::from_str(level));

    auto app = CLI::App { "Event-driven runtime for a humanlike group-chat agent" };
    app.require_subcommand(1);

    auto simulateArgs = SimulateArgs {};
    auto* simulate = app.add_subcommand("simulate", "Run a scripted scenario on a virtual clock");
    simulate->add_option("scenario", simulateArgs.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--report", simulateArgs.report, "Write the report here instead of stdout");
    simulate->add_option("--transcript", simulateArgs.transcript,
                         "Transcript JSONL path (default: next to the report)");
    simulate->add_option("--log", simulateArgs.log, "Write the workflow log stream (JSON lines)");
    simulate->add_option("--call-log", simulateArgs.callLog, "Write every provider request (JSON)");

    auto replayArgs = ReplayArgs {};
    auto* replay = app.add_subcommand("replay", "Rebuild conversation state from a transcript");
    replay->add_option("transcript", replayArgs.transcript, "Transcript JSONL file")->required()->check(CLI::ExistingFile);
    replay->add_option("--expect-report", replayArgs.expectReport, "Check counts against a simulate report");
    replay->add_flag("--state", replayArgs.state, "Print the canonical state JSON");

    auto catalogArgs = CatalogArgs {};
    auto* catalog = app.add_subcommand("catalog", "List and validate a strategy catalog");
    catalog->add_option("--catalog", catalogArgs.catalog, "Catalog JSON (default: built-in)")->check(CLI::ExistingFile);
    catalog->add_flag("--json", catalogArgs.json, "Print the catalog as JSON");

#ifdef HUMA_WITH_SERVER
    auto serveArgs = ServeArgs {};
    auto* serve = app.add_subcommand("serve", "Run the chat server");
    serve->add_option("--bind", serveArgs.config.bind, "host:port")->capture_default_str();
    serve->add_option("--data-dir", serveArgs.config.dataDir, "Transcript directory")->capture_default_str();
    serve->add_option("--catalog", serveArgs.config.catalogPath, "Strategy catalog JSON")->check(CLI::ExistingFile);
    serve->add_option("--prompt-pack", serveArgs.config.promptPackDir, "Prompt template directory")
        ->check(CLI::ExistingDirectory);
    serve->add_option("--wpm", serveArgs.config.wpm, "Agent typing speed")->check(CLI::Range(50, 100))->capture_default_str();
    serve->add_option("--room-timer-seconds", serveArgs.timerSeconds, "Default countdown for new rooms")
        ->check(CLI::PositiveNumber);
    serve->add_option("--static-dir", serveArgs.config.staticDir, "Serve files from this directory at /")
        ->check(CLI::ExistingDirectory);
    serve->add_option("--provider-script", serveArgs.providerScript, "Answer agent requests from a script")
        ->check(CLI::ExistingFile);
    serve->add_option("--seed", serveArgs.seed, "Seed for scripted latencies");
    serve->add_option("--threads", serveArgs.config.threads, "Network threads")->capture_default_str();
#endif

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*simulate)
            return simulateCommand(simulateArgs);
        if (*replay)
            return replayCommand(replayArgs);
        if (*catalog)
            return catalogCommand(catalogArgs);
#ifdef HUMA_WITH_SERVER
        if (*serve)
            return serveCommand(std::move(serveArgs));
#endif
    }
    catch (huma::ScriptExhausted const& e)
    {
        std::cerr << "error: provider script exhausted: " << e.what() << '\n';
        return 1;
    }
    catch (std::exception const& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
