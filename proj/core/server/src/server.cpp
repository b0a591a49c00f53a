// SPDX-License-Identifier: Apache-2.0
#include <huma/errors.hpp>
#include <huma/prompt_pack.hpp>
#include <huma/room.hpp>
#include <huma/server.hpp>
#include <huma/strategy.hpp>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <deque>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>

namespace huma
{

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

namespace
{

using Strand = asio::strand<asio::io_context::executor_type>;
using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

/// Wall-clock time, timers on a room strand. callAfter and post may be called from any thread.
class AsioClock final: public Clock
{
  public:
    explicit AsioClock(Strand strand): _strand(std::move(strand)) {}

    [[nodiscard]] Millis now() const override
    {
        return std::chrono::duration_cast<Millis>(std::chrono::system_clock::now().time_since_epoch());
    }

    TimerHandle callAfter(Millis delay, std::function<void()> fn) override
    {
        auto timer = std::make_shared<asio::steady_timer>(_strand, delay);
        auto cancelled = std::make_shared<bool>(false);
        timer->async_wait([timer, cancelled, fn = std::move(fn)](beast::error_code ec) {
            if (ec || *cancelled)
                return;
            *cancelled = true;
            fn();
        });
        return TimerHandle(cancelled, [timer] { timer->cancel(); });
    }

    void post(std::function<void()> fn) override { asio::post(_strand, std::move(fn)); }

  private:
    Strand _strand;
};

/// Runs blocking provider calls on a worker pool and completes on the room's clock after the
/// response's simulated latency.
class WorkerChannel final: public ProviderChannel
{
  public:
    WorkerChannel(std::shared_ptr<Provider> provider, asio::thread_pool& pool, Clock& clock):
        _provider(std::move(provider)), _pool(pool), _clock(clock)
    {
    }

    void submit(ProviderRequest request, std::function<void(ProviderResult)> done) override
    {
        asio::post(_pool, [provider = _provider, &clock = _clock, request = std::move(request),
                           done = std::move(done)]() mutable {
            auto result = [&]() -> ProviderResult {
                try
                {
                    return provider->complete(request);
                }
                catch (ProviderError const& e)
                {
                    return e;
                }
                catch (ScriptExhausted const& e)
                {
                    spdlog::error("scripted provider exhausted: {}", e.what());
                    return ProviderError(ProviderErrorKind::backend, e.what());
                }
                catch (std::exception const& e)
                {
                    return ProviderError(ProviderErrorKind::backend, e.what());
                }
            }();
            auto const latency = std::holds_alternative<ProviderResponse>(result)
                                     ? std::get<ProviderResponse>(result).simulatedLatency
                                     : Millis { 0 };
            clock.callAfter(latency, [done = std::move(done), result = std::move(result)]() mutable {
                done(std::move(result));
            });
        });
    }

  private:
    std::shared_ptr<Provider> _provider;
    asio::thread_pool& _pool;
    Clock& _clock;
};

class Session;

/// Everything belonging to one room. Room, agent and session bookkeeping are touched only on
/// `strand`.
struct RoomHost
{
    RoomHost(asio::io_context& ioc, RoomConfig config):
        strand(asio::make_strand(ioc)), clock(strand), room(std::make_unique<Room>(std::move(config), clock))
    {
    }

    Strand strand;
    AsioClock clock;
    std::unique_ptr<Room> room;
    std::vector<std::unique_ptr<ProviderChannel>> channels;
};

bool validRoomId(std::string_view id)
{
    static auto const pattern = std::regex("^[A-Za-z0-9_-]{1,64}$");
    return std::regex_match(id.begin(), id.end(), pattern);
}

std::string percentDecode(std::string_view text)
{
    auto out = std::string {};
    for (std::size_t i = 0; i < text.size(); ++i)
    {
        if (text[i] == '%' && i + 2 < text.size())
        {
            auto const hex = std::string(text.substr(i + 1, 2));
            char* end = nullptr;
            auto const value = std::strtol(hex.c_str(), &end, 16);
            if (end == hex.c_str() + 2)
            {
                out.push_back(static_cast<char>(value));
                i += 2;
                continue;
            }
        }
        out.push_back(text[i] == '+' ? ' ' : text[i]);
    }
    return out;
}

std::map<std::string, std::string> parseQuery(std::string_view query)
{
    auto params = std::map<std::string, std::string> {};
    while (!query.empty())
    {
        auto const amp = query.find('&');
        auto const pair = query.substr(0, amp);
        auto const eq = pair.find('=');
        if (eq == std::string_view::npos)
            params[percentDecode(pair)] = "";
        else
            params[percentDecode(pair.substr(0, eq))] = percentDecode(pair.substr(eq + 1));
        if (amp == std::string_view::npos)
            break;
        query.remove_prefix(amp + 1);
    }
    return params;
}

std::string_view mimeType(std::filesystem::path const& path)
{
    static auto const types = std::map<std::string, std::string_view> {
        { ".html", "text/html; charset=utf-8" },
        { ".js", "text/javascript; charset=utf-8" },
        { ".mjs", "text/javascript; charset=utf-8" },
        { ".css", "text/css; charset=utf-8" },
        { ".json", "application/json" },
        { ".svg", "image/svg+xml" },
        { ".png", "image/png" },
        { ".ico", "image/x-icon" },
        { ".txt", "text/plain; charset=utf-8" },
    };
    auto const it = types.find(path.extension().string());
    return it == types.end() ? std::string_view("application/octet-stream") : it->second;
}

Response makeResponse(Request const& req, http::status status, std::string body, std::string_view type)
{
    auto res = Response { status, req.version() };
    res.set(http::field::server, "huma");
    res.set(http::field::content_type, beast::string_view(type.data(), type.size()));
    res.keep_alive(req.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
}

Response jsonResponse(Request const& req, http::status status, json const& body)
{
    return makeResponse(req, status, body.dump(), "application/json");
}

Response errorResponse(Request const& req, http::status status, std::string_view code, std::string const& message)
{
    return jsonResponse(req, status, json { { "error", { { "code", code }, { "message", message } } } });
}

} // namespace

struct ChatServer::Impl
{
    explicit Impl(ServerConfig cfg);

    // Declared first so it outlives every object holding handlers or timers.
    asio::io_context ioc;
    ServerConfig config;
    StrategyCatalog catalog;
    PromptPack prompts;
    std::unique_ptr<asio::thread_pool> providerPool;
    std::optional<tcp::acceptor> acceptor;
    std::vector<std::thread> threads;
    std::atomic<bool> running = false;
    std::uint16_t boundPort = 0;

    std::mutex roomsMutex;
    std::map<std::string, std::shared_ptr<RoomHost>> rooms;
    std::uint64_t nextRoom = 1;

    std::mutex sessionsMutex;
    std::vector<std::weak_ptr<Session>> sessions;

    void accept();
    void handle(Request req, std::function<void(Response)> reply);
    std::shared_ptr<RoomHost> findRoom(std::string const& id);
    void createRoom(Request const& req, std::function<void(Response)> const& reply);
    void attachAgent(Request const& req, std::string const& id, std::function<void(Response)> reply);
    void serveStatic(Request const& req, std::string const& target, std::function<void(Response)> const& reply);
    void trackSession(std::shared_ptr<Session> const& session);
};

namespace
{

/// One WebSocket participant. Socket work happens on the session's own strand.
class Session final: public std::enable_shared_from_this<Session>
{
  public:
    Session(tcp::socket socket, std::shared_ptr<RoomHost> host, std::string roomId, std::string nickname,
            std::size_t queueLimit):
        _ws(std::move(socket)),
        _host(std::move(host)),
        _roomId(std::move(roomId)),
        _nickname(std::move(nickname)),
        _queueLimit(queueLimit)
    {
    }

    void run(Request req)
    {
        _ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        _ws.set_option(websocket::stream_base::decorator(
            [](websocket::response_type& res) { res.set(http::field::server, "huma"); }));
        _ws.read_message_max(64 * 1024);
        _ws.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->onAccept(ec); });
    }

    /// Thread-safe; queues a text frame.
    void send(std::shared_ptr<std::string const> text)
    {
        asio::post(_ws.get_executor(), [self = shared_from_this(), text = std::move(text)] {
            self->enqueue(text);
        });
    }

    /// Thread-safe; closes after pending writes drain.
    void close()
    {
        asio::post(_ws.get_executor(), [self = shared_from_this()] {
            self->_closeAfterWrites = true;
            if (!self->_writing)
                self->doClose(websocket::close_code::normal);
        });
    }

  private:
    void onAccept(beast::error_code ec)
    {
        if (ec)
        {
            spdlog::debug("websocket accept failed: {}", ec.message());
            return;
        }
        if (!_host)
        {
            sendError("no_such_room", "room '" + _roomId + "' does not exist");
            close();
            return;
        }
        asio::post(_host->strand, [self = shared_from_this()] { self->joinOnRoom(); });
    }

    void joinOnRoom()
    {
        auto& room = *_host->room;
        try
        {
            _participant = room.join(_nickname).id;
        }
        catch (RoomError const& e)
        {
            sendError(e.code(), e.what());
            close();
            return;
        }
        auto weak = weak_from_this();
        _subscription = room.subscribe([weak](WireFrame const&, std::string const& text) {
            if (auto self = weak.lock())
                self->send(std::make_shared<std::string const>(text));
        });
        asio::post(_ws.get_executor(), [self = shared_from_this()] { self->doRead(); });
    }

    void doRead()
    {
        _ws.async_read(_buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->onRead(ec); });
    }

    void onRead(beast::error_code ec)
    {
        if (ec)
        {
            if (ec != websocket::error::closed)
                spdlog::debug("session {} in {}: read ended: {}", _nickname, _roomId, ec.message());
            leave();
            return;
        }
        auto text = beast::buffers_to_string(_buffer.data());
        _buffer.consume(_buffer.size());

        auto frame = json::parse(text, nullptr, false);
        if (frame.is_discarded())
            sendError("bad_frame", "frame is not valid JSON");
        else
            asio::post(_host->strand, [self = shared_from_this(), frame = std::move(frame)] {
                self->applyOnRoom(frame);
            });
        doRead();
    }

    void applyOnRoom(json const& frame)
    {
        if (!_participant)
            return;
        try
        {
            _host->room->handleClientFrame(*_participant, frame);
        }
        catch (RoomError const& e)
        {
            sendError(e.code(), e.what());
        }
        catch (UnknownReference const& e)
        {
            sendError("unknown_reference", e.what());
        }
        catch (InvalidEvent const& e)
        {
            sendError("invalid_event", e.what());
        }
        catch (std::exception const& e)
        {
            sendError("bad_frame", e.what());
        }
    }

    void sendError(std::string_view code, std::string const& message)
    {
        send(std::make_shared<std::string const>(json(errorFrame(code, message)).dump()));
    }

    void enqueue(std::shared_ptr<std::string const> const& text)
    {
        if (_closed)
            return;
        if (_queue.size() >= _queueLimit)
        {
            spdlog::warn("session {} in {}: send queue overflow, disconnecting slow consumer", _nickname, _roomId);
            _queue.clear();
            doClose(websocket::close_code::policy_error);
            return;
        }
        _queue.push_back(text);
        if (!_writing)
            doWrite();
    }

    void doWrite()
    {
        _writing = true;
        _ws.text(true);
        _ws.async_write(asio::buffer(*_queue.front()),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) { self->onWrite(ec); });
    }

    void onWrite(beast::error_code ec)
    {
        _writing = false;
        if (ec)
        {
            _queue.clear();
            _closed = true;
            leave();
            return;
        }
        _queue.pop_front();
        if (!_queue.empty())
            doWrite();
        else if (_closeAfterWrites)
            doClose(websocket::close_code::normal);
    }

    void doClose(websocket::close_code code)
    {
        if (_closed)
            return;
        _closed = true;
        _ws.async_close(code, [self = shared_from_this()](beast::error_code) { self->leave(); });
    }

    void leave()
    {
        if (_left.exchange(true))
            return;
        if (_host)
            asio::post(_host->strand, [self = shared_from_this()] {
                if (self->_subscription)
                    self->_host->room->unsubscribe(*self->_subscription);
                self->_subscription.reset();
            });
    }

    websocket::stream<beast::tcp_stream> _ws;
    beast::flat_buffer _buffer;
    std::shared_ptr<RoomHost> _host;
    std::string _roomId;
    std::string _nickname;
    std::size_t _queueLimit;

    // Session strand.
    std::deque<std::shared_ptr<std::string const>> _queue;
    bool _writing = false;
    bool _closed = false;
    bool _closeAfterWrites = false;
    std::atomic<bool> _left = false;

    // Room strand.
    std::optional<ParticipantId> _participant;
    std::optional<Room::SubscriberId> _subscription;

};

class HttpSession final: public std::enable_shared_from_this<HttpSession>
{
  public:
    HttpSession(tcp::socket socket, ChatServer::Impl& server): _stream(std::move(socket)), _server(server) {}

    void run()
    {
        asio::dispatch(_stream.get_executor(), [self = shared_from_this()] { self->doRead(); });
    }

  private:
    void doRead()
    {
        _req = {};
        _stream.expires_after(std::chrono::seconds(30));
        http::async_read(_stream, _buffer, _req,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) { self->onRead(ec); });
    }

    void onRead(beast::error_code ec)
    {
        if (ec == http::error::end_of_stream)
        {
            beast::error_code ignored;
            _stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        if (ec)
            return;

        if (websocket::is_upgrade(_req))
        {
            upgrade();
            return;
        }

        _server.handle(std::move(_req), [self = shared_from_this()](Response res) {
            asio::post(self->_stream.get_executor(), [self, res = std::move(res)]() mutable {
                self->write(std::move(res));
            });
        });
    }

    void upgrade()
    {
        auto const target = std::string(_req.target());
        auto const q = target.find('?');
        auto const path = target.substr(0, q);
        auto const query = q == std::string::npos ? std::string {} : target.substr(q + 1);

        static auto const pattern = std::regex("^/ws/([^/]+)$");
        auto match = std::smatch {};
        if (!std::regex_match(path, match, pattern))
        {
            write(errorResponse(_req, http::status::not_found, "not_found", "no WebSocket endpoint at " + path));
            return;
        }
        auto const roomId = percentDecode(match[1].str());
        auto params = parseQuery(query);
        auto host = _server.findRoom(roomId);

        _stream.expires_never();
        auto session = std::make_shared<Session>(_stream.release_socket(), host, roomId, params["nickname"],
                                                 _server.config.sendQueueLimit);
        _server.trackSession(session);
        session->run(std::move(_req));
    }

    void write(Response res)
    {
        auto const keepAlive = res.keep_alive();
        auto shared = std::make_shared<Response>(std::move(res));
        http::async_write(_stream, *shared,
                          [self = shared_from_this(), shared, keepAlive](beast::error_code ec, std::size_t) {
                              if (ec)
                                  return;
                              if (!keepAlive)
                              {
                                  beast::error_code ignored;
                                  self->_stream.socket().shutdown(tcp::socket::shutdown_send, ignored);
                                  return;
                              }
                              self->doRead();
                          });
    }

    beast::tcp_stream _stream;
    beast::flat_buffer _buffer;
    Request _req;
    ChatServer::Impl& _server;
};

std::pair<std::string, std::uint16_t> parseBind(std::string const& bind)
{
    auto const colon = bind.rfind(':');
    if (colon == std::string::npos)
        throw ConfigError("--bind must be host:port, got '" + bind + "'");
    auto host = bind.substr(0, colon);
    if (host.size() >= 2 && host.front() == '[' && host.back() == ']')
        host = host.substr(1, host.size() - 2);
    auto const portText = bind.substr(colon + 1);
    char* end = nullptr;
    auto const port = std::strtol(portText.c_str(), &end, 10);
    if (portText.empty() || *end != '\0' || port < 0 || port > 65535)
        throw ConfigError("invalid port in --bind '" + bind + "'");
    return { host.empty() ? std::string("0.0.0.0") : host, static_cast<std::uint16_t>(port) };
}

StrategyCatalog loadCatalog(ServerConfig const& config)
{
    if (!config.catalogPath)
        return defaultCatalog();
    return loadValidatedCatalog(*config.catalogPath);
}

} // namespace

ChatServer::Impl::Impl(ServerConfig cfg):
    config(std::move(cfg)),
    catalog(loadCatalog(config)),
    prompts(config.promptPackDir ? PromptPack::load(*config.promptPackDir) : PromptPack::builtin())
{
    (void)TypingSpeed(config.wpm);
    if (config.threads == 0 || config.providerThreads == 0)
        throw ConfigError("thread counts must be positive");
    if (config.roomTimer && config.roomTimer->count() <= 0)
        throw ConfigError("room timer must be positive");
}

void ChatServer::Impl::trackSession(std::shared_ptr<Session> const& session)
{
    auto lock = std::lock_guard(sessionsMutex);
    std::erase_if(sessions, [](auto const& weak) { return weak.expired(); });
    sessions.push_back(session);
}

void ChatServer::Impl::accept()
{
    acceptor->async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (ec)
        {
            if (ec != asio::error::operation_aborted)
                spdlog::warn("accept failed: {}", ec.message());
            if (!acceptor->is_open())
                return;
        }
        else
            std::make_shared<HttpSession>(std::move(socket), *this)->run();
        accept();
    });
}

std::shared_ptr<RoomHost> ChatServer::Impl::findRoom(std::string const& id)
{
    auto lock = std::lock_guard(roomsMutex);
    auto const it = rooms.find(id);
    return it == rooms.end() ? nullptr : it->second;
}

void ChatServer::Impl::handle(Request req, std::function<void(Response)> reply)
{
    auto const target = std::string(req.target());
    auto const path = target.substr(0, target.find('?'));

    try
    {
        static auto const agentPath = std::regex("^/rooms/([^/]+)/agent$");
        static auto const transcriptPath = std::regex("^/rooms/([^/]+)/transcript$");
        auto match = std::smatch {};

        if (path == "/rooms" && req.method() == http::verb::post)
            return createRoom(req, reply);

        if (path == "/rooms" && req.method() == http::verb::get)
        {
            auto list = json::array();
            auto lock = std::lock_guard(roomsMutex);
            for (auto const& [id, host]: rooms)
                list.push_back(json { { "id", id } });
            return reply(jsonResponse(req, http::status::ok, list));
        }

        if (std::regex_match(path, match, agentPath))
        {
            if (req.method() != http::verb::post)
                return reply(errorResponse(req, http::status::method_not_allowed, "method_not_allowed", "use POST"));
            return attachAgent(req, percentDecode(match[1].str()), std::move(reply));
        }

        if (std::regex_match(path, match, transcriptPath))
        {
            if (req.method() != http::verb::get)
                return reply(errorResponse(req, http::status::method_not_allowed, "method_not_allowed", "use GET"));
            auto host = findRoom(percentDecode(match[1].str()));
            if (!host)
                return reply(errorResponse(req, http::status::not_found, "no_such_room", "unknown room"));
            asio::post(host->strand, [host, req = std::move(req), reply = std::move(reply)] {
                reply(makeResponse(req, http::status::ok, host->room->transcriptJsonl(), "application/x-ndjson"));
            });
            return;
        }

        if (path == "/health")
            return reply(jsonResponse(req, http::status::ok, json { { "status", "ok" } }));

        if (req.method() == http::verb::get || req.method() == http::verb::head)
            return serveStatic(req, path, reply);

        reply(errorResponse(req, http::status::not_found, "not_found", "no route for " + path));
    }
    catch (std::exception const& e)
    {
        spdlog::error("request {} failed: {}", path, e.what());
        reply(errorResponse(req, http::status::internal_server_error, "internal", e.what()));
    }
}

void ChatServer::Impl::createRoom(Request const& req, std::function<void(Response)> const& reply)
{
    auto body = req.body().empty() ? json::object() : json::parse(req.body(), nullptr, false);
    if (body.is_discarded() || !body.is_object())
        return reply(errorResponse(req, http::status::bad_request, "bad_request", "body must be a JSON object"));

    auto settings = RoomConfig {};
    settings.capacity = body.value("capacity", config.roomCapacity);
    settings.timer = config.roomTimer;
    if (auto const it = body.find("timer_seconds"); it != body.end())
    {
        if (it->is_null())
            settings.timer.reset();
        else if (!it->is_number_integer() || it->get<std::int64_t>() <= 0)
            return reply(errorResponse(req, http::status::bad_request, "bad_request",
                                       "timer_seconds must be a positive integer"));
        else
            settings.timer = std::chrono::seconds(it->get<std::int64_t>());
    }
    if (settings.capacity == 0)
        return reply(errorResponse(req, http::status::bad_request, "bad_request", "capacity must be positive"));

    auto lock = std::lock_guard(roomsMutex);
    if (auto const it = body.find("id"); it != body.end())
    {
        if (!it->is_string() || !validRoomId(it->get<std::string>()))
            return reply(errorResponse(req, http::status::bad_request, "bad_request",
                                       "room id must match [A-Za-z0-9_-]{1,64}"));
        settings.id = it->get<std::string>();
        if (rooms.contains(settings.id))
            return reply(errorResponse(req, http::status::conflict, "duplicate_room",
                                       "room '" + settings.id + "' already exists"));
    }
    else
    {
        do
            settings.id = "room-" + std::to_string(nextRoom++);
        while (rooms.contains(settings.id));
    }
    settings.transcriptPath = config.dataDir / "rooms" / (settings.id + ".jsonl");

    auto const id = settings.id;
    auto const timer = settings.timer;
    rooms.emplace(id, std::make_shared<RoomHost>(ioc, std::move(settings)));
    spdlog::info("room {} created", id);
    reply(jsonResponse(req, http::status::created,
                       json { { "id", id }, { "timer_seconds", timer ? json(timer->count()) : json(nullptr) } }));
}

void ChatServer::Impl::attachAgent(Request const& req, std::string const& id, std::function<void(Response)> reply)
{
    auto host = findRoom(id);
    if (!host)
        return reply(errorResponse(req, http::status::not_found, "no_such_room", "unknown room '" + id + "'"));
    if (!config.providers)
        return reply(errorResponse(req, http::status::service_unavailable, "no_provider",
                                   "no language-model provider is configured"));

    auto body = req.body().empty() ? json::object() : json::parse(req.body(), nullptr, false);
    if (body.is_discarded() || !body.is_object())
        return reply(errorResponse(req, http::status::bad_request, "bad_request", "body must be a JSON object"));
    auto const nickname = body.value("nickname", config.agentNickname);

    asio::post(host->strand, [this, host, req, nickname, reply = std::move(reply)] {
        try
        {
            if (host->room->agent())
                return reply(errorResponse(req, http::status::conflict, "agent_attached",
                                           "room '" + host->room->id() + "' already has an agent"));
            auto channels = std::vector<std::unique_ptr<ProviderChannel>> {};
            for (auto const* role: { "router", "action", "reflection" })
                channels.push_back(std::make_unique<WorkerChannel>(config.providers(role), *providerPool, host->clock));

            auto orchestratorConfig = OrchestratorConfig { .room = host->room->id() };
            orchestratorConfig.action.speed = TypingSpeed(config.wpm);
            auto const roomId = host->room->id();
            host->room->attachAgent(AgentSetup {
                .nickname = nickname,
                .providers = ProviderChannels { *channels[0], *channels[1], *channels[2] },
                .catalog = catalog,
                .prompts = prompts,
                .config = orchestratorConfig,
                .log = [roomId](json const& record) { spdlog::debug("workflow {}", record.dump()); },
            });
            host->channels = std::move(channels);

            auto const agentId = *host->room->agentId();
            auto const* self = host->room->state().findParticipant(agentId);
            spdlog::info("agent {} attached to room {}", self->nickname, host->room->id());
            reply(jsonResponse(req, http::status::created,
                               json { { "participant_id", agentId.value }, { "nickname", self->nickname } }));
        }
        catch (RoomError const& e)
        {
            auto const status = e.code() == "room_full" ? http::status::conflict : http::status::bad_request;
            reply(errorResponse(req, status, e.code(), e.what()));
        }
        catch (std::exception const& e)
        {
            reply(errorResponse(req, http::status::internal_server_error, "internal", e.what()));
        }
    });
}

void ChatServer::Impl::serveStatic(Request const& req, std::string const& target,
                                   std::function<void(Response)> const& reply)
{
    if (!config.staticDir)
        return reply(errorResponse(req, http::status::not_found, "not_found", "no route for " + target));

    auto relative = std::filesystem::path(percentDecode(target)).relative_path().lexically_normal();
    if (relative.empty() || target.ends_with('/'))
        relative /= "index.html";
    if (!relative.empty() && *relative.begin() == "..")
        return reply(errorResponse(req, http::status::bad_request, "bad_request", "illegal path"));

    auto const file = *config.staticDir / relative;
    auto in = std::ifstream(file, std::ios::binary);
    if (!in || std::filesystem::is_directory(file))
        return reply(errorResponse(req, http::status::not_found, "not_found", "no file " + relative.string()));
    auto content = std::ostringstream {};
    content << in.rdbuf();

    auto res = makeResponse(req, http::status::ok, content.str(), mimeType(file));
    if (req.method() == http::verb::head)
        res.body().clear();
    reply(std::move(res));
}

ChatServer::ChatServer(ServerConfig config): _impl(std::make_unique<Impl>(std::move(config))) {}

ChatServer::~ChatServer()
{
    stop();
}

void ChatServer::start()
{
    auto& impl = *_impl;
    if (impl.running.exchange(true))
        return;

    std::filesystem::create_directories(impl.config.dataDir / "rooms");
    auto const [host, port] = parseBind(impl.config.bind);
    auto const endpoint = tcp::endpoint(asio::ip::make_address(host), port);

    impl.acceptor.emplace(impl.ioc);
    impl.acceptor->open(endpoint.protocol());
    impl.acceptor->set_option(asio::socket_base::reuse_address(true));
    impl.acceptor->bind(endpoint);
    impl.acceptor->listen(asio::socket_base::max_listen_connections);
    impl.boundPort = impl.acceptor->local_endpoint().port();
    impl.providerPool = std::make_unique<asio::thread_pool>(impl.config.providerThreads);

    impl.accept();
    for (std::size_t i = 0; i < impl.config.threads; ++i)
        impl.threads.emplace_back([&impl] { impl.ioc.run(); });
    spdlog::info("listening on {}:{}", host, impl.boundPort);
}

void ChatServer::stop()
{
    auto& impl = *_impl;
    if (!impl.running.exchange(false))
        return;

    asio::post(impl.ioc, [&impl] {
        beast::error_code ignored;
        impl.acceptor->close(ignored);
    });
    {
        auto lock = std::lock_guard(impl.sessionsMutex);
        for (auto const& weak: impl.sessions)
            if (auto session = weak.lock())
                session->close();
    }
    // Give sessions a moment to send their close frames.
    auto const deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
    while (std::chrono::steady_clock::now() < deadline)
    {
        auto lock = std::lock_guard(impl.sessionsMutex);
        if (std::ranges::all_of(impl.sessions, [](auto const& weak) { return weak.expired(); }))
            break;
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }

    impl.providerPool->stop();
    impl.providerPool->join();
    impl.ioc.stop();
    for (auto& thread: impl.threads)
        thread.join();
    impl.threads.clear();
    {
        auto lock = std::lock_guard(impl.roomsMutex);
        impl.rooms.clear();
    }
    spdlog::info("server stopped");
}

void ChatServer::runUntilSignalled()
{
    start();
    auto signals = asio::signal_set(_impl->ioc, SIGINT, SIGTERM);
    auto promise = std::promise<void> {};
    signals.async_wait([&](beast::error_code, int) { promise.set_value(); });
    promise.get_future().wait();
    stop();
}

std::uint16_t ChatServer::port() const
{
    return _impl->boundPort;
}

ServerConfig const& ChatServer::config() const
{
    return _impl->config;
}

} // namespace huma
