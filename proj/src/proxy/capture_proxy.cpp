#include "tracer/proxy/capture_proxy.hpp"

#include <algorithm>
#include <charconv>
#include <list>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include "net.hpp"
#include "spill_buffer.hpp"
#include "tracer/util/digest.hpp"
#include "tracer/util/http.hpp"
#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"

namespace tracer::proxy {

std::string_view to_string(Disposition d)
{
    switch (d) {
    case Disposition::recorded:
        return "recorded";
    case Disposition::duplicate_skipped:
        return "duplicate-skipped";
    case Disposition::connect_tunnel:
        return "connect-tunnel";
    case Disposition::error:
        return "error";
    }
    return "error";
}

Json ExchangeSummary::to_json() const
{
    Json j = Json::object();
    j["target_uri"] = target_uri;
    j["method"] = method;
    j["status"] = status;
    j["payload_digest"] = payload_digest;
    j["bytes"] = bytes;
    j["started"] = started;
    j["finished"] = finished;
    j["duration_ms"] = duration_ms;
    j["disposition"] = to_string(disposition);
    if (!error.empty()) {
        j["error"] = error;
    }
    return j;
}

std::size_t CaptureLog::count(Disposition d) const
{
    return static_cast<std::size_t>(
        std::count_if(exchanges.begin(), exchanges.end(), [d](const auto& e) { return e.disposition == d; }));
}

Json CaptureLog::to_json() const
{
    Json j = Json::object();
    j["warc_path"] = warc_path ? Json(warc_path->string()) : Json(nullptr);
    j["warcinfo_id"] = warcinfo_id ? Json(*warcinfo_id) : Json(nullptr);
    Json list = Json::array();
    for (const auto& e : exchanges) {
        list.push_back(e.to_json());
    }
    j["exchanges"] = std::move(list);
    return j;
}

namespace {

std::atomic<int> g_live{0};
std::atomic<int> g_peak{0};

void note_started()
{
    int now = ++g_live;
    int peak = g_peak.load();
    while (now > peak && !g_peak.compare_exchange_weak(peak, now)) {
    }
}

struct Origin {
    std::string scheme;
    std::string host;
    int port = 0;

    std::string key() const { return scheme + "://" + host + ":" + std::to_string(port); }
};

// Sockets owned by one client connection, reachable from stop() so blocked
// reads can be interrupted.
struct ConnectionState {
    std::mutex mutex;
    std::set<int> fds;
    std::atomic<bool> done{false};

    void add(int fd)
    {
        std::lock_guard lock(mutex);
        fds.insert(fd);
    }
    void remove(int fd)
    {
        std::lock_guard lock(mutex);
        fds.erase(fd);
    }
    void shutdown_all()
    {
        std::lock_guard lock(mutex);
        for (int fd : fds) {
            ::shutdown(fd, SHUT_RDWR);
        }
    }
};

struct Connection {
    std::shared_ptr<ConnectionState> state;
    std::thread thread;
};

struct Upstream {
    net::Socket socket;
    std::unique_ptr<net::Stream> stream;
    std::unique_ptr<net::Reader> reader;
    std::shared_ptr<ConnectionState> owner;

    ~Upstream()
    {
        reader.reset();
        stream.reset();
        if (owner && socket.valid()) {
            owner->remove(socket.fd());
        }
    }
};

std::string error_response(int status, std::string_view reason, std::string_view body)
{
    return "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason) +
           "\r\nContent-Type: text/plain\r\nContent-Length: " + std::to_string(body.size()) +
           "\r\nConnection: close\r\n\r\n" + std::string(body);
}

bool parse_authority(std::string_view text, std::string& host, int& port, int fallback_port)
{
    port = fallback_port;
    if (!text.empty() && text.front() == '[') {
        auto close = text.find(']');
        if (close == std::string_view::npos) {
            return false;
        }
        host = std::string(text.substr(1, close - 1));
        text.remove_prefix(close + 1);
        if (text.empty()) {
            return true;
        }
        if (text.front() != ':') {
            return false;
        }
        text.remove_prefix(1);
    } else {
        auto colon = text.rfind(':');
        host = std::string(text.substr(0, colon));
        if (colon == std::string_view::npos) {
            return !host.empty();
        }
        text.remove_prefix(colon + 1);
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), port);
    return !host.empty() && ec == std::errc{} && ptr == text.data() + text.size() && port > 0 && port < 65536;
}

} // namespace

struct CaptureProxy::Impl {
    ProxyConfig config;
    std::optional<CertificateAuthority> ca;
    net::Socket listener;
    int port = 0;
    int wake[2] = {-1, -1};
    net::SslCtx server_ctx;
    net::SslCtx client_ctx;

    std::mutex writer_mutex;
    std::unique_ptr<warc::WarcWriter> writer;
    std::optional<std::string> warcinfo_id;
    std::set<std::string> dedup;

    std::atomic<int> in_flight{0};
    std::atomic<std::int64_t> last_activity{0};

    mutable std::mutex log_mutex;
    std::vector<ExchangeSummary> log;

    std::thread acceptor;
    std::mutex connections_mutex;
    std::list<Connection> connections;

    std::atomic<bool> stopping{false};
    std::mutex stop_mutex;
    std::optional<CaptureLog> final_log;

    ~Impl()
    {
        for (int fd : wake) {
            if (fd >= 0) {
                ::close(fd);
            }
        }
    }

    void touch()
    {
        auto now = monotonic_ms();
        auto prev = last_activity.load();
        while (now > prev && !last_activity.compare_exchange_weak(prev, now)) {
        }
    }

    void append_log(ExchangeSummary summary)
    {
        std::lock_guard lock(log_mutex);
        log.push_back(std::move(summary));
    }

    void accept_loop();
    void reap(bool all);
    void serve(std::shared_ptr<ConnectionState> state, net::Socket client);
    bool exchange(const std::shared_ptr<ConnectionState>& state, net::Reader& client_reader,
                  net::Stream& client_stream, const std::string& head_bytes, const std::optional<Origin>& tunnel,
                  std::map<std::string, std::unique_ptr<Upstream>>& pool);
    std::unique_ptr<Upstream> open_upstream(const std::shared_ptr<ConnectionState>& state, const Origin& origin);
    void write_warcinfo();
};

void CaptureProxy::Impl::write_warcinfo()
{
    http::HeaderList fields{
        {"software", config.software},
        {"format", "WARC File Format 1.1"},
        {"conformsTo", "http://iipc.github.io/warc-specifications/specifications/warc-format/warc-1.1/"},
        {"http-version", "HTTP/1.1"},
        {"proxy-listen", config.host + ":" + std::to_string(port)},
        {"proxy-compression",
         config.compression == warc::Compression::gzip_per_record ? "gzip-per-record" : "none"},
        {"proxy-ca", config.ca ? "loaded" : "generated"},
        {"proxy-upstream-verify", config.verify_upstream ? "true" : "false"},
        {"proxy-dedup", "GET target-uri payload-digest"},
    };
    auto record = warc::make_warcinfo(config.warc_output_path->filename().string(), fields);
    writer->write_record(record);
    writer->flush();
    warcinfo_id = record.record_id;
}

void CaptureProxy::Impl::reap(bool all)
{
    std::list<Connection> finished;
    {
        std::lock_guard lock(connections_mutex);
        for (auto it = connections.begin(); it != connections.end();) {
            if (all || it->state->done) {
                finished.splice(finished.end(), connections, it++);
            } else {
                ++it;
            }
        }
    }
    for (auto& c : finished) {
        if (c.thread.joinable()) {
            c.thread.join();
        }
    }
}

void CaptureProxy::Impl::accept_loop()
{
    while (!stopping) {
        pollfd fds[2] = {{listener.fd(), POLLIN, 0}, {wake[0], POLLIN, 0}};
        int rc = ::poll(fds, 2, 200);
        reap(false);
        if (rc <= 0 || (fds[1].revents & POLLIN) != 0) {
            continue;
        }
        if ((fds[0].revents & POLLIN) == 0) {
            continue;
        }
        int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) {
            continue;
        }
        net::Socket client(fd);
        client.set_timeouts(config.io_timeout);
        auto state = std::make_shared<ConnectionState>();
        state->add(fd);
        std::lock_guard lock(connections_mutex);
        connections.push_back({state, std::thread([this, state, s = std::move(client)]() mutable {
                                   serve(state, std::move(s));
                               })});
    }
}

std::unique_ptr<Upstream> CaptureProxy::Impl::open_upstream(const std::shared_ptr<ConnectionState>& state,
                                                            const Origin& origin)
{
    auto up = std::make_unique<Upstream>();
    up->socket = net::connect_to(origin.host, origin.port, config.io_timeout);
    up->owner = state;
    state->add(up->socket.fd());
    if (origin.scheme == "https") {
        up->stream = net::TlsStream::connect(client_ctx.get(), up->socket.fd(), origin.host);
    } else {
        up->stream = std::make_unique<net::SocketStream>(up->socket.fd());
    }
    up->reader = std::make_unique<net::Reader>(*up->stream);
    return up;
}

void CaptureProxy::Impl::serve(std::shared_ptr<ConnectionState> state, net::Socket client)
{
    try {
        net::SocketStream plain(client.fd());
        std::unique_ptr<net::TlsStream> tls;
        net::Stream* stream = &plain;
        net::Reader reader(plain);
        std::optional<Origin> tunnel;
        std::map<std::string, std::unique_ptr<Upstream>> pool;

        while (true) {
            auto head = reader.read_head();
            if (!head) {
                break;
            }
            auto line_end = head->find("\r\n");
            auto request_line = http::parse_request_line(std::string_view(*head).substr(0, line_end));
            if (request_line.method == "CONNECT") {
                ExchangeSummary summary;
                summary.method = "CONNECT";
                summary.target_uri = request_line.target;
                summary.started = warc::now_warc_date();
                Origin origin{"https", {}, 443};
                if (tunnel || !parse_authority(request_line.target, origin.host, origin.port, 443)) {
                    stream->write_all(error_response(400, "Bad Request", "bad CONNECT target\n"));
                    summary.disposition = Disposition::error;
                    summary.error = "bad CONNECT target";
                    append_log(std::move(summary));
                    break;
                }
                touch();
                stream->write_all("HTTP/1.1 200 Connection Established\r\n\r\n");
                summary.status = 200;
                summary.disposition = Disposition::connect_tunnel;
                summary.finished = summary.started;
                append_log(std::move(summary));
                if (reader.buffered() != 0) {
                    throw net::NetError("client sent data before the tunnel was established");
                }
                tls = net::TlsStream::accept(server_ctx.get(), client.fd(), ca->leaf_for(origin.host));
                stream = tls.get();
                reader = net::Reader(*tls);
                tunnel = origin;
                continue;
            }
            if (!exchange(state, reader, *stream, *head, tunnel, pool)) {
                break;
            }
        }
    } catch (const std::exception&) {
        // Connection-level failures (resets, TLS handshake errors) end the
        // connection; exchange-level errors are logged by exchange().
    }
    state->remove(client.fd());
    state->done = true;
}

bool CaptureProxy::Impl::exchange(const std::shared_ptr<ConnectionState>& state, net::Reader& client_reader,
                                  net::Stream& client_stream, const std::string& head_bytes,
                                  const std::optional<Origin>& tunnel,
                                  std::map<std::string, std::unique_ptr<Upstream>>& pool)
{
    auto head = http::parse_head(std::string_view(head_bytes).substr(0, head_bytes.size() - 4));
    auto request_line = http::parse_request_line(head.start_line);

    Origin origin;
    std::string target_uri;
    std::string origin_target;
    if (tunnel) {
        origin = *tunnel;
        origin_target = request_line.target.empty() ? "/" : request_line.target;
        target_uri = "https://" + (origin.host.find(':') != std::string::npos ? "[" + origin.host + "]" : origin.host);
        if (origin.port != 443) {
            target_uri += ":" + std::to_string(origin.port);
        }
        target_uri += origin_target;
    } else {
        auto url = try_parse_url(request_line.target);
        auto scheme = url ? to_lower(url->scheme) : std::string();
        if (!url || (scheme != "http" && scheme != "https")) {
            client_stream.write_all(error_response(400, "Bad Request", "absolute-form request target required\n"));
            return false;
        }
        origin = {scheme, url->host, url->effective_port()};
        if (!origin.host.empty() && origin.host.front() == '[') {
            origin.host = origin.host.substr(1, origin.host.size() - 2);
        }
        origin_target = url->request_target();
        target_uri = url->without_fragment();
    }

    // Request body.
    std::string body;
    auto framing = http::request_framing(head);
    char buf[64 * 1024];
    if (framing.kind == http::FramingKind::content_length) {
        std::uint64_t remaining = framing.length;
        while (remaining > 0) {
            auto got = client_reader.read_some(buf, static_cast<std::size_t>(std::min<std::uint64_t>(remaining, sizeof buf)));
            if (got == 0) {
                throw net::NetError("client closed during request body");
            }
            body.append(buf, got);
            remaining -= got;
        }
    } else if (framing.kind == http::FramingKind::chunked) {
        http::ChunkedDecoder decoder;
        std::string sink;
        while (!decoder.done()) {
            auto got = client_reader.read_some(buf, sizeof buf);
            if (got == 0) {
                throw net::NetError("client closed during chunked request body");
            }
            auto used = decoder.feed(std::string_view(buf, got), sink);
            body.append(buf, used);
            if (used < got) {
                client_reader.unread(std::string_view(buf + used, got - used));
            }
        }
    }

    http::Head upstream_head;
    upstream_head.start_line = request_line.method + " " + origin_target + " HTTP/1.1";
    bool has_host = false;
    for (const auto& [key, value] : head.headers) {
        auto lower = to_lower(key);
        if (lower == "proxy-connection" || lower == "proxy-authorization") {
            continue;
        }
        has_host = has_host || lower == "host";
        upstream_head.headers.emplace_back(key, value);
    }
    if (!has_host) {
        auto host_value = origin.host;
        if (origin.port != default_port(origin.scheme)) {
            host_value += ":" + std::to_string(origin.port);
        }
        upstream_head.headers.insert(upstream_head.headers.begin(), {"Host", host_value});
    }
    std::string request_bytes = http::serialize_head(upstream_head) + body;
    bool client_close = head.has_token("Connection", "close") || head.has_token("Proxy-Connection", "close") ||
                        (request_line.version == "HTTP/1.0" && !head.has_token("Connection", "keep-alive"));

    ExchangeSummary summary;
    summary.target_uri = target_uri;
    summary.method = request_line.method;
    auto started_at = std::chrono::system_clock::now();
    summary.started = format_iso8601(started_at);
    auto started_ms = monotonic_ms();
    ++in_flight;
    touch();

    SpillBuffer block(config.spill_threshold);
    Sha1 block_hash;
    Sha1 payload_hash;
    bool response_started = false;
    bool client_broken = false;
    bool upstream_close = false;
    auto to_client = [&](std::string_view data) {
        response_started = true;
        if (client_broken || data.empty()) {
            return;
        }
        try {
            client_stream.write_all(data);
        } catch (const std::exception&) {
            client_broken = true;
        }
    };
    auto keep = [&](std::string_view raw) {
        block.append(raw);
        block_hash.update(raw);
    };

    auto finish = [&](ExchangeSummary s) {
        s.finished = format_iso8601(std::chrono::system_clock::now());
        s.duration_ms = monotonic_ms() - started_ms;
        append_log(std::move(s));
        --in_flight;
        touch();
    };

    try {
        auto key = origin.key();
        std::string response_head;
        for (int attempt = 0; attempt < 2; ++attempt) {
            bool reused = pool.count(key) != 0;
            if (!reused) {
                pool[key] = open_upstream(state, origin);
            }
            auto& up = *pool[key];
            try {
                up.stream->write_all(request_bytes);
                auto got = up.reader->read_head();
                if (!got) {
                    throw net::NetError("upstream closed before responding");
                }
                response_head = std::move(*got);
                break;
            } catch (const net::NetError&) {
                pool.erase(key);
                if (!reused || attempt == 1) {
                    throw;
                }
            }
        }
        auto& up = *pool[key];
        auto parsed = http::parse_head(std::string_view(response_head).substr(0, response_head.size() - 4));
        auto status = http::parse_status_line(parsed.start_line);
        while (status.status >= 100 && status.status < 200 && status.status != 101) {
            to_client(response_head);
            auto next = up.reader->read_head();
            if (!next) {
                throw net::NetError("upstream closed after interim response");
            }
            response_head = std::move(*next);
            parsed = http::parse_head(std::string_view(response_head).substr(0, response_head.size() - 4));
            status = http::parse_status_line(parsed.start_line);
        }
        summary.status = status.status;
        keep(response_head);
        to_client(response_head);

        auto rframing = http::response_framing(parsed, request_line.method, status.status);
        upstream_close = parsed.has_token("Connection", "close") || status.version == "HTTP/1.0" ||
                         rframing.kind == http::FramingKind::until_close || status.status == 101;
        if (rframing.kind == http::FramingKind::content_length) {
            std::uint64_t remaining = rframing.length;
            while (remaining > 0) {
                auto got = up.reader->read_some(buf, static_cast<std::size_t>(std::min<std::uint64_t>(remaining, sizeof buf)));
                if (got == 0) {
                    throw net::NetError("upstream closed mid-body");
                }
                std::string_view piece(buf, got);
                keep(piece);
                payload_hash.update(piece);
                to_client(piece);
                remaining -= got;
            }
        } else if (rframing.kind == http::FramingKind::chunked) {
            http::ChunkedDecoder decoder;
            std::string decoded;
            while (!decoder.done()) {
                auto got = up.reader->read_some(buf, sizeof buf);
                if (got == 0) {
                    throw net::NetError("upstream closed mid-chunked-body");
                }
                decoded.clear();
                auto used = decoder.feed(std::string_view(buf, got), decoded);
                payload_hash.update(decoded);
                std::string_view piece(buf, used);
                keep(piece);
                to_client(piece);
                if (used < got) {
                    up.reader->unread(std::string_view(buf + used, got - used));
                }
            }
        } else if (rframing.kind == http::FramingKind::until_close) {
            while (true) {
                auto got = up.reader->read_some(buf, sizeof buf);
                if (got == 0) {
                    break;
                }
                std::string_view piece(buf, got);
                keep(piece);
                payload_hash.update(piece);
                to_client(piece);
            }
        }
        if (upstream_close) {
            pool.erase(key);
        }
    } catch (const std::exception& e) {
        pool.erase(origin.key());
        summary.disposition = Disposition::error;
        summary.error = e.what();
        if (!response_started) {
            try {
                client_stream.write_all(error_response(502, "Bad Gateway", std::string(e.what()) + "\n"));
            } catch (const std::exception&) {
            }
        }
        finish(std::move(summary));
        return false;
    }

    summary.bytes = block.size();
    summary.payload_digest = payload_hash.finish_labelled();
    auto block_digest = block_hash.finish_labelled();

    try {
        std::lock_guard lock(writer_mutex);
        std::string dedup_key;
        if (request_line.method == "GET") {
            dedup_key = target_uri + " " + summary.payload_digest;
        }
        if (!dedup_key.empty() && dedup.count(dedup_key) != 0) {
            summary.disposition = Disposition::duplicate_skipped;
        } else {
            if (!dedup_key.empty()) {
                dedup.insert(dedup_key);
            }
            summary.disposition = Disposition::recorded;
            if (writer) {
                warc::WarcRecord response;
                response.type = warc::RecordType::response;
                response.record_id = warc::new_record_id();
                response.target_uri = target_uri;
                response.date = summary.started;
                response.content_type = "application/http; msgtype=response";
                response.block_digest = block_digest;
                response.payload_digest = summary.payload_digest;
                response.content_length = block.size();
                if (warcinfo_id) {
                    response.extra_headers.emplace_back("WARC-Warcinfo-ID", "<" + *warcinfo_id + ">");
                }
                writer->write_streamed(response, block.size(),
                                       [&](const auto& sink) { block.for_each_chunk(sink); });

                auto request = warc::make_request(target_uri, request_bytes);
                request.date = summary.started;
                request.concurrent_to = response.record_id;
                if (warcinfo_id) {
                    request.extra_headers.emplace_back("WARC-Warcinfo-ID", "<" + *warcinfo_id + ">");
                }
                writer->write_record(request);
                writer->flush();
            }
        }
    } catch (const std::exception& e) {
        summary.disposition = Disposition::error;
        summary.error = std::string("archiving failed: ") + e.what();
    }
    if (writer || summary.disposition == Disposition::error) {
        finish(std::move(summary));
    } else {
        --in_flight;
        touch();
    }
    return !(client_close || upstream_close || client_broken);
}

CaptureProxy::CaptureProxy(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

CaptureProxy::~CaptureProxy() { stop(); }

std::unique_ptr<CaptureProxy> CaptureProxy::start(ProxyConfig config)
{
    auto impl = std::make_unique<Impl>();
    impl->config = std::move(config);
    impl->ca = impl->config.ca ? *impl->config.ca : CertificateAuthority::generate();
    try {
        impl->listener = net::listen_on(impl->config.host, impl->config.port, impl->port);
    } catch (const net::NetError& e) {
        throw BindError(e.what());
    }
    if (::pipe2(impl->wake, O_CLOEXEC) != 0) {
        throw IoError("cannot create wake pipe");
    }
    impl->server_ctx = net::make_server_ctx();
    impl->client_ctx = net::make_client_ctx(impl->config.verify_upstream, impl->config.upstream_ca_file);
    if (impl->config.ca_out) {
        write_file(*impl->config.ca_out, impl->ca->certificate_pem());
    }
    if (impl->config.warc_output_path) {
        impl->writer = std::make_unique<warc::WarcWriter>(*impl->config.warc_output_path, impl->config.compression);
        impl->write_warcinfo();
    }
    impl->last_activity = monotonic_ms();
    auto* raw = impl.get();
    impl->acceptor = std::thread([raw] { raw->accept_loop(); });
    note_started();
    return std::unique_ptr<CaptureProxy>(new CaptureProxy(std::move(impl)));
}

int CaptureProxy::port() const { return impl_->port; }

std::string CaptureProxy::endpoint() const { return impl_->config.host + ":" + std::to_string(impl_->port); }

std::string CaptureProxy::ca_certificate_pem() const { return impl_->ca->certificate_pem(); }

const CertificateAuthority& CaptureProxy::ca() const { return *impl_->ca; }

IdleState CaptureProxy::idle_state(int quiet_ms) const { return idle_state(quiet_ms, monotonic_ms()); }

IdleState CaptureProxy::idle_state(int quiet_ms, std::int64_t now_ms) const
{
    IdleState s;
    s.in_flight = impl_->in_flight.load();
    s.since_ms = std::max<std::int64_t>(0, now_ms - impl_->last_activity.load());
    s.idle = s.in_flight == 0 && s.since_ms >= quiet_ms;
    return s;
}

int CaptureProxy::in_flight() const { return impl_->in_flight.load(); }

std::int64_t CaptureProxy::last_activity_ms() const { return impl_->last_activity.load(); }

std::vector<ExchangeSummary> CaptureProxy::capture_log() const
{
    std::lock_guard lock(impl_->log_mutex);
    return impl_->log;
}

CaptureLog CaptureProxy::stop()
{
    std::lock_guard lock(impl_->stop_mutex);
    if (impl_->final_log) {
        return *impl_->final_log;
    }
    impl_->stopping = true;
    char byte = 1;
    [[maybe_unused]] auto ignored = ::write(impl_->wake[1], &byte, 1);
    if (impl_->acceptor.joinable()) {
        impl_->acceptor.join();
    }
    impl_->listener = net::Socket();

    auto deadline = monotonic_ms() + impl_->config.drain_timeout.count();
    while (impl_->in_flight.load() > 0 && monotonic_ms() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    {
        std::lock_guard conn_lock(impl_->connections_mutex);
        for (auto& c : impl_->connections) {
            c.state->shutdown_all();
        }
    }
    impl_->reap(true);

    CaptureLog log;
    {
        std::lock_guard writer_lock(impl_->writer_mutex);
        if (impl_->writer) {
            impl_->writer->close();
            log.warc_path = impl_->config.warc_output_path;
        }
    }
    log.warcinfo_id = impl_->warcinfo_id;
    log.exchanges = capture_log();
    impl_->final_log = log;
    --g_live;
    return log;
}

int CaptureProxy::live_count() { return g_live.load(); }

int CaptureProxy::peak_live_count() { return g_peak.load(); }

void CaptureProxy::reset_peak_live_count() { g_peak = g_live.load(); }

} // namespace tracer::proxy
