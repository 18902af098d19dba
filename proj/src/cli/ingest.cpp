#include <httplib.h>

#include <mutex>
#include <thread>

#include "tracer/cli/cli.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/repo/repository.hpp"
#include "tracer/trace/trace.hpp"

namespace tracer::cli {

namespace {

constexpr std::size_t kMaxTraceBytes = 1u << 20;

void json_reply(httplib::Response& res, int status, const Json& body)
{
    res.status = status;
    res.set_content(to_canonical_json(body), "application/json");
}

Json single_finding(const std::string& path, const std::string& message)
{
    trace::ValidationReport report;
    report.findings.push_back({trace::Severity::error, path, message});
    return report.to_json();
}

} // namespace

struct IngestServer::Impl {
    std::filesystem::path repo_dir;
    httplib::Server server;
    std::thread thread;
    std::mutex publish_mutex;
    int port = 0;

    void put_trace(const httplib::Request& req, httplib::Response& res)
    {
        auto id = req.matches[1].str();
        trace::Trace t;
        try {
            t = trace::decode_trace(req.body);
        } catch (const trace::SchemaError& e) {
            json_reply(res, 422, single_finding(e.field(), e.what()));
            return;
        } catch (const Error& e) {
            json_reply(res, 422, single_finding("$", e.what()));
            return;
        }
        auto report = trace::validate_trace(t);
        if (t.id != id) {
            report.findings.push_back({trace::Severity::error, "$.id",
                                       "trace id '" + t.id + "' does not match the request path id '" + id + "'"});
        }
        if (report.has_errors()) {
            json_reply(res, 422, report.to_json());
            return;
        }
        try {
            std::lock_guard lock(publish_mutex);
            auto published = repo::publish_local(repo_dir, t);
            Json body = published.ref.to_json();
            body["created"] = published.created;
            body["findings"] = report.to_json()["findings"];
            json_reply(res, 201, body);
        } catch (const trace::SchemaError& e) {
            json_reply(res, 422, single_finding(e.field(), e.what()));
        } catch (const std::exception& e) {
            json_reply(res, 500, Json{{"error", e.what()}});
        }
    }
};

std::unique_ptr<IngestServer> IngestServer::start(std::filesystem::path repo_dir, const std::string& host, int port)
{
    auto impl = std::make_unique<Impl>();
    std::filesystem::create_directories(repo_dir);
    impl->repo_dir = std::move(repo_dir);
    auto* raw = impl.get();
    impl->server.set_payload_max_length(kMaxTraceBytes);
    impl->server.set_tcp_nodelay(true);
    impl->server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
        json_reply(res, 200, Json{{"status", "ok"}});
    });
    impl->server.Put(R"(/traces/([^/]+))",
                     [raw](const httplib::Request& req, httplib::Response& res) { raw->put_trace(req, res); });
    impl->port = port == 0 ? impl->server.bind_to_any_port(host) : (impl->server.bind_to_port(host, port) ? port : -1);
    if (impl->port < 0) {
        throw proxy::BindError("cannot listen on " + host + ":" + std::to_string(port));
    }
    impl->thread = std::thread([raw] { raw->server.listen_after_bind(); });
    impl->server.wait_until_ready();
    return std::unique_ptr<IngestServer>(new IngestServer(std::move(impl)));
}

IngestServer::IngestServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

IngestServer::~IngestServer() { stop(); }

int IngestServer::port() const { return impl_->port; }

void IngestServer::stop()
{
    if (impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

} // namespace tracer::cli
