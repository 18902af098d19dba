#include <doctest.h>
#include <httplib.h>

#include <thread>

#include "temp_dir.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/util/digest.hpp"
#include "tracer/warc/reader.hpp"

using namespace tracer;
using namespace tracer::proxy;

namespace {

struct Origin {
    std::unique_ptr<httplib::Server> server;
    std::thread thread;
    int port = 0;

    explicit Origin(bool tls)
    {
        if (tls) {
            auto cred = self_signed_credential("127.0.0.1");
            server = std::make_unique<httplib::SSLServer>(cred.certificate.get(), cred.key.get());
        } else {
            server = std::make_unique<httplib::Server>();
        }
        server->Get(R"(/r/(\d+))", [](const httplib::Request& req, httplib::Response& res) {
            res.set_content("resource " + req.matches[1].str(), "text/plain");
        });
        server->Get("/chunked", [](const httplib::Request&, httplib::Response& res) {
            res.set_chunked_content_provider("text/plain", [](size_t offset, httplib::DataSink& sink) {
                if (offset < 30) {
                    sink.write("0123456789", 10);
                } else {
                    sink.done();
                }
                return true;
            });
        });
        server->Post("/echo", [](const httplib::Request& req, httplib::Response& res) {
            res.set_content(req.body, "text/plain");
        });
        port = server->bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server->listen_after_bind(); });
        server->wait_until_ready();
    }
    ~Origin()
    {
        server->stop();
        thread.join();
    }
};

} // namespace

TEST_CASE("proxy records plain HTTP exchanges as response then request")
{
    testing::TempDir dir;
    Origin origin(false);
    ProxyConfig cfg;
    cfg.warc_output_path = dir / "out.warc.gz";
    auto proxy = CaptureProxy::start(cfg);

    httplib::Client client("127.0.0.1", origin.port);
    client.set_proxy("127.0.0.1", proxy->port());
    auto res = client.Get("/r/1");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == "resource 1");
    auto chunked = client.Get("/chunked");
    REQUIRE(chunked);
    CHECK(chunked->body == "012345678901234567890123456789");
    auto echo = client.Post("/echo", "hello body", "text/plain");
    REQUIRE(echo);
    CHECK(echo->body == "hello body");

    auto log = proxy->stop();
    CHECK(log.count(Disposition::recorded) == 3);
    auto records = warc::read_records(*log.warc_path);
    REQUIRE(records.size() == 7);
    CHECK(records[0].record.type == warc::RecordType::warcinfo);
    CHECK(records[1].record.type == warc::RecordType::response);
    CHECK(records[2].record.type == warc::RecordType::request);
    CHECK(records[2].record.concurrent_to == records[1].record.record_id);
    auto base = "http://127.0.0.1:" + std::to_string(origin.port);
    CHECK(records[1].record.target_uri == base + "/r/1");
    // Chunked body: payload digest covers the decoded bytes.
    CHECK(records[3].record.payload_digest == log.exchanges[1].payload_digest);
    CHECK(records[3].record.payload_digest == sha1_labelled("012345678901234567890123456789"));
}

TEST_CASE("proxy intercepts CONNECT and records HTTPS with a per-session CA")
{
    testing::TempDir dir;
    Origin origin(true);
    ProxyConfig cfg;
    cfg.warc_output_path = dir / "out.warc.gz";
    auto proxy = CaptureProxy::start(cfg);

    httplib::SSLClient client("127.0.0.1", origin.port);
    client.set_proxy("127.0.0.1", proxy->port());
    auto pem = proxy->ca_certificate_pem();
    client.load_ca_cert_store(pem.data(), pem.size());
    client.enable_server_certificate_verification(true);
    for (int i = 0; i < 3; ++i) {
        auto res = client.Get("/r/" + std::to_string(i));
        REQUIRE(res);
        CHECK(res->body == "resource " + std::to_string(i));
    }
    // Same URI and payload again is skipped.
    REQUIRE(client.Get("/r/0"));

    auto log = proxy->stop();
    CHECK(log.count(Disposition::recorded) == 3);
    CHECK(log.count(Disposition::duplicate_skipped) == 1);
    auto records = warc::read_records(*log.warc_path);
    REQUIRE(records.size() == 7);
    CHECK(records[1].record.target_uri == "https://127.0.0.1:" + std::to_string(origin.port) + "/r/0");
}

TEST_CASE("proxy answers 502 when the origin is unreachable")
{
    ProxyConfig cfg;
    auto proxy = CaptureProxy::start(cfg);
    // Nothing listens on port 1 in the test environment.
    int dead_port = 1;
    httplib::Client client("127.0.0.1", dead_port);
    client.set_proxy("127.0.0.1", proxy->port());
    auto res = client.Get("/");
    REQUIRE(res);
    CHECK(res->status == 502);
    auto log = proxy->stop();
    REQUIRE(log.exchanges.size() == 1);
    CHECK(log.exchanges[0].disposition == Disposition::error);
    CHECK_FALSE(log.warc_path.has_value());
}

TEST_CASE("idle state follows the quiet-period boundary")
{
    ProxyConfig cfg;
    auto proxy = CaptureProxy::start(cfg);
    auto last = proxy->last_activity_ms();
    CHECK_FALSE(proxy->idle_state(500, last + 499).idle);
    CHECK(proxy->idle_state(500, last + 500).idle);
    CHECK(proxy->idle_state(500, last + 500).in_flight == 0);
    proxy->stop();
    proxy->stop();
}
