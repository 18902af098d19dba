#include <doctest.h>

#include <set>

#include "temp_dir.hpp"
#include "tracer/capture/orchestrator.hpp"
#include "tracer/fixture/portal.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/warc/cdxj.hpp"
#include "tracer/warc/reader.hpp"

using namespace tracer;
using namespace tracer::capture;
using tracer::testing::TempDir;

namespace {

std::set<std::string> warc_uris(const std::filesystem::path& p)
{
    std::set<std::string> out;
    for (const auto& r : warc::read_records(p)) {
        if (r.record.type == warc::RecordType::response) {
            out.insert(*r.record.target_uri);
        }
    }
    return out;
}

CaptureConfig config_for(const fixture::Portal& portal, const std::filesystem::path& out)
{
    CaptureConfig c;
    c.out_dir = out;
    c.page_script = portal.page_script();
    return c;
}

} // namespace

TEST_CASE("capture id is a slug plus a short digest")
{
    auto id = capture_id_for("https://Example.com/Repo/X?y=1");
    CHECK(id.rfind("example-com-repo-x-", 0) == 0);
    CHECK(id.size() == std::string("example-com-repo-x-").size() + 8);
    CHECK(capture_id_for("https://example.com/a") != capture_id_for("https://example.com/b"));
}

TEST_CASE("fixture repo page capture is ok with all six URIs archived")
{
    TempDir out;
    fixture::PortalSpec spec;
    spec.repos = {{"five", 5, true}};
    auto portal = fixture::Portal::serve(spec);
    auto url = portal->repo_url("five");
    auto result = tracer::capture::capture(url, fixture::repo_trace("http://127.0.0.1:*", 20), config_for(*portal, out.path()));
    CHECK(result.status == CaptureStatus::ok);
    CHECK(result.errors.empty());
    REQUIRE(result.warc_path);
    CHECK(std::filesystem::exists(*result.cdxj_path));
    CHECK(std::filesystem::exists(out.path() / result.capture_id / "result.json"));
    auto uris = warc_uris(*result.warc_path);
    std::size_t total = 0;
    for (const auto& [cat, list] : result.inventory) {
        for (const auto& u : list) {
            CHECK(uris.count(u) == 1);
            ++total;
        }
    }
    CHECK(total == 6);
    // 6 targets plus the landing page.
    CHECK(warc::read_cdxj(*result.cdxj_path).size() == 7);
    auto json = Json::parse(read_file(out.path() / result.capture_id / "result.json"));
    CHECK(json["status"] == "ok");
}

TEST_CASE("non-matching URL raises TraceMismatch and starts nothing")
{
    TempDir out;
    CaptureConfig c;
    c.out_dir = out.path();
    auto before = proxy::CaptureProxy::live_count();
    CHECK_THROWS_AS(tracer::capture::capture("http://example.org/other", fixture::repo_trace(), c), TraceMismatch);
    CHECK(proxy::CaptureProxy::live_count() == before);
    CHECK(std::filesystem::is_empty(out.path()));
}

TEST_CASE("missing selector with on_missing=fail fails after one retry and keeps the landing page")
{
    TempDir out;
    fixture::PortalSpec spec;
    spec.repos = {{"nozip", 2, false}};
    auto portal = fixture::Portal::serve(spec);
    auto t = fixture::repo_trace("http://127.0.0.1:*", 10);
    t.actions[1].on_missing = trace::OnMissing::fail;
    auto url = portal->repo_url("nozip");
    auto result = tracer::capture::capture(url, t, config_for(*portal, out.path()));
    CHECK(result.status == CaptureStatus::failed);
    REQUIRE(result.errors.size() == 2);
    CHECK(result.errors[0].kind == "ElementNotFound");
    CHECK_FALSE(result.errors[0].retried);
    CHECK(result.errors[1].retried);
    REQUIRE(result.warc_path);
    CHECK(warc_uris(*result.warc_path).count(url) == 1);
}

TEST_CASE("skipped ZIP makes the capture partial")
{
    TempDir out;
    fixture::PortalSpec spec;
    spec.repos = {{"nozip", 2, false}};
    auto portal = fixture::Portal::serve(spec);
    auto result = tracer::capture::capture(portal->repo_url("nozip"), fixture::repo_trace("http://127.0.0.1:*", 10),
                          config_for(*portal, out.path()));
    CHECK(result.status == CaptureStatus::partial);
    CHECK(result.errors.empty());
}

TEST_CASE("unreachable webdriver is an environment error")
{
    TempDir out;
    CaptureConfig c;
    c.out_dir = out.path();
    c.backend = driver::BackendKind::webdriver;
    c.webdriver_endpoint = "http://127.0.0.1:1";
    CHECK_THROWS_AS(tracer::capture::capture("http://127.0.0.1:5/repo/x", fixture::repo_trace(), c), EnvironmentError);
}

TEST_CASE("batch keeps input order, bounds concurrency and isolates failures")
{
    TempDir out;
    fixture::PortalSpec spec;
    for (int i = 0; i < 9; ++i) {
        spec.repos.push_back({"r" + std::to_string(i), i % 4, true});
    }
    spec.delay_ms = 5;
    auto portal = fixture::Portal::serve(spec);
    std::vector<std::string> urls;
    for (int i = 0; i < 9; ++i) {
        urls.push_back(portal->repo_url("r" + std::to_string(i)));
    }
    urls.insert(urls.begin() + 4, portal->base_url() + "/elsewhere/x");
    ListTraceSource source({fixture::repo_trace("http://127.0.0.1:*", 10)});
    BatchConfig bc;
    bc.capture = config_for(*portal, out.path());
    bc.workers = 4;
    BatchStats stats;
    proxy::CaptureProxy::reset_peak_live_count();
    auto results = capture_batch(urls, source, bc, &stats);
    REQUIRE(results.size() == 10);
    for (std::size_t i = 0; i < urls.size(); ++i) {
        CHECK(results[i].target_url == urls[i]);
    }
    CHECK(results[4].status == CaptureStatus::failed);
    CHECK(results[4].errors.at(0).kind == "TraceMismatch");
    int ok = 0;
    for (const auto& r : results) {
        ok += r.status == CaptureStatus::ok ? 1 : 0;
    }
    CHECK(ok == 9);
    CHECK(stats.peak.load() <= 4);
    CHECK(stats.peak.load() >= 1);
    CHECK(proxy::CaptureProxy::peak_live_count() <= 4);
    CHECK(portal->stats().max_concurrency <= 4);
    CHECK(capture_batch({}, source, bc).empty());
}

TEST_CASE("repeated mock captures yield identical inventories and CDXJ keys")
{
    TempDir a, b;
    fixture::PortalSpec spec;
    spec.decks = {{"d", 4, 2, fixture::Pagination::script}};
    auto portal = fixture::Portal::serve(spec);
    auto url = portal->deck_url("d");
    auto r1 = tracer::capture::capture(url, fixture::deck_trace("http://127.0.0.1:*", 10), config_for(*portal, a.path()));
    auto r2 = tracer::capture::capture(url, fixture::deck_trace("http://127.0.0.1:*", 10), config_for(*portal, b.path()));
    CHECK(r1.status == CaptureStatus::ok);
    CHECK(r1.inventory == r2.inventory);
    auto keys = [](const std::filesystem::path& p) {
        std::vector<std::string> out;
        for (const auto& l : warc::read_cdxj(p)) {
            out.push_back(l.surt + " " + l.url + " " + l.digest + " " + l.status);
        }
        return out;
    };
    CHECK(keys(*r1.cdxj_path) == keys(*r2.cdxj_path));
}
