#include <doctest.h>

#include "temp_dir.hpp"
#include "tracer/bench/bench.hpp"
#include "tracer/fixture/portal.hpp"
#include "tracer/warc/writer.hpp"

using namespace tracer;
using namespace tracer::bench;
using tracer::testing::TempDir;

TEST_CASE("extract_uris keeps first occurrence order")
{
    TempDir dir;
    auto p = dir / "x.warc";
    {
        warc::WarcWriter w(p, warc::Compression::none);
        for (auto u : {"https://h/b", "https://h/a", "https://h/b", "https://h/c"}) {
            w.write_record(warc::make_request(u, "GET / HTTP/1.1\r\n\r\n"));
            w.write_record(warc::make_response(u, "HTTP/1.1 404 N\r\nContent-Length: 0\r\n\r\n"));
        }
    }
    CHECK(extract_uris(p) == std::vector<std::string>{"https://h/b", "https://h/a", "https://h/c"});
    auto empty = dir / "e.warc";
    { warc::WarcWriter w(empty, warc::Compression::none); }
    CHECK(extract_uris(empty).empty());
}

TEST_CASE("crawl defaults and empty input")
{
    CHECK(CrawlConfig{}.workers == 16);
    auto t = baseline_crawl({});
    CHECK(t.uris() == 0);
    CHECK(t.total_ms < 50);
    CHECK_THROWS(baseline_crawl({}, CrawlConfig{0}));
}

TEST_CASE("serial crawl of delayed fixture URIs")
{
    fixture::PortalSpec spec;
    spec.repos = {{"r", 3, true}};
    spec.delay_ms = 40;
    auto portal = fixture::Portal::serve(spec);
    auto files = portal->expected_inventory(portal->repo_url("r"))->at(std::string(fixture::kFilesCategory));
    portal->reset_stats();
    CrawlConfig c;
    c.workers = 1;
    auto t = baseline_crawl(files, c);
    REQUIRE(t.uris() == 3);
    std::int64_t max_ms = 0;
    for (const auto& o : t.outcomes) {
        CHECK(o.status == 200);
        CHECK(o.bytes > 0);
        max_ms = std::max(max_ms, o.ms);
    }
    CHECK(t.total_ms >= 3 * 40);
    CHECK(t.total_ms >= max_ms);
    auto stats = portal->stats();
    CHECK(stats.hits == 3);
    CHECK(stats.max_concurrency == 1);
    CHECK(CrawlTiming::from_json(t.to_json()).outcomes.size() == 3);
}

TEST_CASE("parallel crawl stays within the worker bound and records failures")
{
    fixture::PortalSpec spec;
    spec.repos = {{"r", 20, true}};
    spec.delay_ms = 30;
    auto portal = fixture::Portal::serve(spec);
    auto files = portal->expected_inventory(portal->repo_url("r"))->at(std::string(fixture::kFilesCategory));
    files.push_back("http://127.0.0.1:1/nothing");
    files.push_back(portal->base_url() + "/missing");
    portal->reset_stats();
    CrawlConfig c;
    c.workers = 4;
    c.timeout_ms = 2000;
    auto t = baseline_crawl(files, c);
    REQUIRE(t.uris() == 22);
    CHECK(t.outcomes[20].status == 0);
    CHECK_FALSE(t.outcomes[20].error.empty());
    CHECK(t.outcomes[21].status == 404);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(t.outcomes[i].uri == files[i]);
        CHECK(t.outcomes[i].status == 200);
    }
    CHECK(portal->stats().max_concurrency <= 4);
    CHECK(portal->stats().hits == 21);
}

TEST_CASE("overhead arithmetic")
{
    auto r = overhead_report({{"a", 30000, 10000}, {"b", 40000, 20000}});
    CHECK(r.resources[0].delta_ms() == 20000);
    CHECK(r.resources[1].delta_ms() == 20000);
    CHECK(r.mean_delta_ms == 20000.0);
    REQUIRE(r.slowdown);
    CHECK(*r.slowdown == doctest::Approx(7.0 / 3.0));
    CHECK(r.to_csv() == "resource_url,tracer_ms,baseline_ms,delta_ms\na,30000,10000,20000\nb,40000,20000,20000\n");

    auto same = overhead_report({{"a", 500, 500}, {"b", 700, 700}});
    CHECK(same.max_delta_ms == 0);
    CHECK(same.min_delta_ms == 0);
    CHECK(*same.slowdown == 1.0);
    CHECK_FALSE(overhead_report({{"a", 5, 0}}).slowdown);
    CHECK_THROWS_AS(overhead_report(std::vector<capture::CaptureResult>(2), std::vector<CrawlTiming>(1)),
                    LengthMismatch);
}
