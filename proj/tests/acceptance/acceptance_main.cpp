// One line per criterion: PASS/FAIL/SKIP, elapsed, limit, detail.
// Exit status is nonzero when any criterion fails.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "digest_oracle.hpp"
#include "rig.hpp"
#include "temp_dir.hpp"
#include "threshold_oracle.hpp"
#include "tracer/bench/bench.hpp"
#include "tracer/capture/orchestrator.hpp"
#include "tracer/quality/quality.hpp"
#include "tracer/trace/plan.hpp"
#include "tracer/util/digest.hpp"
#include "tracer/util/json.hpp"
#include "tracer/warc/cdxj.hpp"
#include "tracer/warc/reader.hpp"
#include "tracer/warc/writer.hpp"

using namespace tracer;
using tracer::testing::TempDir;

namespace {

// Wall-clock limits, in milliseconds.
constexpr std::int64_t kTraceLimitMs = 1000;
constexpr std::int64_t kReuseLimitMs = 120000;
constexpr std::int64_t kWarcLimitMs = 10000;
constexpr std::int64_t kProxyLimitMs = 60000;
constexpr std::int64_t kRepeatClickLimitMs = 30000;
constexpr std::int64_t kThresholdLimitMs = 5000;
constexpr std::int64_t kOverheadLimitMs = 120000;
constexpr std::int64_t kEquivalenceLimitMs = 300000;

constexpr int kProxyResources = 50;
constexpr int kIdleQuietMs = 500;
constexpr int kBaselineWorkers = 16;
constexpr int kFixtureDelayMs = 50;

const std::filesystem::path kCorpus = TRACER_TEST_CORPUS_DIR;

struct Skip {
    std::string why;
};

// Collects failed checks; first few end up in the detail column.
class Checks {
  public:
    void expect(bool ok, const std::string& what)
    {
        ++total_;
        if (!ok) {
            failures_.push_back(what);
        }
    }
    bool ok() const { return failures_.empty(); }
    std::string summary() const
    {
        if (ok()) {
            return std::to_string(total_) + " checks";
        }
        std::string s = std::to_string(failures_.size()) + "/" + std::to_string(total_) + " failed: ";
        for (std::size_t i = 0; i < failures_.size() && i < 3; ++i) {
            s += (i ? "; " : "") + failures_[i];
        }
        return s;
    }
    std::string note;

  private:
    std::size_t total_ = 0;
    std::vector<std::string> failures_;
};

std::string seconds(std::int64_t ms)
{
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(2);
    o << static_cast<double>(ms) / 1000.0 << "s";
    return o.str();
}

struct Criterion {
    std::string name;
    std::int64_t limit_ms;
    std::function<void(Checks&)> run;
};

// ---------------------------------------------------------------------------

void trace_conformance(Checks& c)
{
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(kCorpus / "traces")) {
        files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    c.expect(files.size() == 20, "corpus has " + std::to_string(files.size()) + " files");
    for (const auto& f : files) {
        auto name = f.filename().string();
        try {
            auto t = trace::parse_trace(read_file(f));
            auto bytes = trace::serialize_trace(t);
            auto again = trace::parse_trace(bytes);
            c.expect(again == t, name + " round trip");
            c.expect(trace::serialize_trace(again) == bytes, name + " canonical bytes");
            c.expect(trace::serialize_trace(t) == bytes, name + " determinism");
        } catch (const std::exception& e) {
            c.expect(false, name + ": " + e.what());
        }
    }
    auto golden = trace::parse_trace(read_file(kCorpus / "golden" / "three-kinds.input.json"));
    c.expect(trace::serialize_trace(golden) == read_file(kCorpus / "golden" / "three-kinds.canonical.json"),
             "golden bytes");
}

// ---------------------------------------------------------------------------

void class_reuse(Checks& c)
{
    fixture::PortalSpec spec;
    for (int i = 0; i < 25; ++i) {
        spec.repos.push_back({"repo-" + std::to_string(i), i % 21, i % 2 == 0});
        spec.decks.push_back({"deck-" + std::to_string(i), 1 + (i * 29) / 24, i % 6,
                              i % 2 == 0 ? fixture::Pagination::href : fixture::Pagination::script});
    }
    auto portal = fixture::Portal::serve(spec);
    std::vector<std::string> urls;
    for (const auto& r : spec.repos) {
        urls.push_back(portal->repo_url(r.name));
    }
    for (const auto& d : spec.decks) {
        urls.push_back(portal->deck_url(d.name));
    }

    TempDir out("tracer-acceptance");
    capture::ListTraceSource source({fixture::repo_trace("http://127.0.0.1:*", 50),
                                     fixture::deck_trace("http://127.0.0.1:*", 50)});
    capture::BatchConfig bc;
    bc.capture.out_dir = out.path();
    bc.capture.page_script = portal->page_script();
    bc.workers = 8;
    auto results = capture::capture_batch(urls, source, bc);
    c.expect(results.size() == urls.size(), "result count");

    std::size_t uris = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        auto& url = urls[i];
        if (r.status == capture::CaptureStatus::failed || !r.warc_path) {
            c.expect(false, url + " failed");
            continue;
        }
        auto expected = quality::make_inventory(url, *portal->expected_inventory(url));
        auto q = quality::compare(expected, quality::warc_inventory(*r.warc_path));
        uris += q.overall.expected;
        c.expect(q.overall.ratio() == 1.0, url + " ratio " + std::to_string(q.overall.ratio()));
    }
    c.note = std::to_string(results.size()) + " pages, " + std::to_string(uris) + " expected URIs";
}

// ---------------------------------------------------------------------------

std::string http_response(const std::string& body)
{
    return "HTTP/1.1 200 OK\r\nContent-Type: application/octet-stream\r\nContent-Length: " +
           std::to_string(body.size()) + "\r\n\r\n" + body;
}

void flip_byte(const std::filesystem::path& p, std::uint64_t at)
{
    auto bytes = read_file(p);
    bytes[at] = static_cast<char>(bytes[at] ^ 0x20);
    write_file(p, bytes);
}

void warc_conformance(Checks& c)
{
    TempDir dir("tracer-acceptance");
    auto oracle = testing::oracle_payloads();
    for (const auto& o : oracle) {
        c.expect(warc::payload_digest(o.payload) == o.sha1, std::string("sha1 ") + o.sha1);
        c.expect(sha256_hex(o.payload) == o.sha256, std::string("sha256 ") + o.sha256);
    }

    auto plain = dir / "plain.warc";
    std::vector<warc::WriteResult> spots;
    {
        warc::WarcWriter w(plain, warc::Compression::none);
        w.write_record(warc::make_warcinfo("plain.warc", {{"software", "acceptance"}}));
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            auto uri = "https://h.example/p/" + std::to_string(i);
            auto res = warc::make_response(uri, http_response(oracle[i].payload));
            auto req = warc::make_request(uri, "GET /p/" + std::to_string(i) + " HTTP/1.1\r\nHost: h.example\r\n\r\n");
            req.concurrent_to = res.record_id;
            spots.push_back(w.write_record(res));
            w.write_record(req);
        }
    }
    auto records = warc::read_records(plain);
    std::string rebuilt;
    for (const auto& r : records) {
        rebuilt += warc::serialize_record(r.record);
    }
    auto pristine = read_file(plain);
    c.expect(rebuilt == pristine, "plain round trip");
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        c.expect(records.at(1 + 2 * i).record.payload_digest == oracle[i].sha1, "record digest " + std::to_string(i));
    }

    // One flipped byte inside each non-empty payload.
    for (std::size_t i = 0; i < oracle.size(); ++i) {
        if (oracle[i].payload.empty()) {
            continue;
        }
        auto at = spots[i].offset + spots[i].length - 4 - oracle[i].payload.size() / 2 - 1;
        write_file(plain, pristine);
        flip_byte(plain, at);
        auto scan = warc::scan_records(plain);
        c.expect(scan.errors.size() == 1 && scan.errors[0].offset() == spots[i].offset,
                 "corruption in record " + std::to_string(i));
    }
    write_file(plain, pristine);

    auto gz = dir / "g.warc.gz";
    {
        warc::WarcWriter w(gz, warc::Compression::gzip_per_record);
        w.write_record(warc::make_warcinfo("g.warc.gz", {{"software", "acceptance"}}));
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            w.write_record(warc::make_response("https://h.example/g/" + std::to_string(i),
                                               http_response(oracle[i].payload)));
        }
    }
    for (const auto& path : {plain, gz}) {
        auto lines = warc::build_cdxj(path);
        c.expect(lines.size() == oracle.size(), "cdxj line count");
        for (const auto& l : lines) {
            auto r = warc::read_record_at(path, l.offset, l.length);
            c.expect(r.record.target_uri == l.url && r.record.type == warc::RecordType::response,
                     "cdxj offset " + l.url);
        }
    }
}

// ---------------------------------------------------------------------------

void proxy_completeness(Checks& c)
{
    TempDir dir("tracer-acceptance");
    fixture::PortalSpec spec;
    spec.tls = true;
    auto portal = fixture::Portal::serve(spec);
    proxy::ProxyConfig cfg;
    cfg.warc_output_path = dir / "proxy.warc.gz";
    auto proxy = proxy::CaptureProxy::start(cfg);
    auto pem = proxy->ca_certificate_pem();

    auto fetch = [&](int n) {
        httplib::SSLClient client("127.0.0.1", portal->port());
        client.set_proxy("127.0.0.1", proxy->port());
        client.load_ca_cert_store(pem.data(), pem.size());
        auto res = client.Get("/resource/" + std::to_string(n));
        return res && res->status == 200;
    };
    for (int n = 0; n < kProxyResources; ++n) {
        c.expect(fetch(n), "fetch " + std::to_string(n));
    }
    c.expect(fetch(0), "refetch");

    // Quiet-period boundary, evaluated at explicit clock readings.
    auto last = proxy->last_activity_ms();
    c.expect(!proxy->idle_state(kIdleQuietMs, last + kIdleQuietMs - 1).idle, "busy at quiet-1");
    c.expect(proxy->idle_state(kIdleQuietMs, last + kIdleQuietMs).idle, "idle at quiet");

    auto log = proxy->stop();
    c.expect(log.count(proxy::Disposition::duplicate_skipped) == 1, "one duplicate skipped");

    auto records = warc::read_records(*log.warc_path);
    std::map<std::string, std::string> response_uri;
    std::set<std::string> uris;
    int warcinfo = 0;
    int requests = 0;
    for (const auto& r : records) {
        if (r.record.type == warc::RecordType::warcinfo) {
            ++warcinfo;
        } else if (r.record.type == warc::RecordType::response) {
            response_uri[r.record.record_id] = r.record.target_uri.value_or("");
            uris.insert(r.record.target_uri.value_or(""));
        }
    }
    for (const auto& r : records) {
        if (r.record.type == warc::RecordType::request) {
            ++requests;
            auto it = response_uri.find(r.record.concurrent_to.value_or(""));
            c.expect(it != response_uri.end() && it->second == r.record.target_uri,
                     "request linked " + r.record.target_uri.value_or(""));
        }
    }
    c.expect(response_uri.size() == kProxyResources, "responses " + std::to_string(response_uri.size()));
    c.expect(uris.size() == kProxyResources, "distinct response URIs " + std::to_string(uris.size()));
    c.expect(requests == kProxyResources, "requests " + std::to_string(requests));
    c.expect(warcinfo == 1, "warcinfo " + std::to_string(warcinfo));
    c.expect(records.front().record.type == warc::RecordType::warcinfo, "warcinfo first");
    c.note = std::to_string(records.size()) + " records";
}

// ---------------------------------------------------------------------------

int loop_clicks(const driver::SessionReport& r)
{
    for (const auto& s : r.steps) {
        if (s.op == "loop") {
            return s.clicks;
        }
    }
    return -1;
}

void repeat_click(Checks& c)
{
    fixture::PortalSpec spec;
    spec.decks = {{"ten-href", 10, 2, fixture::Pagination::href}, {"ten-script", 10, 2, fixture::Pagination::script}};
    testing::Rig rig(spec);
    for (const auto& d : spec.decks) {
        auto url = rig.portal->deck_url(d.name);
        for (std::optional<int> max : {std::optional<int>{}, std::optional<int>{5}}) {
            auto t = fixture::deck_trace("http://127.0.0.1:*", 5);
            t.actions.at(2).max_iterations = max;
            auto plan = trace::compile(t);
            auto session = rig.open(url);
            for (const auto& step : plan.steps) {
                session->execute_step(step);
            }
            auto clicks = loop_clicks(session->close());
            auto oracle = testing::simulate_repeat_click(rig.portal->page_script(), url + "/slide/1", "next",
                                                         max.value_or(1000));
            int want = max ? 5 : 9;
            auto label = d.name + (max ? " max=5" : "");
            c.expect(oracle == want, label + " oracle " + std::to_string(oracle));
            c.expect(clicks == want, label + " clicks " + std::to_string(clicks));
        }
    }
}

// ---------------------------------------------------------------------------

std::vector<std::string> cells(const quality::ThresholdRow& row)
{
    std::vector<std::string> out;
    for (std::size_t i = 0; i < quality::kThresholds.size(); ++i) {
        out.push_back(row.cell_text(i));
    }
    return out;
}

void threshold_oracle(Checks& c)
{
    std::mt19937 rng(5150);
    const std::vector<std::string> categories{"files", "notes", "slides", "zip"};
    auto random_fraction = [&] {
        long e = static_cast<long>(rng() % 30);
        long k = e == 0 ? 0 : static_cast<long>(rng() % static_cast<unsigned>(e + 1));
        return std::pair<long, long>{k, e};
    };

    std::vector<quality::ResourceQuality> qs;
    std::map<std::string, std::vector<std::pair<long, long>>> per_category;
    std::vector<std::pair<long, long>> overall;
    for (int i = 0; i < 200; ++i) {
        quality::ResourceQuality q;
        q.resource_url = "https://h.example/r/" + std::to_string(i);
        long tk = 0, te = 0;
        for (const auto& cat : categories) {
            if (rng() % 3 == 0) {
                continue;
            }
            auto [k, e] = random_fraction();
            q.categories[cat] = {static_cast<std::size_t>(e), static_cast<std::size_t>(k)};
            per_category[cat].emplace_back(k, e);
            tk += k;
            te += e;
        }
        q.overall = {static_cast<std::size_t>(te), static_cast<std::size_t>(tk)};
        overall.emplace_back(tk, te);
        qs.push_back(q);
    }
    auto table = quality::build_table(qs);
    c.expect(table.rows.size() == 1 + per_category.size(), "row count");
    for (const auto& row : table.rows) {
        const auto& fr = row.label == quality::kOverall ? overall : per_category[row.label];
        c.expect(row.resources == fr.size(), row.label + " resources");
        c.expect(cells(row) == testing::oracle_row(fr), row.label + " cells");
    }

    for (int round = 0; round < 1000; ++round) {
        std::vector<quality::ResourceQuality> list;
        auto n = 1 + rng() % 50;
        for (unsigned i = 0; i < n; ++i) {
            auto [k, e] = random_fraction();
            quality::ResourceQuality q;
            q.overall = {static_cast<std::size_t>(e), static_cast<std::size_t>(k)};
            list.push_back(q);
        }
        auto row = quality::aggregate(list, std::string(quality::kOverall));
        // Column 0 counts zero-capture resources; the descending run starts at 10.
        bool monotone = true;
        for (std::size_t i = 2; i < row.counts.size(); ++i) {
            monotone = monotone && row.counts[i] <= row.counts[i - 1] && row.hundredths[i] <= row.hundredths[i - 1];
        }
        c.expect(monotone, "monotone round " + std::to_string(round));
    }
}

// ---------------------------------------------------------------------------

int portal_max_concurrency(const fixture::Portal& portal)
{
    httplib::Client client("127.0.0.1", portal.port());
    auto res = client.Get("/__stats");
    if (!res || res->status != 200) {
        return -1;
    }
    return Json::parse(res->body).at("max_concurrency").get<int>();
}

void overhead(Checks& c)
{
    TempDir out("tracer-acceptance");
    fixture::PortalSpec spec;
    spec.delay_ms = kFixtureDelayMs;
    spec.repos = {{"r4", 4, true}, {"r12", 12, true}, {"r20", 20, false}};
    spec.decks = {{"d6", 6, 2, fixture::Pagination::href}, {"d15", 15, 4, fixture::Pagination::script}};
    auto portal = fixture::Portal::serve(spec);

    capture::CaptureConfig cc;
    cc.out_dir = out.path();
    cc.page_script = portal->page_script();
    std::vector<capture::CaptureResult> captures;
    for (const auto& r : spec.repos) {
        captures.push_back(capture::capture(portal->repo_url(r.name), fixture::repo_trace(), cc));
    }
    for (const auto& d : spec.decks) {
        captures.push_back(capture::capture(portal->deck_url(d.name), fixture::deck_trace(), cc));
    }

    bench::CrawlConfig crawl;
    crawl.workers = kBaselineWorkers;
    std::vector<bench::CrawlTiming> baselines;
    std::vector<std::string> all_uris;
    for (const auto& r : captures) {
        c.expect(r.status != capture::CaptureStatus::failed && r.warc_path, r.target_url + " captured");
        if (!r.warc_path) {
            baselines.push_back({});
            continue;
        }
        auto uris = bench::extract_uris(*r.warc_path);
        all_uris.insert(all_uris.end(), uris.begin(), uris.end());
        portal->reset_stats();
        auto timing = bench::baseline_crawl(uris, crawl);
        timing.resource_url = r.target_url;
        for (const auto& o : timing.outcomes) {
            c.expect(o.status == 200, o.uri + " baseline status " + std::to_string(o.status));
        }
        auto peak = portal_max_concurrency(*portal);
        c.expect(peak >= 1 && peak <= kBaselineWorkers, r.target_url + " concurrency " + std::to_string(peak));
        baselines.push_back(timing);
    }

    // All URIs at once, so the worker bound is actually exercised.
    portal->reset_stats();
    auto combined = bench::baseline_crawl(all_uris, crawl);
    auto peak = portal_max_concurrency(*portal);
    c.expect(peak >= 1 && peak <= kBaselineWorkers, "combined concurrency " + std::to_string(peak));
    c.expect(combined.uris() == all_uris.size(), "combined uri count");

    auto report = bench::overhead_report(captures, baselines);
    std::int64_t tracer_sum = 0, baseline_sum = 0;
    for (const auto& t : report.resources) {
        c.expect(t.delta_ms() > 0, t.resource_url + " delta " + std::to_string(t.delta_ms()));
        tracer_sum += t.tracer_ms;
        baseline_sum += t.baseline_ms;
    }
    c.expect(tracer_sum > baseline_sum, "tracer total > baseline total");
    std::ostringstream note;
    note << "tracer " << tracer_sum << "ms, baseline " << baseline_sum << "ms, " << all_uris.size()
         << " URIs, combined peak " << peak;
    c.note = note.str();
}

// ---------------------------------------------------------------------------

void mock_real_equivalence(Checks& c)
{
    const char* endpoint = std::getenv("TRACER_WEBDRIVER_ENDPOINT");
    if (endpoint == nullptr || *endpoint == '\0') {
        throw Skip{"TRACER_WEBDRIVER_ENDPOINT not set"};
    }
    TempDir out("tracer-acceptance");
    fixture::PortalSpec spec;
    spec.repos = {{"r3", 3, true}, {"r7", 7, false}};
    spec.decks = {{"d4", 4, 1, fixture::Pagination::href}, {"d6", 6, 2, fixture::Pagination::script},
                  {"d1", 1, 0, fixture::Pagination::href}};
    auto portal = fixture::Portal::serve(spec);
    std::vector<std::pair<std::string, trace::Trace>> pages;
    for (const auto& r : spec.repos) {
        pages.emplace_back(portal->repo_url(r.name), fixture::repo_trace());
    }
    for (const auto& d : spec.decks) {
        pages.emplace_back(portal->deck_url(d.name), fixture::deck_trace());
    }

    capture::CaptureConfig mock;
    mock.out_dir = out / "mock";
    mock.page_script = portal->page_script();
    capture::CaptureConfig real;
    real.out_dir = out / "webdriver";
    real.backend = driver::BackendKind::webdriver;
    real.webdriver_endpoint = endpoint;
    for (const auto& [url, t] : pages) {
        auto a = capture::capture(url, t, mock);
        auto b = capture::capture(url, t, real);
        c.expect(b.status != capture::CaptureStatus::failed, url + " webdriver capture");
        auto ia = quality::make_inventory(url, a.inventory);
        auto ib = quality::make_inventory(url, b.inventory);
        c.expect(ia.categories == ib.categories, url + " inventories differ");
    }
}

} // namespace

int main()
{
    const std::vector<Criterion> criteria{
        {"trace-conformance", kTraceLimitMs, trace_conformance},
        {"class-level-reuse", kReuseLimitMs, class_reuse},
        {"warc-conformance", kWarcLimitMs, warc_conformance},
        {"proxy-completeness", kProxyLimitMs, proxy_completeness},
        {"repeat-click", kRepeatClickLimitMs, repeat_click},
        {"threshold-oracle", kThresholdLimitMs, threshold_oracle},
        {"overhead-harness", kOverheadLimitMs, overhead},
        {"mock-real-equivalence", kEquivalenceLimitMs, mock_real_equivalence},
    };
    int failed = 0;
    for (const auto& crit : criteria) {
        Checks checks;
        std::string verdict;
        std::string detail;
        auto start = std::chrono::steady_clock::now();
        try {
            crit.run(checks);
        } catch (const Skip& s) {
            verdict = "SKIP";
            detail = s.why;
        } catch (const std::exception& e) {
            checks.expect(false, std::string("exception: ") + e.what());
        }
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                      .count();
        if (verdict.empty()) {
            bool in_time = ms < crit.limit_ms;
            verdict = checks.ok() && in_time ? "PASS" : "FAIL";
            detail = checks.summary();
            if (!in_time) {
                detail += "; over time limit";
            }
            if (!checks.note.empty()) {
                detail += "; " + checks.note;
            }
        }
        if (verdict == "FAIL") {
            ++failed;
        }
        std::cout << verdict << "  " << crit.name << "  " << seconds(ms) << " (limit " << seconds(crit.limit_ms)
                  << ")  " << detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
