#include "tracer/bench/bench.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"
#include "tracer/warc/reader.hpp"

namespace tracer::bench {

std::vector<std::string> extract_uris(const std::filesystem::path& warc)
{
    std::vector<std::string> out;
    std::set<std::string> seen;
    warc::WarcReader reader(warc);
    while (auto rr = reader.next()) {
        const auto& r = rr->record;
        if (r.type == warc::RecordType::response && r.target_uri && seen.insert(*r.target_uri).second) {
            out.push_back(*r.target_uri);
        }
    }
    return out;
}

Json CrawlTiming::to_json() const
{
    Json list = Json::array();
    for (const auto& o : outcomes) {
        Json j = Json::object();
        j["uri"] = o.uri;
        j["status"] = o.status;
        j["bytes"] = o.bytes;
        j["ms"] = o.ms;
        j["redirects"] = o.redirects;
        if (!o.error.empty()) {
            j["error"] = o.error;
        }
        list.push_back(std::move(j));
    }
    Json j = Json::object();
    j["resource_url"] = resource_url;
    j["uris"] = outcomes.size();
    j["workers"] = workers;
    j["total_ms"] = total_ms;
    j["outcomes"] = std::move(list);
    return j;
}

CrawlTiming CrawlTiming::from_json(const Json& j)
{
    CrawlTiming t;
    try {
        t.resource_url = j.value("resource_url", "");
        t.workers = j.at("workers").get<int>();
        t.total_ms = j.at("total_ms").get<std::int64_t>();
        for (const auto& o : j.at("outcomes")) {
            CrawlOutcome c;
            c.uri = o.at("uri").get<std::string>();
            c.status = o.at("status").get<int>();
            c.bytes = o.at("bytes").get<std::uint64_t>();
            c.ms = o.at("ms").get<std::int64_t>();
            c.redirects = o.value("redirects", 0);
            c.error = o.value("error", "");
            t.outcomes.push_back(std::move(c));
        }
    } catch (const Json::exception& e) {
        throw Error(std::string("crawl timing: ") + e.what());
    }
    return t;
}

namespace {

CrawlOutcome fetch(const std::string& uri, const CrawlConfig& config)
{
    CrawlOutcome o;
    o.uri = uri;
    auto started = monotonic_ms();
    std::string current = uri;
    try {
        for (;;) {
            auto u = parse_url(current);
            httplib::Client client(u.scheme + "://" + u.host_port());
            client.enable_server_certificate_verification(false);
            client.set_follow_location(false);
            client.set_tcp_nodelay(true);
            auto secs = config.timeout_ms / 1000;
            auto usecs = (config.timeout_ms % 1000) * 1000;
            client.set_connection_timeout(secs, usecs);
            client.set_read_timeout(secs, usecs);
            client.set_write_timeout(secs, usecs);
            httplib::Headers headers{
                {"User-Agent", config.user_agent},
                {"Accept", "text/html,application/xhtml+xml,application/xml;q=0.9,image/avif,image/webp,*/*;q=0.8"},
                {"Accept-Language", "en-US,en;q=0.9"},
            };
            auto res = client.Get(u.request_target(), headers);
            if (!res) {
                o.error = httplib::to_string(res.error());
                break;
            }
            o.status = res->status;
            o.bytes = res->body.size();
            auto location = res->get_header_value("Location");
            if (res->status >= 300 && res->status < 400 && !location.empty()) {
                if (o.redirects == kMaxRedirects) {
                    o.error = "too many redirects";
                    break;
                }
                ++o.redirects;
                current = resolve_reference(current, location);
                continue;
            }
            break;
        }
    } catch (const std::exception& e) {
        o.error = e.what();
    }
    o.ms = monotonic_ms() - started;
    return o;
}

} // namespace

CrawlTiming baseline_crawl(const std::vector<std::string>& uris, const CrawlConfig& config)
{
    if (config.workers < 1) {
        throw Error("workers must be at least 1");
    }
    CrawlTiming t;
    t.workers = config.workers;
    t.outcomes.resize(uris.size());
    auto started = monotonic_ms();
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (auto i = next++; i < uris.size(); i = next++) {
            t.outcomes[i] = fetch(uris[i], config);
        }
    };
    std::vector<std::thread> pool;
    auto n = std::min<std::size_t>(static_cast<std::size_t>(config.workers), uris.size());
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    t.total_ms = monotonic_ms() - started;
    return t;
}

Json OverheadReport::to_json() const
{
    Json list = Json::array();
    for (const auto& r : resources) {
        Json j = Json::object();
        j["resource_url"] = r.resource_url;
        j["tracer_ms"] = r.tracer_ms;
        j["baseline_ms"] = r.baseline_ms;
        j["delta_ms"] = r.delta_ms();
        list.push_back(std::move(j));
    }
    Json j = Json::object();
    j["resources"] = std::move(list);
    j["mean_delta_ms"] = mean_delta_ms;
    j["min_delta_ms"] = min_delta_ms;
    j["max_delta_ms"] = max_delta_ms;
    j["slowdown"] = slowdown ? Json(*slowdown) : Json(nullptr);
    return j;
}

std::string OverheadReport::to_csv() const
{
    std::string out = "resource_url,tracer_ms,baseline_ms,delta_ms\n";
    for (const auto& r : resources) {
        std::string url = r.resource_url;
        if (url.find_first_of(",\"\n") != std::string::npos) {
            std::string q = "\"";
            for (char c : url) {
                q += c == '"' ? std::string("\"\"") : std::string(1, c);
            }
            url = q + "\"";
        }
        out += url + "," + std::to_string(r.tracer_ms) + "," + std::to_string(r.baseline_ms) + "," +
               std::to_string(r.delta_ms()) + "\n";
    }
    return out;
}

OverheadReport overhead_report(std::vector<ResourceTiming> timings)
{
    OverheadReport report;
    report.resources = std::move(timings);
    if (report.resources.empty()) {
        return report;
    }
    std::int64_t tracer_sum = 0;
    std::int64_t baseline_sum = 0;
    std::int64_t delta_sum = 0;
    report.min_delta_ms = report.resources.front().delta_ms();
    report.max_delta_ms = report.min_delta_ms;
    for (const auto& r : report.resources) {
        tracer_sum += r.tracer_ms;
        baseline_sum += r.baseline_ms;
        delta_sum += r.delta_ms();
        report.min_delta_ms = std::min(report.min_delta_ms, r.delta_ms());
        report.max_delta_ms = std::max(report.max_delta_ms, r.delta_ms());
    }
    report.mean_delta_ms = static_cast<double>(delta_sum) / static_cast<double>(report.resources.size());
    if (baseline_sum > 0) {
        report.slowdown = static_cast<double>(tracer_sum) / static_cast<double>(baseline_sum);
    }
    return report;
}

OverheadReport overhead_report(const std::vector<capture::CaptureResult>& tracer,
                               const std::vector<CrawlTiming>& baseline)
{
    if (tracer.size() != baseline.size()) {
        throw LengthMismatch(std::to_string(tracer.size()) + " captures vs " + std::to_string(baseline.size()) +
                             " crawls");
    }
    std::vector<ResourceTiming> timings;
    for (std::size_t i = 0; i < tracer.size(); ++i) {
        timings.push_back({tracer[i].target_url, tracer[i].total_ms, baseline[i].total_ms});
    }
    return overhead_report(std::move(timings));
}

} // namespace tracer::bench
