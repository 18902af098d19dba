#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracer/capture/orchestrator.hpp"
#include "tracer/util/json.hpp"

namespace tracer::bench {

class LengthMismatch : public Error {
  public:
    using Error::Error;
};

// Distinct target URIs of all response records, in file order.
std::vector<std::string> extract_uris(const std::filesystem::path& warc);

inline constexpr int kDefaultCrawlWorkers = 16;
inline constexpr int kMaxRedirects = 5;

struct CrawlConfig {
    int workers = kDefaultCrawlWorkers;
    int timeout_ms = 30000;
    std::string user_agent = driver::SessionConfig{}.user_agent;
};

struct CrawlOutcome {
    std::string uri;
    // 0 when no response arrived.
    int status = 0;
    std::uint64_t bytes = 0;
    std::int64_t ms = 0;
    int redirects = 0;
    std::string error;
};

struct CrawlTiming {
    // Resource whose URIs were crawled, when known.
    std::string resource_url;
    int workers = 0;
    std::int64_t total_ms = 0;
    std::vector<CrawlOutcome> outcomes;

    std::size_t uris() const { return outcomes.size(); }
    Json to_json() const;
    static CrawlTiming from_json(const Json& j);
};

// One plain GET per URI with bounded concurrency. Failures land in outcomes.
CrawlTiming baseline_crawl(const std::vector<std::string>& uris, const CrawlConfig& config = {});

struct ResourceTiming {
    std::string resource_url;
    std::int64_t tracer_ms = 0;
    std::int64_t baseline_ms = 0;
    std::int64_t delta_ms() const { return tracer_ms - baseline_ms; }
};

struct OverheadReport {
    std::vector<ResourceTiming> resources;
    double mean_delta_ms = 0;
    std::int64_t min_delta_ms = 0;
    std::int64_t max_delta_ms = 0;
    // Sum of tracer totals over sum of baseline totals; unset when the
    // baseline sum is zero.
    std::optional<double> slowdown;

    Json to_json() const;
    // resource_url,tracer_ms,baseline_ms,delta_ms
    std::string to_csv() const;
};

OverheadReport overhead_report(std::vector<ResourceTiming> timings);
OverheadReport overhead_report(const std::vector<capture::CaptureResult>& tracer,
                               const std::vector<CrawlTiming>& baseline);

} // namespace tracer::bench
