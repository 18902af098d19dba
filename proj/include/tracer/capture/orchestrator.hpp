#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracer/driver/session.hpp"
#include "tracer/repo/repository.hpp"
#include "tracer/trace/plan.hpp"
#include "tracer/trace/trace.hpp"
#include "tracer/warc/writer.hpp"

namespace tracer::capture {

class TraceMismatch : public Error {
  public:
    using Error::Error;
};

// Driver or proxy could not be started.
class EnvironmentError : public Error {
  public:
    using Error::Error;
};

enum class CaptureStatus { ok, partial, failed };

std::string_view to_string(CaptureStatus s);

struct CaptureConfig {
    std::filesystem::path out_dir = "captures";
    driver::BackendKind backend = driver::BackendKind::mock;
    std::string webdriver_endpoint;
    std::optional<driver::PageScript> page_script;
    std::string user_agent = driver::SessionConfig{}.user_agent;
    warc::Compression compression = warc::Compression::gzip_per_record;
    int page_load_timeout_ms = driver::kPageLoadTimeoutMs;
    std::chrono::milliseconds drain_timeout{30000};
    bool verify_upstream = false;
    // One retry for network-classified failures and missing elements.
    bool retry = true;
};

struct CaptureError {
    std::string step;
    std::optional<std::size_t> action_index;
    std::string kind;
    std::string message;
    bool retried = false;
};

struct CaptureResult {
    std::string capture_id;
    std::string target_url;
    std::string trace_id;
    std::optional<int> trace_version;
    std::optional<std::filesystem::path> warc_path;
    std::optional<std::filesystem::path> cdxj_path;
    std::map<std::string, std::vector<std::string>> inventory;
    std::int64_t total_ms = 0;
    std::vector<driver::StepOutcome> steps;
    CaptureStatus status = CaptureStatus::failed;
    std::vector<CaptureError> errors;
    std::size_t records_written = 0;
    std::size_t duplicates_skipped = 0;
    std::size_t exchange_errors = 0;

    Json to_json() const;
};

struct PlanRun {
    bool failed = false;
    bool skipped = false;
    std::vector<CaptureError> errors;
};

// Executes every step with the retry rule; stops at the first fatal error.
PlanRun run_plan(driver::DriverSession& session, const trace::ActionPlan& plan, bool retry);

// Classifies an exception for error reports.
std::string error_kind(const std::exception& e);

// <slug>-<first 8 hex digits of sha1(url)>
std::string capture_id_for(const std::string& url);

// Throws TraceMismatch (nothing started) or EnvironmentError.
CaptureResult capture(const std::string& url, const trace::Trace& trace, const CaptureConfig& config,
                      std::optional<int> trace_version = std::nullopt);

struct ResolvedTrace {
    trace::Trace trace;
    std::optional<int> version;
};

// Chooses the trace for a URL.
class TraceSource {
  public:
    virtual ~TraceSource() = default;
    virtual std::optional<ResolvedTrace> best_for(const std::string& url) const = 0;
};

// Backed by a synced repository cache.
class RepositoryTraceSource : public TraceSource {
  public:
    explicit RepositoryTraceSource(std::filesystem::path cache_dir) : cache_dir_(std::move(cache_dir)) {}
    std::optional<ResolvedTrace> best_for(const std::string& url) const override;

  private:
    std::filesystem::path cache_dir_;
};

// Fixed list of traces; most specific matching pattern wins.
class ListTraceSource : public TraceSource {
  public:
    explicit ListTraceSource(std::vector<trace::Trace> traces) : traces_(std::move(traces)) {}
    std::optional<ResolvedTrace> best_for(const std::string& url) const override;

  private:
    std::vector<trace::Trace> traces_;
};

struct BatchConfig {
    CaptureConfig capture;
    int workers = 1;
};

struct BatchStats {
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
};

// Results in input order; per-URL failures are reported inside results.
std::vector<CaptureResult> capture_batch(const std::vector<std::string>& urls, const TraceSource& traces,
                                         const BatchConfig& config, BatchStats* stats = nullptr);

} // namespace tracer::capture
