#include "tracer/capture/orchestrator.hpp"

#include <algorithm>
#include <cctype>
#include <thread>

#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/trace/plan.hpp"
#include "tracer/util/digest.hpp"
#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"
#include "tracer/warc/cdxj.hpp"

namespace tracer::capture {

namespace fs = std::filesystem;

std::string_view to_string(CaptureStatus s)
{
    switch (s) {
    case CaptureStatus::ok:
        return "ok";
    case CaptureStatus::partial:
        return "partial";
    case CaptureStatus::failed:
        return "failed";
    }
    return "failed";
}

Json CaptureResult::to_json() const
{
    Json j = Json::object();
    j["capture_id"] = capture_id;
    j["target_url"] = target_url;
    j["trace_id"] = trace_id;
    j["trace_version"] = trace_version ? Json(*trace_version) : Json(nullptr);
    j["status"] = to_string(status);
    j["warc_path"] = warc_path ? Json(warc_path->string()) : Json(nullptr);
    j["cdxj_path"] = cdxj_path ? Json(cdxj_path->string()) : Json(nullptr);
    Json inv = Json::object();
    for (const auto& [k, v] : inventory) {
        inv[k] = v;
    }
    j["inventory"] = std::move(inv);
    Json steps_json = Json::array();
    for (const auto& s : steps) {
        steps_json.push_back(s.to_json());
    }
    j["timings"] = {{"total_ms", total_ms}, {"per_step", std::move(steps_json)}};
    Json errs = Json::array();
    for (const auto& e : errors) {
        Json ej = Json::object();
        ej["step"] = e.step;
        ej["action_index"] = e.action_index ? Json(*e.action_index) : Json(nullptr);
        ej["kind"] = e.kind;
        ej["message"] = e.message;
        ej["retried"] = e.retried;
        errs.push_back(std::move(ej));
    }
    j["errors"] = std::move(errs);
    j["proxy"] = {{"records_written", records_written},
                  {"duplicates_skipped", duplicates_skipped},
                  {"exchange_errors", exchange_errors}};
    return j;
}

std::string capture_id_for(const std::string& url)
{
    std::string basis = url;
    if (auto parsed = try_parse_url(url)) {
        basis = parsed->host + parsed->path;
    }
    std::string slug;
    for (char c : basis) {
        if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
            slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!slug.empty() && slug.back() != '-') {
            slug += '-';
        }
        if (slug.size() >= 60) {
            break;
        }
    }
    while (!slug.empty() && slug.back() == '-') {
        slug.pop_back();
    }
    if (slug.empty()) {
        slug = "capture";
    }
    return slug + "-" + hex_encode(sha1_raw(url)).substr(0, 8);
}

namespace {

std::string kind_of(const std::exception& e)
{
    if (dynamic_cast<const driver::ElementNotFound*>(&e) != nullptr) {
        return "ElementNotFound";
    }
    if (dynamic_cast<const driver::StaleElement*>(&e) != nullptr) {
        return "StaleElement";
    }
    if (dynamic_cast<const driver::NavigationTimeout*>(&e) != nullptr) {
        return "NavigationTimeout";
    }
    if (dynamic_cast<const driver::NetworkError*>(&e) != nullptr) {
        return "NetworkError";
    }
    if (dynamic_cast<const driver::BackendError*>(&e) != nullptr) {
        return "BackendError";
    }
    if (dynamic_cast<const driver::DriverUnreachable*>(&e) != nullptr) {
        return "DriverUnreachable";
    }
    if (dynamic_cast<const TraceMismatch*>(&e) != nullptr) {
        return "TraceMismatch";
    }
    if (dynamic_cast<const EnvironmentError*>(&e) != nullptr) {
        return "EnvironmentError";
    }
    return "Error";
}

bool retryable(const std::exception& e)
{
    return dynamic_cast<const driver::NetworkError*>(&e) != nullptr ||
           dynamic_cast<const driver::NavigationTimeout*>(&e) != nullptr ||
           dynamic_cast<const driver::ElementNotFound*>(&e) != nullptr;
}

} // namespace

std::string error_kind(const std::exception& e)
{
    return kind_of(e);
}

PlanRun run_plan(driver::DriverSession& session, const trace::ActionPlan& plan, bool retry)
{
    PlanRun run;
    for (const auto& step : plan.steps) {
        std::string op(trace::op_name(step.op));
        for (int attempt = 0;; ++attempt) {
            try {
                auto outcome = session.execute_step(step);
                run.skipped = run.skipped || outcome.status == driver::StepStatus::skipped;
                break;
            } catch (const std::exception& e) {
                bool again = retry && attempt == 0 && retryable(e);
                run.errors.push_back({op, step.action_index, kind_of(e), e.what(), attempt > 0});
                if (!again) {
                    run.failed = true;
                    break;
                }
            }
        }
        if (run.failed) {
            break;
        }
    }
    return run;
}

CaptureResult capture(const std::string& url, const trace::Trace& t, const CaptureConfig& config,
                      std::optional<int> trace_version)
{
    if (!is_absolute_http_url(url)) {
        throw TraceMismatch("not an absolute http(s) URL: " + url);
    }
    if (!trace::match_url(t.url_pattern, url)) {
        throw TraceMismatch("trace " + t.id + " pattern " + t.url_pattern.pattern + " does not match " + url);
    }
    auto plan = trace::compile(t);
    auto started = monotonic_ms();

    CaptureResult result;
    result.capture_id = capture_id_for(url);
    result.target_url = url;
    result.trace_id = t.id;
    result.trace_version = trace_version;
    auto dir = config.out_dir / result.capture_id;
    auto warc_path = dir / (config.compression == warc::Compression::gzip_per_record ? "capture.warc.gz"
                                                                                        : "capture.warc");
    std::unique_ptr<proxy::CaptureProxy> proxy;
    try {
        fs::create_directories(dir);
        fs::remove(warc_path);
        proxy::ProxyConfig pc;
        pc.warc_output_path = warc_path;
        pc.compression = config.compression;
        pc.drain_timeout = config.drain_timeout;
        pc.verify_upstream = config.verify_upstream;
        proxy = proxy::CaptureProxy::start(std::move(pc));
    } catch (const std::exception& e) {
        throw EnvironmentError(std::string("capture proxy did not start: ") + e.what());
    }

    driver::SessionConfig sc;
    sc.backend = config.backend;
    sc.proxy_endpoint = proxy->endpoint();
    sc.user_agent = config.user_agent;
    sc.page_script = config.page_script;
    sc.proxy_ca_pem = proxy->ca_certificate_pem();
    sc.webdriver_endpoint = config.webdriver_endpoint;
    sc.target_url = url;
    sc.page_load_timeout_ms = config.page_load_timeout_ms;
    auto* p = proxy.get();
    sc.idle_probe = [p](int quiet) { return p->idle_state(quiet); };

    std::unique_ptr<driver::DriverSession> session;
    try {
        session = driver::open_session(std::move(sc));
    } catch (const std::exception& e) {
        proxy->stop();
        throw EnvironmentError(std::string("browser session did not open: ") + e.what());
    }

    auto run = run_plan(*session, plan, config.retry);
    result.errors = std::move(run.errors);

    auto report = session->close();
    session.reset();
    auto log = proxy->stop();
    proxy.reset();

    result.steps = report.steps;
    result.inventory = report.inventory_by_category();
    result.records_written = log.count(proxy::Disposition::recorded);
    result.duplicates_skipped = log.count(proxy::Disposition::duplicate_skipped);
    result.exchange_errors = log.count(proxy::Disposition::error);
    if (fs::exists(warc_path)) {
        result.warc_path = warc_path;
        auto cdxj = dir / "index.cdxj";
        warc::write_cdxj(cdxj, warc::build_cdxj(warc_path));
        result.cdxj_path = cdxj;
    }
    result.status = run.failed ? CaptureStatus::failed
                               : (run.skipped || !result.errors.empty() ? CaptureStatus::partial : CaptureStatus::ok);
    result.total_ms = monotonic_ms() - started;
    write_file(dir / "result.json", to_canonical_json(result.to_json()));
    return result;
}

std::optional<ResolvedTrace> RepositoryTraceSource::best_for(const std::string& url) const
{
    auto refs = repo::lookup(url, cache_dir_);
    if (refs.empty()) {
        return std::nullopt;
    }
    return ResolvedTrace{repo::load_trace(refs.front()), refs.front().version};
}

std::optional<ResolvedTrace> ListTraceSource::best_for(const std::string& url) const
{
    const trace::Trace* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& t : traces_) {
        if (!trace::match_url(t.url_pattern, url)) {
            continue;
        }
        auto len = trace::literal_prefix_length(t.url_pattern);
        if (best == nullptr || len > best_len) {
            best = &t;
            best_len = len;
        }
    }
    if (best == nullptr) {
        return std::nullopt;
    }
    return ResolvedTrace{*best, std::nullopt};
}

std::vector<CaptureResult> capture_batch(const std::vector<std::string>& urls, const TraceSource& traces,
                                         const BatchConfig& config, BatchStats* stats)
{
    if (config.workers < 1) {
        throw Error("workers must be at least 1");
    }
    std::vector<CaptureResult> results(urls.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            auto i = next++;
            if (i >= urls.size()) {
                return;
            }
            const auto& url = urls[i];
            auto started = monotonic_ms();
            try {
                auto resolved = traces.best_for(url);
                if (!resolved) {
                    throw TraceMismatch("no trace matches " + url);
                }
                if (stats != nullptr) {
                    int now = ++stats->active;
                    int peak = stats->peak.load();
                    while (now > peak && !stats->peak.compare_exchange_weak(peak, now)) {
                    }
                }
                try {
                    results[i] = capture(url, resolved->trace, config.capture, resolved->version);
                } catch (...) {
                    if (stats != nullptr) {
                        --stats->active;
                    }
                    throw;
                }
                if (stats != nullptr) {
                    --stats->active;
                }
            } catch (const std::exception& e) {
                CaptureResult r;
                r.capture_id = capture_id_for(url);
                r.target_url = url;
                r.status = CaptureStatus::failed;
                r.errors.push_back({"capture", std::nullopt, kind_of(e), e.what(), false});
                r.total_ms = monotonic_ms() - started;
                results[i] = std::move(r);
            }
        }
    };
    auto n = std::min<std::size_t>(static_cast<std::size_t>(config.workers), urls.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    return results;
}

} // namespace tracer::capture
