#include "tracer/cli/cli.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "tracer/bench/bench.hpp"
#include "tracer/capture/orchestrator.hpp"
#include "tracer/fixture/portal.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/quality/quality.hpp"
#include "tracer/repo/repository.hpp"
#include "tracer/trace/plan.hpp"
#include "tracer/util/url.hpp"

namespace tracer::cli {

namespace fs = std::filesystem;

namespace {

// Bad flag combination found after parsing.
class UsageError : public Error {
  public:
    using Error::Error;
};

struct Output {
    explicit Output(std::ostream& o) : out(o) {}

    std::ostream& out;
    std::string path;
    bool pretty = false;

    void emit(const Json& doc, const std::string& text = {}) const
    {
        auto body = pretty && !text.empty() ? text : to_canonical_json(doc);
        if (path.empty()) {
            out << body;
            out.flush();
        } else {
            write_file(path, body);
        }
    }
};

void add_output(CLI::App* app, Output& o)
{
    app->add_option("--out", o.path, "Write the report to this file instead of stdout");
    app->add_flag("--pretty", o.pretty, "Human-readable output where available");
}

std::vector<std::string> read_lines(const fs::path& p)
{
    std::vector<std::string> out;
    std::istringstream in(read_file(p));
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty() && line[0] != '#') {
            out.push_back(line);
        }
    }
    return out;
}

driver::PageScript load_script(const std::string& where)
{
    if (!is_absolute_http_url(where)) {
        return driver::load_page_script(where);
    }
    auto u = parse_url(where);
    httplib::Client client(u.scheme + "://" + u.host_port());
    client.enable_server_certificate_verification(false);
    auto res = client.Get(u.request_target());
    if (!res || res->status != 200) {
        throw Error("cannot fetch page script from " + where);
    }
    return driver::parse_page_script(Json::parse(res->body));
}

struct DriverFlags {
    std::string backend;
    std::string webdriver_endpoint;
    std::string page_script;
    int page_load_timeout_ms = driver::kPageLoadTimeoutMs;

    void add(CLI::App* app)
    {
        app->add_option("--backend", backend, "mock or webdriver")->check(CLI::IsMember({"mock", "webdriver"}));
        app->add_option("--webdriver-endpoint", webdriver_endpoint, "WebDriver URL")
            ->envname("TRACER_WEBDRIVER_ENDPOINT");
        app->add_option("--page-script", page_script, "PageScript file or URL for the mock driver");
        app->add_option("--page-load-timeout-ms", page_load_timeout_ms)->check(CLI::PositiveNumber);
    }

    driver::BackendKind kind() const
    {
        if (backend.empty()) {
            return page_script.empty() ? driver::BackendKind::webdriver : driver::BackendKind::mock;
        }
        return backend == "mock" ? driver::BackendKind::mock : driver::BackendKind::webdriver;
    }

    void check() const
    {
        if (kind() == driver::BackendKind::mock && page_script.empty()) {
            throw UsageError("the mock backend needs --page-script");
        }
        if (kind() == driver::BackendKind::webdriver && webdriver_endpoint.empty()) {
            throw UsageError("the webdriver backend needs --webdriver-endpoint or TRACER_WEBDRIVER_ENDPOINT");
        }
    }

    std::optional<driver::PageScript> script() const
    {
        if (page_script.empty()) {
            return std::nullopt;
        }
        return load_script(page_script);
    }
};

trace::Trace load_trace_file(const std::string& path) { return trace::parse_trace(read_file(path)); }

// --trace file or best match from --cache.
capture::ResolvedTrace resolve_trace(const std::string& trace_file, const std::string& cache, const std::string& url)
{
    if (!trace_file.empty()) {
        return {load_trace_file(trace_file), std::nullopt};
    }
    auto found = capture::RepositoryTraceSource(cache).best_for(url);
    if (!found) {
        throw capture::TraceMismatch("no cached trace matches " + url);
    }
    return *found;
}

// --trace-repo pulls into the cache first; the cache then serves lookups.
void sync_trace_repo(const std::string& remote, std::string& cache)
{
    if (remote.empty()) {
        return;
    }
    if (cache.empty()) {
        cache = "trace-cache";
    }
    repo::sync(remote, cache);
}

void require_one(const std::string& a, const std::string& b, const std::string& names)
{
    if (a.empty() == b.empty()) {
        throw UsageError("give exactly one of " + names);
    }
}

sigset_t termination_signals()
{
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    return set;
}

// Long-running commands block the signals before any thread starts so that
// sigwait() in the main thread receives them.
void block_termination()
{
    auto set = termination_signals();
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

void wait_for_termination()
{
    auto set = termination_signals();
    int sig = 0;
    sigwait(&set, &sig);
}

fixture::PortalSpec default_portal_spec()
{
    fixture::PortalSpec spec;
    spec.repos = {{"example", 5, true}, {"nozip", 3, false}, {"empty", 0, true}};
    spec.decks = {{"example", 10, 3, fixture::Pagination::href}, {"scripted", 10, 2, fixture::Pagination::script}};
    return spec;
}

capture::CaptureConfig capture_config(const DriverFlags& d, const std::string& out_dir, bool plain, bool no_retry)
{
    capture::CaptureConfig c;
    c.out_dir = out_dir;
    c.backend = d.kind();
    c.webdriver_endpoint = d.webdriver_endpoint;
    c.page_script = d.script();
    c.page_load_timeout_ms = d.page_load_timeout_ms;
    c.compression = plain ? warc::Compression::none : warc::Compression::gzip_per_record;
    c.retry = !no_retry;
    return c;
}

void quality_list(const Json& doc, std::vector<quality::ResourceQuality>& out)
{
    if (doc.is_array()) {
        for (const auto& item : doc) {
            out.push_back(quality::ResourceQuality::from_json(item));
        }
    } else {
        out.push_back(quality::ResourceQuality::from_json(doc));
    }
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Trace-driven web archiving toolkit", "tracer"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    // Leaf subcommand -> action returning the exit code.
    std::vector<std::pair<CLI::App*, std::function<int()>>> actions;
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& desc) {
        return parent->add_subcommand(name, desc);
    };

    // trace
    auto* trace_cmd = app.add_subcommand("trace", "Inspect trace documents")->require_subcommand(1);

    Output validate_out{out};
    std::string validate_file;
    auto* validate = leaf(trace_cmd, "validate", "Check a trace and print findings");
    validate->add_option("file", validate_file)->required()->check(CLI::ExistingFile);
    add_output(validate, validate_out);
    actions.emplace_back(validate, [&] {
        trace::ValidationReport report;
        try {
            report = trace::validate_trace(trace::decode_trace(read_file(validate_file)));
        } catch (const trace::SchemaError& e) {
            report.findings.push_back({trace::Severity::error, e.field(), e.what()});
        } catch (const trace::SyntaxError& e) {
            report.findings.push_back({trace::Severity::error, "$", e.what()});
        } catch (const trace::VersionError& e) {
            report.findings.push_back({trace::Severity::error, "$.schema_version", e.what()});
        }
        std::string text;
        for (const auto& f : report.findings) {
            text += std::string(trace::to_string(f.severity)) + " " + f.path + ": " + f.message + "\n";
        }
        validate_out.emit(report.to_json(), text.empty() ? "valid\n" : text);
        return report.has_errors() ? kExitFailure : kExitOk;
    });

    Output plan_out{out};
    std::string plan_file;
    auto* plan = leaf(trace_cmd, "plan", "Compile a trace and print its step plan");
    plan->add_option("file", plan_file)->required()->check(CLI::ExistingFile);
    add_output(plan, plan_out);
    actions.emplace_back(plan, [&] {
        auto p = trace::compile(load_trace_file(plan_file));
        auto text = trace::render_plan(p);
        Json lines = Json::array();
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
            lines.push_back(line);
        }
        plan_out.emit(Json{{"trace_id", p.trace_id}, {"steps", p.steps.size()}, {"plan", lines}}, text);
        return kExitOk;
    });

    Output match_out{out};
    std::string match_trace;
    std::string match_pattern;
    std::string match_url;
    auto* match = leaf(trace_cmd, "match", "Test a URL against a trace pattern");
    match->add_option("--pattern-from", match_trace, "Trace file supplying the pattern")->check(CLI::ExistingFile);
    match->add_option("--pattern", match_pattern, "Glob pattern");
    match->add_option("url", match_url)->required();
    add_output(match, match_out);
    actions.emplace_back(match, [&] {
        require_one(match_trace, match_pattern, "--pattern-from or --pattern");
        trace::UrlPattern pattern{match_pattern};
        if (!match_trace.empty()) {
            pattern = load_trace_file(match_trace).url_pattern;
        }
        bool hit = trace::match_url(pattern, match_url);
        match_out.emit(Json{{"match", hit}, {"pattern", pattern.pattern}, {"url", match_url}});
        return hit ? kExitOk : kExitFailure;
    });

    // repo
    auto* repo_cmd = app.add_subcommand("repo", "Shared trace repository")->require_subcommand(1);

    Output sync_out{out};
    std::string sync_remote;
    std::string sync_cache;
    auto* sync = leaf(repo_cmd, "sync", "Pull new trace versions into the local cache");
    sync->add_option("--remote,--trace-repo", sync_remote, "Directory or http(s) URL")->required();
    sync->add_option("--cache", sync_cache)->required();
    add_output(sync, sync_out);
    actions.emplace_back(sync, [&] {
        sync_out.emit(repo::sync(sync_remote, sync_cache).to_json());
        return kExitOk;
    });

    Output lookup_out{out};
    std::string lookup_cache;
    std::string lookup_url;
    auto* lookup = leaf(repo_cmd, "lookup", "List cached traces matching a URL, most specific first");
    lookup->add_option("--cache", lookup_cache)->required();
    lookup->add_option("url", lookup_url)->required();
    add_output(lookup, lookup_out);
    actions.emplace_back(lookup, [&] {
        auto refs = repo::lookup(lookup_url, lookup_cache);
        Json list = Json::array();
        for (const auto& r : refs) {
            list.push_back(r.to_json());
        }
        lookup_out.emit(Json{{"url", lookup_url}, {"traces", list}});
        return refs.empty() ? kExitFailure : kExitOk;
    });

    // capture
    auto* capture_cmd = app.add_subcommand("capture", "Trace-driven captures")->require_subcommand(1);

    DriverFlags one_driver;
    std::string one_url;
    std::string one_trace;
    std::string one_cache;
    std::string one_dir = "captures";
    bool one_plain = false;
    bool one_no_retry = false;
    bool one_pretty = false;
    auto* one = leaf(capture_cmd, "one", "Capture one URL");
    one->add_option("--url", one_url)->required();
    one->add_option("--trace", one_trace, "Trace file")->check(CLI::ExistingFile);
    one->add_option("--cache", one_cache, "Repository cache to pick the trace from");
    std::string one_repo;
    one->add_option("--trace-repo", one_repo, "Sync this repository into the cache first");
    one->add_option("--out", one_dir, "Capture output directory");
    one->add_flag("--no-compress", one_plain, "Write capture.warc without gzip");
    one->add_flag("--no-retry", one_no_retry);
    one->add_flag("--pretty", one_pretty);
    one_driver.add(one);
    actions.emplace_back(one, [&] {
        sync_trace_repo(one_repo, one_cache);
        require_one(one_trace, one_cache, "--trace or --cache");
        one_driver.check();
        auto resolved = resolve_trace(one_trace, one_cache, one_url);
        auto result = capture::capture(one_url, resolved.trace,
                                       capture_config(one_driver, one_dir, one_plain, one_no_retry), resolved.version);
        auto doc = result.to_json();
        out << (one_pretty ? doc.dump(2) + "\n" : to_canonical_json(doc));
        return result.status == capture::CaptureStatus::failed ? kExitFailure : kExitOk;
    });

    DriverFlags batch_driver;
    std::vector<std::string> batch_urls;
    std::string batch_urls_file;
    std::vector<std::string> batch_traces;
    std::string batch_cache;
    std::string batch_dir = "captures";
    int batch_workers = 1;
    bool batch_plain = false;
    bool batch_no_retry = false;
    auto* batch = leaf(capture_cmd, "batch", "Capture many URLs with a worker pool");
    batch->add_option("urls", batch_urls);
    batch->add_option("--urls-file", batch_urls_file, "One URL per line")->check(CLI::ExistingFile);
    batch->add_option("--trace", batch_traces, "Trace file (repeatable)")->check(CLI::ExistingFile);
    batch->add_option("--cache", batch_cache);
    std::string batch_repo;
    batch->add_option("--trace-repo", batch_repo, "Sync this repository into the cache first");
    batch->add_option("--workers", batch_workers)->check(CLI::PositiveNumber);
    batch->add_option("--out", batch_dir, "Capture output directory");
    batch->add_flag("--no-compress", batch_plain);
    batch->add_flag("--no-retry", batch_no_retry);
    batch_driver.add(batch);
    actions.emplace_back(batch, [&] {
        sync_trace_repo(batch_repo, batch_cache);
        if (batch_traces.empty() == batch_cache.empty()) {
            throw UsageError("give --trace or --cache");
        }
        batch_driver.check();
        auto urls = batch_urls;
        if (!batch_urls_file.empty()) {
            auto more = read_lines(batch_urls_file);
            urls.insert(urls.end(), more.begin(), more.end());
        }
        std::unique_ptr<capture::TraceSource> source;
        if (!batch_cache.empty()) {
            source = std::make_unique<capture::RepositoryTraceSource>(batch_cache);
        } else {
            std::vector<trace::Trace> traces;
            for (const auto& f : batch_traces) {
                traces.push_back(load_trace_file(f));
            }
            source = std::make_unique<capture::ListTraceSource>(std::move(traces));
        }
        capture::BatchConfig bc;
        bc.capture = capture_config(batch_driver, batch_dir, batch_plain, batch_no_retry);
        bc.workers = batch_workers;
        auto results = capture::capture_batch(urls, *source, bc);
        Json list = Json::array();
        bool any_failed = false;
        for (const auto& r : results) {
            list.push_back(r.to_json());
            any_failed = any_failed || r.status == capture::CaptureStatus::failed;
        }
        out << to_canonical_json(list);
        return any_failed ? kExitFailure : kExitOk;
    });

    // quality
    auto* quality_cmd = app.add_subcommand("quality", "Availability of URIs of interest")->require_subcommand(1);

    Output live_out{out};
    DriverFlags live_driver;
    std::string live_url;
    std::string live_trace;
    std::string live_cache;
    auto* live = leaf(quality_cmd, "live-inventory", "Count URIs of interest on the live page");
    live->add_option("--url", live_url)->required();
    live->add_option("--trace", live_trace)->check(CLI::ExistingFile);
    live->add_option("--cache", live_cache);
    live_driver.add(live);
    add_output(live, live_out);
    actions.emplace_back(live, [&] {
        require_one(live_trace, live_cache, "--trace or --cache");
        live_driver.check();
        auto resolved = resolve_trace(live_trace, live_cache, live_url);
        quality::InventoryConfig ic;
        ic.backend = live_driver.kind();
        ic.webdriver_endpoint = live_driver.webdriver_endpoint;
        ic.page_script = live_driver.script();
        ic.page_load_timeout_ms = live_driver.page_load_timeout_ms;
        live_out.emit(quality::live_inventory(live_url, resolved.trace, ic).to_json());
        return kExitOk;
    });

    Output winv_out{out};
    std::string winv_file;
    std::vector<int> winv_statuses;
    auto* winv = leaf(quality_cmd, "warc-inventory", "List captured URIs in a WARC");
    winv->add_option("warc", winv_file)->required()->check(CLI::ExistingFile);
    winv->add_option("--status", winv_statuses, "Allowed HTTP status (repeatable, default 200)");
    add_output(winv, winv_out);
    actions.emplace_back(winv, [&] {
        quality::WarcFilter filter;
        if (!winv_statuses.empty()) {
            filter.statuses = {winv_statuses.begin(), winv_statuses.end()};
        }
        auto uris = quality::warc_inventory(winv_file, filter);
        winv_out.emit(Json{{"warc", winv_file},
                           {"uris", std::vector<std::string>(uris.begin(), uris.end())},
                           {"total", uris.size()}});
        return kExitOk;
    });

    Output cmp_out{out};
    std::string cmp_expected;
    std::string cmp_warc;
    std::string cmp_captured;
    auto* cmp = leaf(quality_cmd, "compare", "Compare a live inventory with captured URIs");
    cmp->add_option("--expected", cmp_expected, "Inventory JSON from live-inventory")
        ->required()
        ->check(CLI::ExistingFile);
    cmp->add_option("--warc", cmp_warc)->check(CLI::ExistingFile);
    cmp->add_option("--captured", cmp_captured, "warc-inventory JSON or one URI per line")
        ->check(CLI::ExistingFile);
    add_output(cmp, cmp_out);
    actions.emplace_back(cmp, [&] {
        require_one(cmp_warc, cmp_captured, "--warc or --captured");
        auto expected = quality::UriInventory::from_json(Json::parse(read_file(cmp_expected)));
        std::set<std::string> captured;
        if (!cmp_warc.empty()) {
            captured = quality::warc_inventory(cmp_warc);
        } else {
            auto text = read_file(cmp_captured);
            auto doc = Json::parse(text, nullptr, false);
            if (!doc.is_discarded() && doc.is_object() && doc.contains("uris")) {
                auto list = doc["uris"].get<std::vector<std::string>>();
                captured = {list.begin(), list.end()};
            } else {
                auto list = read_lines(cmp_captured);
                captured = {list.begin(), list.end()};
            }
        }
        cmp_out.emit(quality::compare(expected, captured).to_json());
        return kExitOk;
    });

    Output agg_out{out};
    std::vector<std::string> agg_files;
    std::string agg_category;
    auto* agg = leaf(quality_cmd, "aggregate", "Threshold table over compare results");
    agg->add_option("files", agg_files, "compare outputs (object or array each)")
        ->required()
        ->check(CLI::ExistingFile);
    agg->add_option("--category", agg_category, "Single row for this category ('overall' for all URIs)");
    add_output(agg, agg_out);
    actions.emplace_back(agg, [&] {
        std::vector<quality::ResourceQuality> qs;
        for (const auto& f : agg_files) {
            quality_list(Json::parse(read_file(f)), qs);
        }
        quality::ThresholdTable table;
        if (agg_category.empty()) {
            table = quality::build_table(qs);
        } else {
            if (qs.empty()) {
                throw quality::EmptyInput("no resources to aggregate");
            }
            table.rows.push_back(quality::aggregate(qs, agg_category));
        }
        agg_out.emit(table.to_json(), table.to_text());
        return kExitOk;
    });

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Baseline crawl and overhead report")->require_subcommand(1);

    Output crawl_out{out};
    std::vector<std::string> crawl_uris;
    std::string crawl_warc;
    std::string crawl_file;
    std::string crawl_resource;
    bench::CrawlConfig crawl_config;
    auto* crawl = leaf(bench_cmd, "crawl", "GET every URI once with a worker pool");
    crawl->add_option("uris", crawl_uris);
    crawl->add_option("--warc", crawl_warc, "Take the URIs from this capture")->check(CLI::ExistingFile);
    crawl->add_option("--uris-file", crawl_file)->check(CLI::ExistingFile);
    crawl->add_option("--resource-url", crawl_resource, "Label for the resource the URIs belong to");
    crawl->add_option("--workers", crawl_config.workers)->check(CLI::PositiveNumber);
    crawl->add_option("--timeout-ms", crawl_config.timeout_ms)->check(CLI::PositiveNumber);
    add_output(crawl, crawl_out);
    actions.emplace_back(crawl, [&] {
        auto uris = crawl_uris;
        if (!crawl_warc.empty()) {
            auto more = bench::extract_uris(crawl_warc);
            uris.insert(uris.end(), more.begin(), more.end());
        }
        if (!crawl_file.empty()) {
            auto more = read_lines(crawl_file);
            uris.insert(uris.end(), more.begin(), more.end());
        }
        auto timing = bench::baseline_crawl(uris, crawl_config);
        timing.resource_url = crawl_resource;
        crawl_out.emit(timing.to_json());
        return kExitOk;
    });

    Output over_out{out};
    std::vector<std::string> over_tracer;
    std::vector<std::string> over_baseline;
    std::string over_csv;
    auto* over = leaf(bench_cmd, "overhead", "Per-resource deltas between capture and crawl time");
    over->add_option("--tracer", over_tracer, "Capture result.json (repeatable)")
        ->required()
        ->check(CLI::ExistingFile);
    over->add_option("--baseline", over_baseline, "Crawl timing JSON (repeatable, same order)")
        ->required()
        ->check(CLI::ExistingFile);
    over->add_option("--csv", over_csv, "Also write resource_url,tracer_ms,baseline_ms,delta_ms here");
    add_output(over, over_out);
    actions.emplace_back(over, [&] {
        if (over_tracer.size() != over_baseline.size()) {
            throw bench::LengthMismatch(std::to_string(over_tracer.size()) + " capture results vs " +
                                        std::to_string(over_baseline.size()) + " crawl timings");
        }
        std::vector<bench::ResourceTiming> timings;
        for (std::size_t i = 0; i < over_tracer.size(); ++i) {
            auto result = Json::parse(read_file(over_tracer[i]));
            auto crawl_timing = bench::CrawlTiming::from_json(Json::parse(read_file(over_baseline[i])));
            timings.push_back({result.at("target_url").get<std::string>(),
                               result.at("timings").at("total_ms").get<std::int64_t>(), crawl_timing.total_ms});
        }
        auto report = bench::overhead_report(std::move(timings));
        if (!over_csv.empty()) {
            write_file(over_csv, report.to_csv());
        }
        over_out.emit(report.to_json(), report.to_csv());
        return kExitOk;
    });

    // fixture
    auto* fixture_cmd = app.add_subcommand("fixture", "Local test portal")->require_subcommand(1);

    std::string serve_spec;
    int serve_port = 0;
    auto* serve = leaf(fixture_cmd, "serve", "Serve the fixture portal until interrupted");
    serve->add_option("--spec", serve_spec, "Portal spec JSON")->check(CLI::ExistingFile);
    serve->add_option("--port", serve_port);
    actions.emplace_back(serve, [&] {
        auto spec = serve_spec.empty() ? default_portal_spec() : fixture::parse_portal_spec(Json::parse(read_file(serve_spec)));
        block_termination();
        auto portal = fixture::Portal::serve(spec, serve_port);
        Json repos = Json::array();
        Json decks = Json::array();
        for (const auto& r : portal->spec().repos) {
            repos.push_back(portal->repo_url(r.name));
        }
        for (const auto& d : portal->spec().decks) {
            decks.push_back(portal->deck_url(d.name));
        }
        out << to_canonical_json(Json{{"base_url", portal->base_url()},
                                      {"page_script", portal->base_url() + "/__pagescript"},
                                      {"repos", repos},
                                      {"decks", decks}});
        out.flush();
        wait_for_termination();
        portal->stop();
        return kExitOk;
    });

    std::string traces_dir;
    std::string traces_host = "http://127.0.0.1:*";
    auto* traces = leaf(fixture_cmd, "traces", "Write the repo and deck traces for the fixture");
    traces->add_option("--dir", traces_dir)->required();
    traces->add_option("--scheme-host", traces_host, "Pattern prefix, e.g. http://127.0.0.1:*");
    actions.emplace_back(traces, [&] {
        fs::create_directories(traces_dir);
        write_file(fs::path(traces_dir) / "fixture-repo.trace.json", trace::serialize_trace(fixture::repo_trace(traces_host)));
        write_file(fs::path(traces_dir) / "fixture-deck.trace.json", trace::serialize_trace(fixture::deck_trace(traces_host)));
        return kExitOk;
    });

    // serve-ingest
    std::string ingest_repo;
    std::string ingest_host = "127.0.0.1";
    int ingest_port = 8765;
    auto* ingest = app.add_subcommand("serve-ingest", "Accept traces over HTTP into a local repository");
    ingest->add_option("--repo", ingest_repo, "Repository directory")->required();
    ingest->add_option("--host", ingest_host);
    ingest->add_option("--port", ingest_port);
    actions.emplace_back(ingest, [&] {
        block_termination();
        auto server = IngestServer::start(ingest_repo, ingest_host, ingest_port);
        out << to_canonical_json(Json{{"listen", ingest_host + ":" + std::to_string(server->port())},
                                      {"repo", ingest_repo}});
        out.flush();
        wait_for_termination();
        server->stop();
        return kExitOk;
    });

    // proxy
    auto* proxy_cmd = app.add_subcommand("proxy", "Standalone capture proxy")->require_subcommand(1);
    std::string proxy_warc;
    std::string proxy_host = "127.0.0.1";
    int proxy_port = 0;
    std::string proxy_ca_out;
    std::string proxy_ca_cert;
    std::string proxy_ca_key;
    bool proxy_plain = false;
    bool proxy_verify = false;
    auto* proxy_run = leaf(proxy_cmd, "run", "Record traffic until interrupted");
    proxy_run->add_option("--warc,--warc-out", proxy_warc, "Output WARC; omit to only relay");
    proxy_run->add_option("--host", proxy_host);
    proxy_run->add_option("--port", proxy_port);
    proxy_run->add_option("--ca-out", proxy_ca_out, "Write the CA certificate PEM here");
    proxy_run->add_option("--ca-cert", proxy_ca_cert)->check(CLI::ExistingFile);
    proxy_run->add_option("--ca-key", proxy_ca_key)->check(CLI::ExistingFile);
    proxy_run->add_flag("--no-compress", proxy_plain);
    proxy_run->add_flag("--verify-upstream", proxy_verify);
    actions.emplace_back(proxy_run, [&] {
        if (proxy_ca_cert.empty() != proxy_ca_key.empty()) {
            throw UsageError("--ca-cert and --ca-key go together");
        }
        proxy::ProxyConfig pc;
        pc.host = proxy_host;
        pc.port = proxy_port;
        if (!proxy_warc.empty()) {
            pc.warc_output_path = proxy_warc;
        }
        if (!proxy_ca_out.empty()) {
            pc.ca_out = proxy_ca_out;
        }
        if (!proxy_ca_cert.empty()) {
            pc.ca = proxy::CertificateAuthority::load(read_file(proxy_ca_cert), read_file(proxy_ca_key));
        }
        pc.compression = proxy_plain ? warc::Compression::none : warc::Compression::gzip_per_record;
        pc.verify_upstream = proxy_verify;
        block_termination();
        auto p = proxy::CaptureProxy::start(std::move(pc));
        out << to_canonical_json(Json{{"endpoint", p->endpoint()}}) << std::flush;
        wait_for_termination();
        auto log = p->stop();
        out << to_canonical_json(Json{{"recorded", log.count(proxy::Disposition::recorded)},
                                      {"duplicates_skipped", log.count(proxy::Disposition::duplicate_skipped)},
                                      {"errors", log.count(proxy::Disposition::error)}});
        return kExitOk;
    });

    auto deepest = [&]() -> CLI::App* {
        CLI::App* cur = &app;
        for (;;) {
            auto subs = cur->get_subcommands();
            if (subs.empty()) {
                return cur;
            }
            cur = subs.front();
        }
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << deepest()->help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << deepest()->help();
        return kExitUsage;
    }

    for (auto& [cmd, action] : actions) {
        if (!cmd->parsed()) {
            continue;
        }
        try {
            return action();
        } catch (const UsageError& e) {
            err << "error: " << e.what() << "\n\n" << cmd->help();
            return kExitUsage;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return kExitFailure;
        }
    }
    err << app.help();
    return kExitUsage;
}

int dispatch(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

} // namespace tracer::cli
