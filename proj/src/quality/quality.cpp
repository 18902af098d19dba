#include "tracer/quality/quality.hpp"

#include <cstdio>
#include <sstream>

#include "tracer/capture/orchestrator.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/trace/plan.hpp"
#include "tracer/util/url.hpp"
#include "tracer/warc/reader.hpp"

namespace tracer::quality {

std::size_t UriInventory::total() const
{
    std::size_t n = 0;
    for (const auto& [k, v] : categories) {
        n += v.size();
    }
    return n;
}

Json UriInventory::to_json() const
{
    Json cats = Json::object();
    for (const auto& [k, v] : categories) {
        cats[k] = Json(std::vector<std::string>(v.begin(), v.end()));
    }
    Json j = Json::object();
    j["resource_url"] = resource_url;
    j["categories"] = std::move(cats);
    j["total"] = total();
    j["partial"] = partial;
    return j;
}

UriInventory UriInventory::from_json(const Json& j)
{
    if (!j.is_object() || !j.contains("resource_url") || !j["resource_url"].is_string()) {
        throw Error("inventory: resource_url missing");
    }
    std::map<std::string, std::vector<std::string>> cats;
    if (j.contains("categories")) {
        for (const auto& [k, v] : j["categories"].items()) {
            cats[k] = v.get<std::vector<std::string>>();
        }
    }
    auto inv = make_inventory(j["resource_url"].get<std::string>(), cats);
    inv.partial = j.value("partial", false);
    return inv;
}

namespace {

std::string normalized_or_raw(const std::string& u)
{
    try {
        return normalize_uri(u);
    } catch (const Error&) {
        return u;
    }
}

} // namespace

UriInventory make_inventory(const std::string& resource_url,
                            const std::map<std::string, std::vector<std::string>>& categories)
{
    UriInventory inv;
    inv.resource_url = resource_url;
    auto self = normalized_or_raw(resource_url);
    for (const auto& [label, uris] : categories) {
        auto& set = inv.categories[label];
        for (const auto& u : uris) {
            auto n = normalized_or_raw(u);
            if (n != self) {
                set.insert(std::move(n));
            }
        }
    }
    return inv;
}

UriInventory live_inventory(const std::string& url, const trace::Trace& t, const InventoryConfig& config)
{
    if (!is_absolute_http_url(url) || !trace::match_url(t.url_pattern, url)) {
        throw capture::TraceMismatch("trace " + t.id + " does not match " + url);
    }
    auto plan = trace::compile(t);
    std::unique_ptr<proxy::CaptureProxy> proxy;
    try {
        proxy = proxy::CaptureProxy::start(proxy::ProxyConfig{});
    } catch (const std::exception& e) {
        throw capture::EnvironmentError(std::string("proxy did not start: ") + e.what());
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
        throw capture::EnvironmentError(std::string("browser session did not open: ") + e.what());
    }
    auto run = capture::run_plan(*session, plan, config.retry);
    auto report = session->close();
    proxy->stop();
    if (run.failed) {
        const auto& last = run.errors.back();
        throw InventoryFailed(last.kind, last.message);
    }
    // Every action gets a category so empty ones still show up.
    std::map<std::string, std::vector<std::string>> cats = report.inventory_by_category();
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        auto it = t.categories.find(i);
        cats[it == t.categories.end() ? std::string(trace::kDefaultCategory) : it->second];
    }
    auto inv = make_inventory(url, cats);
    inv.partial = run.skipped || !run.errors.empty();
    return inv;
}

std::set<std::string> warc_inventory(const std::filesystem::path& warc, const WarcFilter& filter)
{
    std::set<std::string> out;
    warc::WarcReader reader(warc);
    while (auto rr = reader.next()) {
        const auto& r = rr->record;
        if (r.type != warc::RecordType::response || !r.target_uri) {
            continue;
        }
        int status = 0;
        try {
            auto end = http::find_head_end(r.block);
            auto head = http::parse_head(std::string_view(r.block).substr(0, end ? *end - 4 : r.block.size()));
            status = http::parse_status_line(head.start_line).status;
        } catch (const Error&) {
            continue;
        }
        if (filter.statuses.count(status) != 0) {
            out.insert(normalized_or_raw(*r.target_uri));
        }
    }
    return out;
}

double CategoryQuality::ratio() const
{
    return expected == 0 ? 1.0 : static_cast<double>(captured) / static_cast<double>(expected);
}

namespace {

Json quality_json(const CategoryQuality& q)
{
    Json j = Json::object();
    j["expected"] = q.expected;
    j["captured"] = q.captured;
    j["ratio"] = q.ratio();
    return j;
}

CategoryQuality quality_from(const Json& j)
{
    CategoryQuality q;
    q.expected = j.at("expected").get<std::size_t>();
    q.captured = j.at("captured").get<std::size_t>();
    if (q.captured > q.expected) {
        throw Error("captured exceeds expected");
    }
    return q;
}

} // namespace

Json ResourceQuality::to_json() const
{
    Json cats = Json::object();
    for (const auto& [k, v] : categories) {
        cats[k] = quality_json(v);
    }
    Json j = Json::object();
    j["resource_url"] = resource_url;
    j["categories"] = std::move(cats);
    j["overall"] = quality_json(overall);
    return j;
}

ResourceQuality ResourceQuality::from_json(const Json& j)
{
    ResourceQuality q;
    try {
        q.resource_url = j.at("resource_url").get<std::string>();
        for (const auto& [k, v] : j.at("categories").items()) {
            q.categories[k] = quality_from(v);
        }
        q.overall = quality_from(j.at("overall"));
    } catch (const Json::exception& e) {
        throw Error(std::string("quality record: ") + e.what());
    }
    return q;
}

ResourceQuality compare(const UriInventory& expected, const std::set<std::string>& captured)
{
    std::set<std::string> have;
    for (const auto& u : captured) {
        have.insert(normalized_or_raw(u));
    }
    ResourceQuality q;
    q.resource_url = expected.resource_url;
    for (const auto& [label, uris] : expected.categories) {
        CategoryQuality c;
        for (const auto& u : uris) {
            ++c.expected;
            c.captured += have.count(normalized_or_raw(u));
        }
        q.overall.expected += c.expected;
        q.overall.captured += c.captured;
        q.categories[label] = c;
    }
    return q;
}

bool in_cell(const CategoryQuality& q, int x)
{
    if (x == 0) {
        return q.expected > 0 && q.captured == 0;
    }
    if (q.expected == 0) {
        return true;
    }
    return static_cast<std::uint64_t>(q.captured) * 100 >=
           static_cast<std::uint64_t>(x) * static_cast<std::uint64_t>(q.expected);
}

std::string format_hundredths(std::int64_t h)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(h / 100), static_cast<long long>(h % 100));
    return buf;
}

std::string ThresholdRow::cell_text(std::size_t column) const
{
    return format_hundredths(hundredths.at(column));
}

Json ThresholdRow::to_json() const
{
    Json cells = Json::object();
    for (std::size_t i = 0; i < kThresholds.size(); ++i) {
        cells[std::to_string(kThresholds[i])] = cell_text(i);
    }
    Json j = Json::object();
    j["label"] = label;
    j["resources"] = resources;
    j["cells"] = std::move(cells);
    j["counts"] = counts;
    return j;
}

ThresholdRow aggregate(const std::vector<ResourceQuality>& qualities, const std::string& category)
{
    ThresholdRow row;
    row.label = category;
    for (const auto& q : qualities) {
        const CategoryQuality* c = nullptr;
        if (category == kOverall) {
            c = &q.overall;
        } else if (auto it = q.categories.find(category); it != q.categories.end()) {
            c = &it->second;
        } else {
            continue;
        }
        ++row.resources;
        for (std::size_t i = 0; i < kThresholds.size(); ++i) {
            row.counts[i] += in_cell(*c, kThresholds[i]) ? 1 : 0;
        }
    }
    if (row.resources == 0) {
        throw EmptyInput("no resources for " + category);
    }
    auto n = static_cast<std::int64_t>(row.resources);
    for (std::size_t i = 0; i < kThresholds.size(); ++i) {
        auto count = static_cast<std::int64_t>(row.counts[i]);
        row.hundredths[i] = (count * 20000 + n) / (2 * n);
    }
    return row;
}

ThresholdTable build_table(const std::vector<ResourceQuality>& qualities)
{
    if (qualities.empty()) {
        throw EmptyInput("no resources to aggregate");
    }
    ThresholdTable table;
    table.rows.push_back(aggregate(qualities, std::string(kOverall)));
    std::set<std::string> labels;
    for (const auto& q : qualities) {
        for (const auto& [k, v] : q.categories) {
            labels.insert(k);
        }
    }
    for (const auto& l : labels) {
        table.rows.push_back(aggregate(qualities, l));
    }
    return table;
}

Json ThresholdTable::to_json() const
{
    Json j = Json::object();
    j["thresholds"] = kThresholds;
    Json rs = Json::array();
    for (const auto& r : rows) {
        rs.push_back(r.to_json());
    }
    j["rows"] = std::move(rs);
    return j;
}

std::string ThresholdTable::to_text() const
{
    std::size_t width = 1;
    for (const auto& r : rows) {
        width = std::max(width, r.label.size());
    }
    std::ostringstream out;
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) {
            s.insert(0, w - s.size(), ' ');
        }
        return s;
    };
    out << std::string(width, ' ') << " |" << pad("n", 6) << " |";
    for (int x : kThresholds) {
        out << pad(std::to_string(x), 7);
    }
    out << '\n';
    out << std::string(width + 1, '-') << '+' << std::string(7, '-') << '+' << std::string(7 * kThresholds.size(), '-')
        << '\n';
    for (const auto& r : rows) {
        out << r.label << std::string(width - r.label.size(), ' ') << " |" << pad(std::to_string(r.resources), 6)
            << " |";
        for (std::size_t i = 0; i < kThresholds.size(); ++i) {
            out << pad(r.cell_text(i), 7);
        }
        out << '\n';
    }
    return out.str();
}

} // namespace tracer::quality
