#include "tracer/fixture/portal.hpp"

#include <httplib.h>

#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "tracer/util/url.hpp"

namespace tracer::fixture {

using driver::Node;
using driver::Page;
using driver::PageScript;

void check_spec(const PortalSpec& spec)
{
    std::set<std::string> names;
    auto valid_name = [](const std::string& n) {
        static const std::regex re("[A-Za-z0-9][A-Za-z0-9._-]*");
        return std::regex_match(n, re);
    };
    for (const auto& r : spec.repos) {
        if (!valid_name(r.name)) {
            throw PortalError("invalid repo name \"" + r.name + "\"");
        }
        if (!names.insert("repo/" + r.name).second) {
            throw PortalError("duplicate repo name " + r.name);
        }
        if (r.file_count < 0) {
            throw PortalError("repo " + r.name + " has a negative file count");
        }
    }
    for (const auto& d : spec.decks) {
        if (!valid_name(d.name)) {
            throw PortalError("invalid deck name \"" + d.name + "\"");
        }
        if (!names.insert("deck/" + d.name).second) {
            throw PortalError("duplicate deck name " + d.name);
        }
        if (d.slide_count < 1 || d.note_count < 0) {
            throw PortalError("deck " + d.name + " needs at least one slide and a non-negative note count");
        }
    }
    if (spec.delay_ms < 0) {
        throw PortalError("delay_ms must be non-negative");
    }
}

PortalSpec parse_portal_spec(const Json& j)
{
    PortalSpec spec;
    try {
        for (const auto& r : j.value("repos", Json::array())) {
            spec.repos.push_back({r.at("name").get<std::string>(), r.value("file_count", 0), r.value("with_zip", true)});
        }
        for (const auto& d : j.value("decks", Json::array())) {
            DeckSpec deck{d.at("name").get<std::string>(), d.value("slide_count", 1), d.value("note_count", 0),
                          Pagination::href};
            auto mode = d.value("pagination", std::string("href"));
            if (mode == "script") {
                deck.pagination = Pagination::script;
            } else if (mode != "href") {
                throw PortalError("pagination must be \"href\" or \"script\"");
            }
            spec.decks.push_back(std::move(deck));
        }
        spec.delay_ms = j.value("delay_ms", 0);
        spec.tls = j.value("tls", false);
        spec.host = j.value("host", std::string("127.0.0.1"));
    } catch (const Json::exception& e) {
        throw PortalError(std::string("portal spec: ") + e.what());
    }
    check_spec(spec);
    return spec;
}

Json portal_spec_to_json(const PortalSpec& spec)
{
    Json repos = Json::array();
    for (const auto& r : spec.repos) {
        repos.push_back({{"name", r.name}, {"file_count", r.file_count}, {"with_zip", r.with_zip}});
    }
    Json decks = Json::array();
    for (const auto& d : spec.decks) {
        decks.push_back({{"name", d.name},
                         {"slide_count", d.slide_count},
                         {"note_count", d.note_count},
                         {"pagination", d.pagination == Pagination::script ? "script" : "href"}});
    }
    Json j = Json::object();
    j["repos"] = std::move(repos);
    j["decks"] = std::move(decks);
    j["delay_ms"] = spec.delay_ms;
    j["tls"] = spec.tls;
    j["host"] = spec.host;
    return j;
}

Json PortalStats::to_json() const
{
    Json j = Json::object();
    j["hits"] = hits;
    j["max_concurrency"] = max_concurrency;
    Json paths = Json::object();
    for (const auto& [p, n] : hits_by_path) {
        paths[p] = n;
    }
    j["hits_by_path"] = std::move(paths);
    return j;
}

namespace {

Node el(std::string tag, std::string text = {})
{
    Node n;
    n.tag = std::move(tag);
    n.text = std::move(text);
    return n;
}

Node link(std::string href, std::string text, std::vector<std::string> classes = {}, std::string id = {})
{
    Node n = el("a", std::move(text));
    n.href = std::move(href);
    n.classes = std::move(classes);
    n.id = std::move(id);
    return n;
}

std::string repo_path(const std::string& n) { return "/repo/" + n; }
std::string file_path(const std::string& n, int i) { return "/repo/" + n + "/blob/file-" + std::to_string(i) + ".txt"; }
std::string zip_path(const std::string& n) { return "/repo/" + n + "/archive/main.zip"; }
std::string deck_path(const std::string& n) { return "/deck/" + n; }
std::string slide_path(const std::string& n, int k) { return "/deck/" + n + "/slide/" + std::to_string(k); }
std::string image_path(const std::string& n, int k) { return slide_path(n, k) + "/image.svg"; }
std::string note_path(const std::string& n, int j) { return "/deck/" + n + "/notes/" + std::to_string(j); }

// Scripted pagination: the next button fetches the following slide, pushes
// its URL and swaps the image, all inside the click handler.
constexpr const char* kPaginationScript = R"(document.addEventListener('DOMContentLoaded', function () {
  var next = document.getElementById('next');
  if (!next) { return; }
  next.addEventListener('click', function () {
    var k = Number(next.getAttribute('data-slide'));
    var n = Number(next.getAttribute('data-count'));
    if (k >= n) { return; }
    var url = next.getAttribute('data-base') + (k + 1);
    var xhr = new XMLHttpRequest();
    xhr.open('GET', url, false);
    xhr.send();
    history.pushState(null, '', url);
    document.querySelector('h1').textContent = 'Slide ' + (k + 1) + ' of ' + n;
    document.getElementById('slide-img').setAttribute('src', url + '/image.svg');
    next.setAttribute('data-slide', String(k + 1));
    if (k + 1 >= n) { next.disabled = true; }
  });
});)";

Page repo_page(const RepoSpec& r)
{
    Page p;
    p.title = "Repository " + r.name;
    p.body.push_back(el("h1", "Repository " + r.name));
    Node list = el("ul");
    list.id = "files";
    for (int i = 1; i <= r.file_count; ++i) {
        Node item = el("li");
        item.children.push_back(link(file_path(r.name, i), "file-" + std::to_string(i) + ".txt", {"file"}));
        list.children.push_back(std::move(item));
    }
    p.body.push_back(std::move(list));
    if (r.with_zip) {
        p.body.push_back(link(zip_path(r.name), "Download ZIP", {"zip"}, "download-zip"));
    }
    return p;
}

Page deck_page(const DeckSpec& d)
{
    Page p;
    p.title = "Deck " + d.name;
    p.body.push_back(el("h1", "Deck " + d.name));
    p.body.push_back(link(slide_path(d.name, 1), "Start", {"start"}, "start"));
    Node notes = el("ul");
    notes.id = "notes";
    for (int j = 1; j <= d.note_count; ++j) {
        Node item = el("li");
        item.children.push_back(link(note_path(d.name, j), "Note " + std::to_string(j), {"note"}));
        notes.children.push_back(std::move(item));
    }
    p.body.push_back(std::move(notes));
    return p;
}

Page slide_page(const DeckSpec& d, int k, const std::string& base)
{
    Page p;
    bool last = k == d.slide_count;
    p.title = "Deck " + d.name + " slide " + std::to_string(k);
    p.body.push_back(el("h1", "Slide " + std::to_string(k) + " of " + std::to_string(d.slide_count)));
    Node img = el("img");
    img.id = "slide-img";
    img.attributes["src"] = image_path(d.name, k);
    img.attributes["alt"] = "slide " + std::to_string(k);
    p.body.push_back(std::move(img));
    p.resources.push_back(base + image_path(d.name, k));
    Node nav = el("nav");
    if (d.pagination == Pagination::href) {
        Node next = el("a", "Next");
        next.id = "next";
        next.classes = {"next"};
        if (last) {
            next.disabled = true;
        } else {
            next.href = slide_path(d.name, k + 1);
        }
        nav.children.push_back(std::move(next));
    } else {
        Node next = el("button", "Next");
        next.id = "next";
        next.classes = {"next"};
        next.attributes["type"] = "button";
        next.attributes["data-slide"] = std::to_string(k);
        next.attributes["data-count"] = std::to_string(d.slide_count);
        next.attributes["data-base"] = "/deck/" + d.name + "/slide/";
        next.disabled = last;
        nav.children.push_back(std::move(next));
        p.script = kPaginationScript;
        if (!last) {
            driver::Transition t;
            t.element = "next";
            t.push_state = base + slide_path(d.name, k + 1);
            t.fetch = {base + slide_path(d.name, k + 1), base + image_path(d.name, k + 1)};
            p.transitions.push_back(std::move(t));
        }
    }
    p.body.push_back(std::move(nav));
    return p;
}

Page note_page(const DeckSpec& d, int j)
{
    Page p;
    p.title = "Deck " + d.name + " note " + std::to_string(j);
    p.body.push_back(el("h1", "Note " + std::to_string(j)));
    p.body.push_back(el("p", "Speaker note " + std::to_string(j) + " for deck " + d.name + "."));
    return p;
}

std::string slide_svg(const std::string& deck, int k)
{
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"240\"><text x=\"20\" y=\"120\">" + deck +
           " slide " + std::to_string(k) + "</text></svg>\n";
}

std::string empty_zip()
{
    // End-of-central-directory record only: a valid, empty archive.
    std::string z = "PK\x05\x06";
    z.append(18, '\0');
    return z;
}

struct Resource {
    std::string content_type;
    std::string body;
};

} // namespace

PageScript build_page_script(const PortalSpec& spec, const std::string& base)
{
    PageScript script;
    auto add = [&](const std::string& path, Page page) { script.pages[normalize_uri(base + path)] = std::move(page); };
    for (const auto& r : spec.repos) {
        add(repo_path(r.name), repo_page(r));
    }
    for (const auto& d : spec.decks) {
        add(deck_path(d.name), deck_page(d));
        for (int k = 1; k <= d.slide_count; ++k) {
            add(slide_path(d.name, k), slide_page(d, k, base));
        }
        for (int j = 1; j <= d.note_count; ++j) {
            add(note_path(d.name, j), note_page(d, j));
        }
    }
    // Transition and resource URLs are already absolute; normalize them the
    // same way the parser would.
    for (auto& [url, page] : script.pages) {
        for (auto& r : page.resources) {
            r = normalize_uri(r);
        }
        for (auto& t : page.transitions) {
            if (t.push_state) {
                t.push_state = normalize_uri(*t.push_state);
            }
            for (auto& f : t.fetch) {
                f = normalize_uri(f);
            }
        }
    }
    return script;
}

struct Portal::Impl {
    PortalSpec spec;
    std::unique_ptr<httplib::Server> server;
    std::optional<proxy::Credential> credential;
    std::thread thread;
    int port = 0;
    std::string base;
    PageScript script;
    std::map<std::string, Resource> resources;

    std::atomic<int> active{0};
    std::atomic<int> max_active{0};
    mutable std::mutex stats_mutex;
    std::uint64_t hits = 0;
    std::map<std::string, std::uint64_t> hits_by_path;
    std::once_flag stopped;

    void build()
    {
        script = build_page_script(spec, base);
        for (const auto& [url, page] : script.pages) {
            resources[parse_url(url).path] = {"text/html; charset=utf-8", driver::render_html(page)};
        }
        for (const auto& r : spec.repos) {
            for (int i = 1; i <= r.file_count; ++i) {
                resources[file_path(r.name, i)] = {"text/plain; charset=utf-8",
                                                   "Contents of file-" + std::to_string(i) + ".txt in " + r.name + "\n"};
            }
            if (r.with_zip) {
                resources[zip_path(r.name)] = {"application/zip", empty_zip()};
            }
        }
        for (const auto& d : spec.decks) {
            for (int k = 1; k <= d.slide_count; ++k) {
                resources[image_path(d.name, k)] = {"image/svg+xml", slide_svg(d.name, k)};
            }
        }
    }

    void handle(const httplib::Request& req, httplib::Response& res)
    {
        bool probe = req.path.rfind("/__", 0) == 0;
        if (probe) {
            if (req.path == "/__stats") {
                res.set_content(stats().to_json().dump(), "application/json");
            } else if (req.path == "/__pagescript") {
                res.set_content(driver::page_script_to_json(script).dump(2), "application/json");
            } else if (req.path == "/__spec") {
                res.set_content(portal_spec_to_json(spec).dump(2), "application/json");
            } else {
                res.status = 404;
            }
            return;
        }
        int now = ++active;
        int seen = max_active.load();
        while (now > seen && !max_active.compare_exchange_weak(seen, now)) {
        }
        {
            std::lock_guard lock(stats_mutex);
            ++hits;
            ++hits_by_path[req.path];
        }
        int delay = spec.delay_ms;
        if (req.path == "/slow" && req.has_param("ms")) {
            delay = std::max(0, std::atoi(req.get_param_value("ms").c_str()));
        }
        if (delay > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        static const std::regex resource_re("/resource/([0-9]+)");
        std::smatch m;
        if (auto it = resources.find(req.path); it != resources.end()) {
            res.set_content(it->second.body, it->second.content_type);
        } else if (req.path == "/slow") {
            res.set_content("slow response after " + std::to_string(delay) + " ms\n", "text/plain");
        } else if (std::regex_match(req.path, m, resource_re)) {
            res.set_content("resource " + m[1].str() + "\n", "text/plain");
        } else {
            res.status = 404;
            res.set_content("not found\n", "text/plain");
        }
        --active;
    }

    PortalStats stats() const
    {
        PortalStats s;
        std::lock_guard lock(stats_mutex);
        s.hits = hits;
        s.hits_by_path = hits_by_path;
        s.max_concurrency = max_active.load();
        return s;
    }
};

Portal::Portal(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Portal::~Portal() { stop(); }

std::unique_ptr<Portal> Portal::serve(PortalSpec spec, int port)
{
    check_spec(spec);
    auto impl = std::make_unique<Impl>();
    impl->spec = std::move(spec);
    if (impl->spec.tls) {
        impl->credential = proxy::self_signed_credential(impl->spec.host);
        impl->server = std::make_unique<httplib::SSLServer>(impl->credential->certificate.get(),
                                                            impl->credential->key.get());
        if (!impl->server->is_valid()) {
            throw PortalError("TLS server setup failed");
        }
    } else {
        impl->server = std::make_unique<httplib::Server>();
    }
    impl->server->new_task_queue = [] { return new httplib::ThreadPool(64); };
    impl->server->set_keep_alive_max_count(1000);
    impl->server->set_tcp_nodelay(true);
    auto* raw = impl.get();
    impl->server->Get(".*", [raw](const httplib::Request& req, httplib::Response& res) { raw->handle(req, res); });

    if (port == 0) {
        impl->port = impl->server->bind_to_any_port(impl->spec.host);
    } else {
        impl->port = impl->server->bind_to_port(impl->spec.host, port) ? port : -1;
    }
    if (impl->port <= 0) {
        throw proxy::BindError("cannot bind fixture portal to " + impl->spec.host + ":" + std::to_string(port));
    }
    auto host = impl->spec.host.find(':') != std::string::npos ? "[" + impl->spec.host + "]" : impl->spec.host;
    impl->base = std::string(impl->spec.tls ? "https" : "http") + "://" + host + ":" + std::to_string(impl->port);
    impl->build();
    impl->thread = std::thread([raw] { raw->server->listen_after_bind(); });
    impl->server->wait_until_ready();
    return std::unique_ptr<Portal>(new Portal(std::move(impl)));
}

int Portal::port() const { return impl_->port; }

std::string Portal::base_url() const { return impl_->base; }

std::string Portal::repo_url(const std::string& name) const { return impl_->base + repo_path(name); }

std::string Portal::deck_url(const std::string& name) const { return impl_->base + deck_path(name); }

std::string Portal::resource_url(int n) const { return impl_->base + "/resource/" + std::to_string(n); }

const PortalSpec& Portal::spec() const { return impl_->spec; }

PageScript Portal::page_script() const { return impl_->script; }

std::optional<Inventory> Portal::expected_inventory(const std::string& url) const
{
    if (!try_parse_url(url)) {
        return std::nullopt;
    }
    auto target = normalize_uri(url);
    const auto& base = impl_->base;
    for (const auto& r : impl_->spec.repos) {
        if (target == normalize_uri(repo_url(r.name))) {
            Inventory inv;
            auto& files = inv[std::string(kFilesCategory)];
            for (int i = 1; i <= r.file_count; ++i) {
                files.push_back(normalize_uri(base + file_path(r.name, i)));
            }
            auto& zip = inv[std::string(kZipCategory)];
            if (r.with_zip) {
                zip.push_back(normalize_uri(base + zip_path(r.name)));
            }
            return inv;
        }
    }
    for (const auto& d : impl_->spec.decks) {
        if (target == normalize_uri(deck_url(d.name))) {
            Inventory inv;
            auto& slides = inv[std::string(kSlidesCategory)];
            for (int k = 1; k <= d.slide_count; ++k) {
                slides.push_back(normalize_uri(base + slide_path(d.name, k)));
            }
            auto& notes = inv[std::string(kNotesCategory)];
            for (int j = 1; j <= d.note_count; ++j) {
                notes.push_back(normalize_uri(base + note_path(d.name, j)));
            }
            return inv;
        }
    }
    return std::nullopt;
}

PortalStats Portal::stats() const { return impl_->stats(); }

void Portal::reset_stats()
{
    std::lock_guard lock(impl_->stats_mutex);
    impl_->hits = 0;
    impl_->hits_by_path.clear();
    impl_->max_active = impl_->active.load();
}

void Portal::stop()
{
    std::call_once(impl_->stopped, [this] {
        impl_->server->stop();
        if (impl_->thread.joinable()) {
            impl_->thread.join();
        }
    });
}

namespace {

trace::Provenance fixture_provenance(const std::string& path)
{
    trace::Provenance p;
    p.created_on = "http://127.0.0.1:8080" + path;
    p.user_agent = "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/124.0.0.0 "
                   "Safari/537.36";
    p.created_at = "2024-01-15T10:00:00Z";
    p.curator = "fixture";
    return p;
}

trace::Selector css(std::string v) { return {trace::SelectorStrategy::css, std::move(v)}; }

} // namespace

trace::Trace repo_trace(const std::string& scheme_host, int wait_after_ms)
{
    trace::Trace t;
    t.id = "fixture-repo";
    t.url_pattern = {scheme_host + "/repo/*"};
    trace::TraceAction files;
    files.kind = trace::ActionKind::click_all;
    files.scope_selector = trace::Selector{trace::SelectorStrategy::element_id, "files"};
    files.link_selector = css("a.file");
    files.wait_after_ms = wait_after_ms;
    trace::TraceAction zip;
    zip.kind = trace::ActionKind::click;
    zip.selector = trace::Selector{trace::SelectorStrategy::element_id, "download-zip"};
    zip.wait_after_ms = wait_after_ms;
    zip.on_missing = trace::OnMissing::skip;
    t.actions = {files, zip};
    t.provenance = fixture_provenance("/repo/example");
    t.categories = {{0, std::string(kFilesCategory)}, {1, std::string(kZipCategory)}};
    return t;
}

trace::Trace deck_trace(const std::string& scheme_host, int wait_after_ms)
{
    trace::Trace t;
    t.id = "fixture-deck";
    t.url_pattern = {scheme_host + "/deck/*"};
    trace::TraceAction notes;
    notes.kind = trace::ActionKind::click_all;
    notes.scope_selector = trace::Selector{trace::SelectorStrategy::element_id, "notes"};
    notes.link_selector = trace::Selector{trace::SelectorStrategy::html_class, "note"};
    notes.wait_after_ms = wait_after_ms;
    trace::TraceAction start;
    start.kind = trace::ActionKind::click;
    start.selector = trace::Selector{trace::SelectorStrategy::element_id, "start"};
    start.wait_after_ms = wait_after_ms;
    trace::TraceAction next;
    next.kind = trace::ActionKind::repeat_click;
    next.selector = css("#next");
    next.until = trace::Until::element_disabled;
    next.wait_after_ms = wait_after_ms;
    t.actions = {notes, start, next};
    t.provenance = fixture_provenance("/deck/example");
    t.categories = {{0, std::string(kNotesCategory)}, {1, std::string(kSlidesCategory)},
                    {2, std::string(kSlidesCategory)}};
    return t;
}

} // namespace tracer::fixture
