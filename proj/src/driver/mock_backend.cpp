#include "tracer/driver/mock_backend.hpp"

#include <httplib.h>

#include <atomic>

#include "tracer/driver/session.hpp"
#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"

namespace tracer::driver {

MockOptions MockOptions::from(const SessionConfig& config)
{
    MockOptions o;
    o.proxy_endpoint = config.proxy_endpoint;
    o.ca_pem = config.proxy_ca_pem;
    o.user_agent = config.user_agent;
    o.page_load_timeout_ms = config.page_load_timeout_ms;
    return o;
}

namespace {

std::atomic<std::uint64_t> g_mock_sessions{0};

constexpr int kMaxRedirects = 10;

std::pair<std::string, int> split_endpoint(const std::string& endpoint)
{
    auto colon = endpoint.rfind(':');
    if (colon == std::string::npos) {
        throw DriverError("proxy endpoint must be host:port, got " + endpoint);
    }
    return {endpoint.substr(0, colon), std::stoi(endpoint.substr(colon + 1))};
}

} // namespace

MockBackend::MockBackend(PageScript script, MockOptions options)
    : script_(std::move(script)), options_(std::move(options)), id_("mock-" + std::to_string(++g_mock_sessions))
{
}

MockBackend::~MockBackend() = default;

httplib::Client& MockBackend::client_for(const std::string& origin)
{
    auto it = clients_.find(origin);
    if (it != clients_.end()) {
        return *it->second;
    }
    auto client = std::make_unique<httplib::Client>(origin);
    if (!options_.proxy_endpoint.empty()) {
        auto [host, port] = split_endpoint(options_.proxy_endpoint);
        client->set_proxy(host, port);
    }
    if (!options_.ca_pem.empty()) {
        client->load_ca_cert_store(options_.ca_pem.data(), options_.ca_pem.size());
    }
    client->enable_server_certificate_verification(true);
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
    client->set_follow_location(false);
    auto timeout = std::chrono::milliseconds(options_.page_load_timeout_ms);
    client->set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count() + 1);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);
    return *clients_.emplace(origin, std::move(client)).first->second;
}

std::string MockBackend::fetch(const std::string& url, bool document)
{
    auto current = url;
    auto started = monotonic_ms();
    for (int hop = 0; hop <= kMaxRedirects; ++hop) {
        auto parsed = parse_url(current);
        auto origin = to_lower(parsed.scheme) + "://" + parsed.authority();
        httplib::Headers headers{{"User-Agent", options_.user_agent},
                                 {"Accept", document ? "text/html,*/*;q=0.8" : "*/*"}};
        fetch_log_.push_back(current);
        auto res = client_for(origin).Get(parsed.request_target(), headers);
        if (!res) {
            clients_.erase(origin);
            auto reason = httplib::to_string(res.error());
            if (monotonic_ms() - started >= options_.page_load_timeout_ms) {
                throw NavigationTimeout("loading " + current + " exceeded " +
                                        std::to_string(options_.page_load_timeout_ms) + " ms");
            }
            throw NetworkError("fetching " + current + ": " + reason);
        }
        if (document && (res->status == 502 || res->status == 503 || res->status == 504)) {
            throw NetworkError("fetching " + current + ": gateway status " + std::to_string(res->status));
        }
        if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
            current = normalize_uri(resolve_reference(current, res->get_header_value("Location")));
            continue;
        }
        return current;
    }
    throw NetworkError("too many redirects from " + url);
}

void MockBackend::load(const std::string& url)
{
    auto final_url = fetch(url, true);
    ++documents_loaded_;
    Entry entry;
    entry.url = final_url;
    entry.page = script_.find(final_url);
    if (entry.page != nullptr) {
        entry.doc = Document(entry.page->body, entry.page->title);
        for (const auto& r : entry.page->resources) {
            fetch(r, false);
        }
    } else {
        entry.doc = Document(std::vector<Node>{});
    }
    show(std::move(entry), true);
}

void MockBackend::show(Entry entry, bool push)
{
    if (push) {
        if (!history_.empty()) {
            history_.resize(position_ + 1);
        }
        history_.push_back(std::move(entry));
        position_ = history_.size() - 1;
    }
    ++generation_;
}

MockBackend::Entry& MockBackend::current()
{
    if (history_.empty()) {
        throw DriverError("no document loaded");
    }
    return history_[position_];
}

void MockBackend::navigate(const std::string& url)
{
    if (closed_) {
        throw DriverError("session closed");
    }
    if (!is_absolute_http_url(url)) {
        throw DriverError("cannot navigate to " + url);
    }
    load(normalize_uri(url));
}

std::string MockBackend::current_url()
{
    return history_.empty() ? std::string() : current().url;
}

const Node* MockBackend::resolve_handle(const std::string& handle) const
{
    auto colon = handle.find(':');
    if (handle.rfind("m", 0) != 0 || colon == std::string::npos) {
        throw BackendError("malformed element handle " + handle, "no such element");
    }
    auto gen = std::stoull(handle.substr(1, colon - 1));
    auto idx = std::stoull(handle.substr(colon + 1));
    if (gen != generation_ || history_.empty()) {
        throw StaleElement("element " + handle + " is not attached to the current document");
    }
    const auto& elements = history_[position_].doc.elements();
    if (idx >= elements.size()) {
        throw BackendError("unknown element handle " + handle, "no such element");
    }
    return elements[idx];
}

std::vector<std::string> MockBackend::find(const trace::Selector& selector, const std::optional<std::string>& within)
{
    const auto& doc = current().doc;
    const Node* scope = within ? resolve_handle(*within) : nullptr;
    std::vector<std::string> handles;
    try {
        for (const auto* n : select(doc, selector, scope)) {
            handles.push_back("m" + std::to_string(generation_) + ":" + std::to_string(*doc.index_of(n)));
        }
    } catch (const SelectorError& e) {
        throw BackendError(e.what(), "invalid selector");
    }
    return handles;
}

ElementState MockBackend::state(const std::string& handle)
{
    const auto* n = resolve_handle(handle);
    ElementState s;
    s.tag = n->tag;
    s.disabled = n->is_disabled();
    if (n->tag == "a" && n->href) {
        s.href = normalize_uri(resolve_reference(current().url, *n->href));
    }
    return s;
}

void MockBackend::click(const std::string& handle)
{
    const auto* n = resolve_handle(handle);
    bool control = n->tag == "button" || n->tag == "input" || n->tag == "select" || n->tag == "textarea";
    if (control && (n->disabled || n->attributes.count("disabled") != 0)) {
        return; // disabled form controls swallow clicks
    }
    const auto* page = current().page;
    const Transition* t = page != nullptr ? page->transition_for(n->id) : nullptr;
    if (t != nullptr) {
        for (const auto& f : t->fetch) {
            fetch(f, false);
        }
        if (t->navigate) {
            load(*t->navigate);
        } else if (t->push_state) {
            Entry entry;
            entry.url = *t->push_state;
            entry.page = script_.find(entry.url);
            entry.doc = Document(entry.page->body, entry.page->title);
            show(std::move(entry), true);
        }
        return;
    }
    if (n->tag == "a" && n->href) {
        load(normalize_uri(resolve_reference(current().url, *n->href)));
    }
}

void MockBackend::back()
{
    if (position_ == 0) {
        return;
    }
    --position_;
    show({}, false);
}

void MockBackend::close()
{
    closed_ = true;
    clients_.clear();
}

} // namespace tracer::driver
