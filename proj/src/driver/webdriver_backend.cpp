#include "tracer/driver/webdriver_backend.hpp"

#include <httplib.h>

#include "tracer/driver/dom.hpp"
#include "tracer/driver/session.hpp"
#include "tracer/util/url.hpp"

namespace tracer::driver {

WebDriverOptions WebDriverOptions::from(const SessionConfig& config)
{
    WebDriverOptions o;
    o.endpoint = config.webdriver_endpoint;
    o.proxy_endpoint = config.proxy_endpoint;
    o.user_agent = config.user_agent;
    o.page_load_timeout_ms = config.page_load_timeout_ms;
    return o;
}

Json webdriver_capabilities(const WebDriverOptions& options)
{
    Json proxy = Json::object();
    proxy["proxyType"] = "manual";
    proxy["httpProxy"] = options.proxy_endpoint;
    proxy["sslProxy"] = options.proxy_endpoint;
    proxy["noProxy"] = Json::array();

    Json chrome_args = Json::array({"--headless=new", "--proxy-bypass-list=<-loopback>", "--disable-gpu"});
    Json firefox_prefs = Json::object();
    firefox_prefs["network.proxy.allow_hijacking_localhost"] = true;
    if (!options.user_agent.empty()) {
        chrome_args.push_back("--user-agent=" + options.user_agent);
        firefox_prefs["general.useragent.override"] = options.user_agent;
    }

    Json always = Json::object();
    always["acceptInsecureCerts"] = true;
    always["pageLoadStrategy"] = "normal";
    always["proxy"] = std::move(proxy);
    always["timeouts"] = {{"pageLoad", options.page_load_timeout_ms}, {"script", 30000}, {"implicit", 0}};
    always["goog:chromeOptions"] = {{"args", chrome_args}};
    always["moz:firefoxOptions"] = {{"args", Json::array({"-headless"})}, {"prefs", firefox_prefs}};

    Json caps = Json::object();
    caps["capabilities"] = {{"alwaysMatch", always}, {"firstMatch", Json::array({Json::object()})}};
    return caps;
}

namespace {

struct Endpoint {
    std::string origin;
    std::string base;
};

Endpoint split(const std::string& endpoint)
{
    auto url = try_parse_url(endpoint);
    if (!url || (url->scheme != "http" && url->scheme != "https")) {
        throw DriverUnreachable("webdriver endpoint is not an http(s) URL: " + endpoint);
    }
    Endpoint e;
    e.origin = url->scheme + "://" + url->authority();
    e.base = url->path;
    while (!e.base.empty() && e.base.back() == '/') {
        e.base.pop_back();
    }
    return e;
}

std::unique_ptr<httplib::Client> make_client(const std::string& origin, int timeout_ms)
{
    auto client = std::make_unique<httplib::Client>(origin);
    client->set_connection_timeout(5);
    client->set_read_timeout(std::chrono::milliseconds(timeout_ms));
    client->set_write_timeout(std::chrono::milliseconds(timeout_ms));
    client->set_keep_alive(true);
    client->set_tcp_nodelay(true);
    return client;
}

[[noreturn]] void raise(const std::string& what, const std::string& code, const std::string& message)
{
    auto full = what + ": " + code + (message.empty() ? "" : " (" + message + ")");
    if (code == "stale element reference" || code == "detached shadow root") {
        throw StaleElement(full);
    }
    if (code == "timeout") {
        throw NavigationTimeout(full);
    }
    if (code == "no such element") {
        throw ElementNotFound(full);
    }
    if (code == "unknown error" && message.find("net::ERR_") != std::string::npos) {
        throw NetworkError(full);
    }
    throw BackendError(full, code);
}

std::string element_id(const Json& value)
{
    if (value.is_object() && value.contains(kWebElementKey) && value[kWebElementKey].is_string()) {
        return value[kWebElementKey].get<std::string>();
    }
    throw BackendError("response does not carry a web element reference", "invalid response");
}

} // namespace

WebDriverBackend::WebDriverBackend(std::unique_ptr<httplib::Client> client, std::string base, std::string session_id)
    : client_(std::move(client)), base_(std::move(base)), session_id_(std::move(session_id))
{
}

WebDriverBackend::~WebDriverBackend()
{
    try {
        close();
    } catch (...) {
    }
}

std::unique_ptr<WebDriverBackend> WebDriverBackend::connect(const WebDriverOptions& options)
{
    if (options.endpoint.empty()) {
        throw DriverUnreachable("no webdriver endpoint configured");
    }
    auto ep = split(options.endpoint);
    auto client = make_client(ep.origin, options.command_timeout_ms);
    auto res = client->Post(ep.base + "/session", webdriver_capabilities(options).dump(), "application/json");
    if (!res) {
        throw DriverUnreachable("webdriver endpoint " + options.endpoint + " unreachable: " +
                                httplib::to_string(res.error()));
    }
    Json body;
    try {
        body = Json::parse(res->body);
    } catch (const Json::parse_error&) {
        throw DriverUnreachable("webdriver endpoint " + options.endpoint + " did not answer with JSON");
    }
    const auto& value = body.contains("value") ? body["value"] : body;
    if (res->status != 200 || value.contains("error")) {
        auto code = value.value("error", std::string("http ") + std::to_string(res->status));
        auto message = value.value("message", std::string());
        throw CapabilityRejected("new session refused: " + code + (message.empty() ? "" : " (" + message + ")"));
    }
    auto id = value.value("sessionId", std::string());
    if (id.empty()) {
        throw CapabilityRejected("new session response has no session id");
    }
    const auto& caps = value.contains("capabilities") ? value["capabilities"] : Json::object();
    auto backend = std::unique_ptr<WebDriverBackend>(new WebDriverBackend(std::move(client), ep.base, id));
    if (caps.contains("acceptInsecureCerts") && caps["acceptInsecureCerts"] != true) {
        backend->close();
        throw CapabilityRejected("browser did not accept insecure certificates; the proxy CA would be rejected");
    }
    return backend;
}

Json WebDriverBackend::command(const std::string& method, const std::string& path, const Json& body)
{
    if (closed_) {
        throw DriverError("webdriver session " + session_id_ + " is closed");
    }
    auto full = base_ + "/session/" + session_id_ + path;
    httplib::Result res{nullptr, httplib::Error::Unknown};
    if (method == "GET") {
        res = client_->Get(full);
    } else if (method == "POST") {
        res = client_->Post(full, body.dump(), "application/json");
    } else {
        res = client_->Delete(full);
    }
    if (!res) {
        throw DriverUnreachable(method + " " + path + ": " + httplib::to_string(res.error()));
    }
    Json parsed;
    try {
        parsed = Json::parse(res->body);
    } catch (const Json::parse_error&) {
        throw BackendError(method + " " + path + ": non-JSON response", std::to_string(res->status));
    }
    auto value = parsed.contains("value") ? parsed["value"] : Json(nullptr);
    if (res->status != 200 || (value.is_object() && value.contains("error"))) {
        raise(method + " " + path, value.is_object() ? value.value("error", std::to_string(res->status))
                                                      : std::to_string(res->status),
              value.is_object() ? value.value("message", std::string()) : std::string());
    }
    return value;
}

void WebDriverBackend::navigate(const std::string& url)
{
    command("POST", "/url", {{"url", url}});
}

std::string WebDriverBackend::current_url()
{
    auto v = command("GET", "/url");
    return v.is_string() ? normalize_uri(v.get<std::string>()) : std::string();
}

std::vector<std::string> WebDriverBackend::find(const trace::Selector& selector,
                                                const std::optional<std::string>& within)
{
    Json req = Json::object();
    if (selector.strategy == trace::SelectorStrategy::xpath) {
        req["using"] = "xpath";
        req["value"] = selector.value;
    } else {
        req["using"] = "css selector";
        req["value"] = to_css(selector);
    }
    auto path = within ? "/element/" + *within + "/elements" : std::string("/elements");
    auto v = command("POST", path, req);
    std::vector<std::string> out;
    if (v.is_array()) {
        for (const auto& e : v) {
            out.push_back(element_id(e));
        }
    }
    return out;
}

ElementState WebDriverBackend::state(const std::string& handle)
{
    ElementState s;
    auto name = command("GET", "/element/" + handle + "/name");
    s.tag = name.is_string() ? to_lower(name.get<std::string>()) : std::string();
    if (s.tag == "a") {
        auto attr = command("GET", "/element/" + handle + "/attribute/href");
        if (attr.is_string()) {
            auto prop = command("GET", "/element/" + handle + "/property/href");
            if (prop.is_string() && is_absolute_http_url(prop.get<std::string>())) {
                s.href = normalize_uri(prop.get<std::string>());
            }
        }
    }
    auto disabled = command("GET", "/element/" + handle + "/property/disabled");
    auto aria = command("GET", "/element/" + handle + "/attribute/aria-disabled");
    s.disabled = disabled == true || (aria.is_string() && aria.get<std::string>() == "true");
    return s;
}

void WebDriverBackend::click(const std::string& handle)
{
    command("POST", "/element/" + handle + "/click");
}

void WebDriverBackend::back()
{
    command("POST", "/back");
}

void WebDriverBackend::close()
{
    if (closed_) {
        return;
    }
    try {
        command("DELETE", "");
    } catch (...) {
        closed_ = true;
        throw;
    }
    closed_ = true;
}

} // namespace tracer::driver
