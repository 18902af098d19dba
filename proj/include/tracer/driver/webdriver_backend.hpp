#pragma once

#include <memory>
#include <string>

#include "tracer/driver/backend.hpp"
#include "tracer/util/json.hpp"

namespace httplib {
class Client;
}

namespace tracer::driver {

struct SessionConfig;

// W3C web element reference key.
inline constexpr std::string_view kWebElementKey = "element-6066-11e4-a52f-4f735466cecf";

struct WebDriverOptions {
    // e.g. http://127.0.0.1:4444 (a base path is allowed)
    std::string endpoint;
    std::string proxy_endpoint;
    std::string user_agent;
    int page_load_timeout_ms = 60000;
    int command_timeout_ms = 120000;

    static WebDriverOptions from(const SessionConfig& config);
};

// New-session capabilities: manual proxy for http and https, insecure certs
// accepted so the proxy's per-session CA is trusted, page-load timeout.
Json webdriver_capabilities(const WebDriverOptions& options);

class WebDriverBackend : public BrowserBackend {
  public:
    // Throws DriverUnreachable or CapabilityRejected.
    static std::unique_ptr<WebDriverBackend> connect(const WebDriverOptions& options);
    ~WebDriverBackend() override;

    std::string session_id() const override { return session_id_; }
    void navigate(const std::string& url) override;
    std::string current_url() override;
    std::vector<std::string> find(const trace::Selector& selector, const std::optional<std::string>& within) override;
    ElementState state(const std::string& handle) override;
    void click(const std::string& handle) override;
    void back() override;
    void close() override;

  private:
    WebDriverBackend(std::unique_ptr<httplib::Client> client, std::string base, std::string session_id);
    Json command(const std::string& method, const std::string& path, const Json& body = Json::object());

    std::unique_ptr<httplib::Client> client_;
    std::string base_;
    std::string session_id_;
    bool closed_ = false;
};

} // namespace tracer::driver
