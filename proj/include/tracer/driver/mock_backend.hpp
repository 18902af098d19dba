#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "tracer/driver/backend.hpp"
#include "tracer/driver/page_script.hpp"

namespace httplib {
class Client;
}

namespace tracer::driver {

struct SessionConfig;

struct MockOptions {
    // host:port; empty means direct connections (tests only).
    std::string proxy_endpoint;
    std::string ca_pem;
    std::string user_agent;
    int page_load_timeout_ms = 60000;

    static MockOptions from(const SessionConfig& config);
};

// Scripted browser: DOM and click behavior come from a PageScript, while every
// document and subresource is actually fetched through the proxy so captures
// contain real traffic.
class MockBackend : public BrowserBackend {
  public:
    MockBackend(PageScript script, MockOptions options);
    ~MockBackend() override;

    std::string session_id() const override { return id_; }
    void navigate(const std::string& url) override;
    std::string current_url() override;
    std::vector<std::string> find(const trace::Selector& selector, const std::optional<std::string>& within) override;
    ElementState state(const std::string& handle) override;
    void click(const std::string& handle) override;
    void back() override;
    void close() override;

    // Counters for tests.
    int documents_loaded() const { return documents_loaded_; }
    const std::vector<std::string>& fetch_log() const { return fetch_log_; }

  private:
    struct Entry {
        std::string url;
        const Page* page = nullptr;
        Document doc;
    };

    // GET through the proxy; follows redirects. Returns the final URL.
    std::string fetch(const std::string& url, bool document);
    void load(const std::string& url);
    void show(Entry entry, bool push);
    const Node* resolve_handle(const std::string& handle) const;
    httplib::Client& client_for(const std::string& origin);
    Entry& current();

    PageScript script_;
    MockOptions options_;
    std::string id_;
    std::vector<Entry> history_;
    std::size_t position_ = 0;
    std::uint64_t generation_ = 0;
    bool closed_ = false;
    int documents_loaded_ = 0;
    std::vector<std::string> fetch_log_;
    std::map<std::string, std::unique_ptr<httplib::Client>> clients_;
};

} // namespace tracer::driver
