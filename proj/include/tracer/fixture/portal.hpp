#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracer/driver/page_script.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/trace/trace.hpp"

namespace tracer::fixture {

class PortalError : public Error {
  public:
    using Error::Error;
};

enum class Pagination { href, script };

struct RepoSpec {
    std::string name;
    int file_count = 0;
    bool with_zip = true;
};

struct DeckSpec {
    std::string name;
    int slide_count = 1;
    int note_count = 0;
    Pagination pagination = Pagination::href;
};

struct PortalSpec {
    std::vector<RepoSpec> repos;
    std::vector<DeckSpec> decks;
    // Artificial latency applied to every served URI.
    int delay_ms = 0;
    bool tls = false;
    std::string host = "127.0.0.1";
};

// Throws PortalError on duplicate names or negative counts.
void check_spec(const PortalSpec& spec);
PortalSpec parse_portal_spec(const Json& j);
Json portal_spec_to_json(const PortalSpec& spec);

struct PortalStats {
    std::uint64_t hits = 0;
    int max_concurrency = 0;
    std::map<std::string, std::uint64_t> hits_by_path;

    Json to_json() const;
};

// Category -> expected URIs of interest for one page.
using Inventory = std::map<std::string, std::vector<std::string>>;

inline constexpr std::string_view kFilesCategory = "files";
inline constexpr std::string_view kZipCategory = "zip";
inline constexpr std::string_view kSlidesCategory = "slides";
inline constexpr std::string_view kNotesCategory = "notes";

class Portal {
  public:
    // Throws proxy::BindError when the port is taken.
    static std::unique_ptr<Portal> serve(PortalSpec spec, int port = 0);
    ~Portal();
    Portal(const Portal&) = delete;
    Portal& operator=(const Portal&) = delete;

    int port() const;
    // e.g. http://127.0.0.1:41234 (no trailing slash)
    std::string base_url() const;
    std::string repo_url(const std::string& name) const;
    std::string deck_url(const std::string& name) const;
    std::string resource_url(int n) const;
    const PortalSpec& spec() const;

    driver::PageScript page_script() const;
    // Ground truth for repo and deck pages; nullopt for other URLs.
    std::optional<Inventory> expected_inventory(const std::string& url) const;

    PortalStats stats() const;
    void reset_stats();
    void stop();

    struct Impl;

  private:
    explicit Portal(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

// Page model shared by the HTML renderer and the page script.
driver::PageScript build_page_script(const PortalSpec& spec, const std::string& base_url);

// Traces for the two page classes. Patterns cover every port on the host.
trace::Trace repo_trace(const std::string& scheme_host = "http://127.0.0.1:*", int wait_after_ms = 100);
trace::Trace deck_trace(const std::string& scheme_host = "http://127.0.0.1:*", int wait_after_ms = 100);

} // namespace tracer::fixture
