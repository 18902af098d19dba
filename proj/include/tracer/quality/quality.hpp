#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tracer/driver/session.hpp"
#include "tracer/trace/trace.hpp"
#include "tracer/util/json.hpp"

namespace tracer::quality {

class EmptyInput : public Error {
  public:
    using Error::Error;
};

// A step failed fatally while counting the live resource.
class InventoryFailed : public Error {
  public:
    InventoryFailed(std::string kind, const std::string& message)
        : Error(kind + ": " + message), kind_(std::move(kind))
    {
    }
    const std::string& kind() const { return kind_; }

  private:
    std::string kind_;
};

// URIs of interest for one resource, normalized, resource URL excluded.
struct UriInventory {
    std::string resource_url;
    std::map<std::string, std::set<std::string>> categories;
    // Some step was skipped or recovered by retry.
    bool partial = false;

    std::size_t total() const;
    Json to_json() const;
    static UriInventory from_json(const Json& j);
};

// Normalizes and drops the resource itself.
UriInventory make_inventory(const std::string& resource_url,
                            const std::map<std::string, std::vector<std::string>>& categories);

struct InventoryConfig {
    driver::BackendKind backend = driver::BackendKind::mock;
    std::string webdriver_endpoint;
    std::optional<driver::PageScript> page_script;
    std::string user_agent = driver::SessionConfig{}.user_agent;
    int page_load_timeout_ms = driver::kPageLoadTimeoutMs;
    bool retry = true;
};

// Runs the trace against the live page through a discarding proxy.
UriInventory live_inventory(const std::string& url, const trace::Trace& trace, const InventoryConfig& config);

struct WarcFilter {
    std::set<int> statuses{200};
};

// Normalized target URIs of response records with an allowed status.
std::set<std::string> warc_inventory(const std::filesystem::path& warc, const WarcFilter& filter = {});

struct CategoryQuality {
    std::size_t expected = 0;
    std::size_t captured = 0;
    double ratio() const;
};

struct ResourceQuality {
    std::string resource_url;
    std::map<std::string, CategoryQuality> categories;
    CategoryQuality overall;

    Json to_json() const;
    static ResourceQuality from_json(const Json& j);
};

ResourceQuality compare(const UriInventory& expected, const std::set<std::string>& captured);

inline constexpr std::array<int, 11> kThresholds{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

// Whether a ratio of captured/expected lands in the column for threshold x.
// x == 0 means "exactly zero"; otherwise "at least x percent".
bool in_cell(const CategoryQuality& q, int x);

struct ThresholdRow {
    std::string label;
    std::size_t resources = 0;
    std::array<std::size_t, 11> counts{};
    // Percentages in hundredths, rounded half up.
    std::array<std::int64_t, 11> hundredths{};

    std::string cell_text(std::size_t column) const;
    Json to_json() const;
};

inline constexpr std::string_view kOverall = "overall";

// Row over resources carrying `category` (or all resources for kOverall).
ThresholdRow aggregate(const std::vector<ResourceQuality>& qualities, const std::string& category);

struct ThresholdTable {
    std::vector<ThresholdRow> rows;

    Json to_json() const;
    std::string to_text() const;
};

// Overall row followed by one row per category, alphabetical.
ThresholdTable build_table(const std::vector<ResourceQuality>& qualities);

// "12.34" from hundredths.
std::string format_hundredths(std::int64_t h);

} // namespace tracer::quality
