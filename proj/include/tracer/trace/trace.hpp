#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tracer/util/error.hpp"
#include "tracer/util/json.hpp"

namespace tracer::trace {

inline constexpr std::string_view kTraceVersion = "1.0";
inline constexpr int kDefaultWaitAfterMs = 2000;
inline constexpr int kDefaultMaxIterations = 1000;
inline constexpr int kMaxIterationsLimit = 10000;
inline constexpr std::string_view kDefaultCategory = "uncategorized";

class SyntaxError : public Error {
  public:
    using Error::Error;
};

// Missing or ill-typed field. field() names the offending JSON path.
class SchemaError : public Error {
  public:
    SchemaError(std::string field, const std::string& detail)
        : Error("schema error at " + field + ": " + detail), field_(std::move(field))
    {
    }
    const std::string& field() const { return field_; }

  private:
    std::string field_;
};

class VersionError : public Error {
  public:
    using Error::Error;
};

enum class SelectorStrategy { element_id, html_class, css, xpath };

struct Selector {
    SelectorStrategy strategy = SelectorStrategy::css;
    std::string value;

    bool operator==(const Selector&) const = default;
};

enum class ActionKind { click, click_all, repeat_click };
enum class Until { element_absent, element_disabled, max_only };
enum class OnMissing { fail, skip };

struct TraceAction {
    ActionKind kind = ActionKind::click;
    std::optional<Selector> selector;
    std::optional<Selector> scope_selector;
    std::optional<Selector> link_selector;
    std::optional<Until> until;
    // Unset means "use the default"; until=max-only requires it to be set.
    std::optional<int> max_iterations;
    int wait_after_ms = kDefaultWaitAfterMs;
    OnMissing on_missing = OnMissing::fail;

    int effective_max_iterations() const { return max_iterations.value_or(kDefaultMaxIterations); }

    bool operator==(const TraceAction&) const = default;
};

struct Provenance {
    std::string created_on;
    std::string user_agent;
    std::string created_at;
    std::optional<std::string> curator;

    bool operator==(const Provenance&) const = default;
};

struct UrlPattern {
    std::string pattern;

    bool operator==(const UrlPattern&) const = default;
};

struct Trace {
    std::string trace_version{kTraceVersion};
    std::string id;
    UrlPattern url_pattern;
    std::vector<TraceAction> actions;
    Provenance provenance;
    std::map<std::size_t, std::string> categories;
    // Unknown top-level members, kept for round-trip and otherwise ignored.
    Json extensions = Json::object();

    // Category label for an action, kDefaultCategory when unmapped.
    std::string category_of(std::size_t action_index) const;

    bool operator==(const Trace&) const = default;
};

enum class Severity { error, warning };

struct Finding {
    Severity severity = Severity::error;
    std::string path;
    std::string message;

    bool operator==(const Finding&) const = default;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool has_errors() const;
    std::size_t error_count() const;
    std::size_t warning_count() const;
    Json to_json() const;
};

std::string_view to_string(SelectorStrategy s);
std::string_view to_string(ActionKind k);
std::string_view to_string(Until u);
std::string_view to_string(OnMissing m);
std::string_view to_string(Severity s);

// Structural decode only: JSON well-formedness, required members and member
// types. Invariant checks are left to validate_trace(). Throws SyntaxError,
// SchemaError or VersionError.
Trace decode_trace(std::string_view bytes);

// decode_trace() followed by validate_trace(); the first error finding is
// raised as a SchemaError naming its path.
Trace parse_trace(std::string_view bytes);

// Canonical form: fixed member order, 2-space indentation, trailing newline.
std::string serialize_trace(const Trace& t);
Json trace_to_json(const Trace& t);

ValidationReport validate_trace(const Trace& t);

// Throws InvalidUrl for relative or unparseable urls.
bool match_url(const UrlPattern& pattern, std::string_view url);

// Number of characters before the first wildcard; ranks competing patterns.
std::size_t literal_prefix_length(const UrlPattern& pattern);

} // namespace tracer::trace
