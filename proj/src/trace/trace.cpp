#include "tracer/trace/trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <limits>

#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"

namespace tracer::trace {

std::string_view to_string(SelectorStrategy s)
{
    switch (s) {
    case SelectorStrategy::element_id:
        return "element-id";
    case SelectorStrategy::html_class:
        return "html-class";
    case SelectorStrategy::css:
        return "css";
    case SelectorStrategy::xpath:
        return "xpath";
    }
    return "css";
}

std::string_view to_string(ActionKind k)
{
    switch (k) {
    case ActionKind::click:
        return "click";
    case ActionKind::click_all:
        return "click-all";
    case ActionKind::repeat_click:
        return "repeat-click";
    }
    return "click";
}

std::string_view to_string(Until u)
{
    switch (u) {
    case Until::element_absent:
        return "element-absent";
    case Until::element_disabled:
        return "element-disabled";
    case Until::max_only:
        return "max-only";
    }
    return "max-only";
}

std::string_view to_string(OnMissing m) { return m == OnMissing::fail ? "fail" : "skip"; }

std::string_view to_string(Severity s) { return s == Severity::error ? "error" : "warning"; }

std::string Trace::category_of(std::size_t action_index) const
{
    auto it = categories.find(action_index);
    return it == categories.end() ? std::string(kDefaultCategory) : it->second;
}

bool ValidationReport::has_errors() const { return error_count() > 0; }

std::size_t ValidationReport::error_count() const
{
    return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
        return f.severity == Severity::error;
    }));
}

std::size_t ValidationReport::warning_count() const { return findings.size() - error_count(); }

Json ValidationReport::to_json() const
{
    Json list = Json::array();
    for (const auto& f : findings) {
        list.push_back({{"severity", to_string(f.severity)}, {"path", f.path}, {"message", f.message}});
    }
    return Json{{"errors", error_count()}, {"warnings", warning_count()}, {"findings", list}};
}

namespace {

template <typename Enum, std::size_t N>
Enum enum_from(const Json& value, const std::string& path, const std::array<Enum, N>& options)
{
    if (!value.is_string()) {
        throw SchemaError(path, "expected string");
    }
    auto text = value.get<std::string>();
    for (auto option : options) {
        if (to_string(option) == text) {
            return option;
        }
    }
    throw SchemaError(path, "unknown value \"" + text + "\"");
}

const Json& require(const Json& obj, const char* key, const std::string& path)
{
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(path.empty() ? key : path + "." + key, "required member missing");
    }
    return *it;
}

std::string string_member(const Json& obj, const char* key, const std::string& prefix)
{
    const auto& value = require(obj, key, prefix);
    if (!value.is_string()) {
        throw SchemaError(prefix.empty() ? key : prefix + "." + key, "expected string");
    }
    return value.get<std::string>();
}

int int_value(const Json& value, const std::string& path)
{
    if (!value.is_number_integer()) {
        throw SchemaError(path, "expected integer");
    }
    auto v = value.get<long long>();
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw SchemaError(path, "integer out of range");
    }
    return static_cast<int>(v);
}

Selector decode_selector(const Json& value, const std::string& path)
{
    if (!value.is_object()) {
        throw SchemaError(path, "expected object");
    }
    Selector s;
    s.strategy = enum_from(require(value, "strategy", path), path + ".strategy",
                           std::array{SelectorStrategy::element_id, SelectorStrategy::html_class,
                                      SelectorStrategy::css, SelectorStrategy::xpath});
    s.value = string_member(value, "value", path);
    return s;
}

TraceAction decode_action(const Json& value, const std::string& path)
{
    if (!value.is_object()) {
        throw SchemaError(path, "expected object");
    }
    TraceAction a;
    a.kind = enum_from(require(value, "kind", path), path + ".kind",
                       std::array{ActionKind::click, ActionKind::click_all, ActionKind::repeat_click});
    auto opt_selector = [&](const char* key) -> std::optional<Selector> {
        auto it = value.find(key);
        if (it == value.end() || it->is_null()) {
            return std::nullopt;
        }
        return decode_selector(*it, path + "." + key);
    };
    a.selector = opt_selector("selector");
    a.scope_selector = opt_selector("scope_selector");
    a.link_selector = opt_selector("link_selector");
    if (auto it = value.find("until"); it != value.end()) {
        a.until = enum_from(*it, path + ".until",
                            std::array{Until::element_absent, Until::element_disabled, Until::max_only});
    }
    if (auto it = value.find("max_iterations"); it != value.end()) {
        a.max_iterations = int_value(*it, path + ".max_iterations");
    }
    if (auto it = value.find("wait_after_ms"); it != value.end()) {
        a.wait_after_ms = int_value(*it, path + ".wait_after_ms");
    }
    if (auto it = value.find("on_missing"); it != value.end()) {
        a.on_missing = enum_from(*it, path + ".on_missing", std::array{OnMissing::fail, OnMissing::skip});
    }
    return a;
}

const char* const kKnownMembers[] = {"trace_version", "id",         "url_pattern",
                                     "actions",       "provenance", "categories"};

bool is_known_member(const std::string& key)
{
    return std::any_of(std::begin(kKnownMembers), std::end(kKnownMembers),
                       [&](const char* k) { return key == k; });
}

Json selector_to_json(const Selector& s) { return Json{{"strategy", to_string(s.strategy)}, {"value", s.value}}; }

bool is_valid_id(std::string_view id)
{
    if (id.empty()) {
        return false;
    }
    auto ok = [](char c, bool first) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || (!first && c == '-');
    };
    for (std::size_t i = 0; i < id.size(); ++i) {
        if (!ok(id[i], i == 0)) {
            return false;
        }
    }
    return true;
}

} // namespace

Trace decode_trace(std::string_view bytes)
{
    Json doc;
    try {
        doc = Json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw SyntaxError(std::string("trace is not well-formed JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw SchemaError("$", "trace document must be a JSON object");
    }

    Trace t;
    t.trace_version = string_member(doc, "trace_version", "");
    if (t.trace_version != kTraceVersion) {
        throw VersionError("unsupported trace_version \"" + t.trace_version + "\"; this build reads " +
                           std::string(kTraceVersion));
    }
    t.id = string_member(doc, "id", "");
    t.url_pattern.pattern = string_member(doc, "url_pattern", "");

    const auto& actions = require(doc, "actions", "");
    if (!actions.is_array()) {
        throw SchemaError("actions", "expected array");
    }
    for (std::size_t i = 0; i < actions.size(); ++i) {
        t.actions.push_back(decode_action(actions[i], "actions[" + std::to_string(i) + "]"));
    }

    const auto& prov = require(doc, "provenance", "");
    if (!prov.is_object()) {
        throw SchemaError("provenance", "expected object");
    }
    t.provenance.created_on = string_member(prov, "created_on", "provenance");
    t.provenance.user_agent = string_member(prov, "user_agent", "provenance");
    t.provenance.created_at = string_member(prov, "created_at", "provenance");
    if (auto it = prov.find("curator"); it != prov.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw SchemaError("provenance.curator", "expected string");
        }
        t.provenance.curator = it->get<std::string>();
    }

    if (auto it = doc.find("categories"); it != doc.end()) {
        if (!it->is_object()) {
            throw SchemaError("categories", "expected object");
        }
        for (const auto& [key, label] : it->items()) {
            std::size_t index = 0;
            auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
            if (key.empty() || ec != std::errc{} || ptr != key.data() + key.size()) {
                throw SchemaError("categories." + key, "key must be a decimal action index");
            }
            if (!label.is_string()) {
                throw SchemaError("categories." + key, "expected string");
            }
            t.categories[index] = label.get<std::string>();
        }
    }

    for (const auto& [key, value] : doc.items()) {
        if (!is_known_member(key)) {
            t.extensions[key] = value;
        }
    }
    return t;
}

Trace parse_trace(std::string_view bytes)
{
    auto t = decode_trace(bytes);
    auto report = validate_trace(t);
    for (const auto& f : report.findings) {
        if (f.severity == Severity::error) {
            throw SchemaError(f.path, f.message);
        }
    }
    return t;
}

Json trace_to_json(const Trace& t)
{
    Json doc = Json::object();
    doc["trace_version"] = t.trace_version;
    doc["id"] = t.id;
    doc["url_pattern"] = t.url_pattern.pattern;
    Json actions = Json::array();
    for (const auto& a : t.actions) {
        Json j = Json::object();
        j["kind"] = to_string(a.kind);
        if (a.selector) {
            j["selector"] = selector_to_json(*a.selector);
        }
        if (a.scope_selector) {
            j["scope_selector"] = selector_to_json(*a.scope_selector);
        }
        if (a.link_selector) {
            j["link_selector"] = selector_to_json(*a.link_selector);
        }
        if (a.until) {
            j["until"] = to_string(*a.until);
        }
        if (a.max_iterations) {
            j["max_iterations"] = *a.max_iterations;
        }
        j["wait_after_ms"] = a.wait_after_ms;
        j["on_missing"] = to_string(a.on_missing);
        actions.push_back(std::move(j));
    }
    doc["actions"] = std::move(actions);
    Json prov = Json::object();
    prov["created_on"] = t.provenance.created_on;
    prov["user_agent"] = t.provenance.user_agent;
    prov["created_at"] = t.provenance.created_at;
    if (t.provenance.curator) {
        prov["curator"] = *t.provenance.curator;
    }
    doc["provenance"] = std::move(prov);
    if (!t.categories.empty()) {
        Json cats = Json::object();
        for (const auto& [index, label] : t.categories) {
            cats[std::to_string(index)] = label;
        }
        doc["categories"] = std::move(cats);
    }
    for (const auto& [key, value] : t.extensions.items()) {
        doc[key] = value;
    }
    return doc;
}

std::string serialize_trace(const Trace& t) { return to_canonical_json(trace_to_json(t)); }

ValidationReport validate_trace(const Trace& t)
{
    ValidationReport report;
    auto error = [&](std::string path, std::string message) {
        report.findings.push_back({Severity::error, std::move(path), std::move(message)});
    };
    auto warning = [&](std::string path, std::string message) {
        report.findings.push_back({Severity::warning, std::move(path), std::move(message)});
    };

    if (t.trace_version != kTraceVersion) {
        error("trace_version", "unsupported version");
    }
    if (!is_valid_id(t.id)) {
        error("id", "must match [a-z0-9][a-z0-9-]*");
    }
    const auto& pattern = t.url_pattern.pattern;
    if (pattern.rfind("http://", 0) != 0 && pattern.rfind("https://", 0) != 0) {
        error("url_pattern", "must begin with http:// or https://");
    }
    if (t.actions.empty()) {
        error("actions", "at least one action is required");
    }

    auto check_selector = [&](const std::optional<Selector>& s, const std::string& path, bool wanted) {
        if (!wanted) {
            if (s) {
                error(path, "not allowed for this action kind");
            }
            return;
        }
        if (!s) {
            error(path, "required for this action kind");
            return;
        }
        if (s->value.empty()) {
            error(path + ".value", "must not be empty");
        } else if (s->strategy == SelectorStrategy::element_id &&
                   std::any_of(s->value.begin(), s->value.end(),
                               [](unsigned char c) { return std::isspace(c); })) {
            error(path + ".value", "element-id selectors must not contain whitespace");
        }
    };

    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        const auto& a = t.actions[i];
        auto path = "actions[" + std::to_string(i) + "]";
        bool single = a.kind != ActionKind::click_all;
        check_selector(a.selector, path + ".selector", single);
        check_selector(a.scope_selector, path + ".scope_selector", !single);
        check_selector(a.link_selector, path + ".link_selector", !single);

        if (a.kind == ActionKind::repeat_click) {
            if (!a.until) {
                error(path + ".until", "required for repeat-click");
            }
            if (a.max_iterations && (*a.max_iterations < 1 || *a.max_iterations > kMaxIterationsLimit)) {
                error(path + ".max_iterations", "must be between 1 and " + std::to_string(kMaxIterationsLimit));
            }
            if (a.until == Until::max_only) {
                if (!a.max_iterations) {
                    error(path + ".max_iterations", "until=max-only requires an explicit max_iterations");
                } else if (*a.max_iterations > kDefaultMaxIterations) {
                    warning(path + ".max_iterations",
                            "max-only loop with more than " + std::to_string(kDefaultMaxIterations) +
                                " iterations");
                }
            }
        } else {
            if (a.until) {
                error(path + ".until", "only allowed for repeat-click");
            }
            if (a.max_iterations) {
                error(path + ".max_iterations", "only allowed for repeat-click");
            }
        }
        if (a.wait_after_ms < 0) {
            error(path + ".wait_after_ms", "must be non-negative");
        }
    }

    if (!is_absolute_http_url(t.provenance.created_on)) {
        error("provenance.created_on", "must be an absolute http(s) URI");
    }
    if (!parse_rfc3339(t.provenance.created_at)) {
        error("provenance.created_at", "must be an RFC 3339 timestamp");
    }
    for (const auto& [index, label] : t.categories) {
        auto path = "categories." + std::to_string(index);
        if (index >= t.actions.size()) {
            error(path, "not a valid action index");
        }
        if (label.empty()) {
            error(path, "label must not be empty");
        }
    }
    return report;
}

namespace {

// Glob match where '*' spans any run without '/' and '**' any run at all.
bool glob_match(std::string_view pattern, std::string_view text)
{
    // dp[j] == pattern[0..i) matches text[0..j)
    std::vector<char> dp(text.size() + 1, 0), next(text.size() + 1, 0);
    dp[0] = 1;
    std::size_t i = 0;
    while (i < pattern.size()) {
        std::fill(next.begin(), next.end(), 0);
        if (pattern[i] == '*') {
            bool deep = i + 1 < pattern.size() && pattern[i + 1] == '*';
            std::size_t step = deep ? 2 : 1;
            for (std::size_t j = 0; j <= text.size(); ++j) {
                if (dp[j]) {
                    next[j] = 1;
                } else if (j > 0 && next[j - 1] && (deep || text[j - 1] != '/')) {
                    next[j] = 1;
                }
            }
            i += step;
        } else {
            for (std::size_t j = 1; j <= text.size(); ++j) {
                next[j] = dp[j - 1] && text[j - 1] == pattern[i];
            }
            ++i;
        }
        std::swap(dp, next);
    }
    return dp[text.size()] != 0;
}

} // namespace

bool match_url(const UrlPattern& pattern, std::string_view url)
{
    auto parsed = parse_url(url);
    std::string subject = to_lower(parsed.scheme) + "://";
    if (!parsed.userinfo.empty()) {
        subject += parsed.userinfo + "@";
    }
    subject += to_lower(parsed.host);
    if (parsed.port) {
        subject += ":" + std::to_string(*parsed.port);
    }
    subject += parsed.path;
    if (parsed.query) {
        subject += "?" + *parsed.query;
    }

    std::string p = pattern.pattern;
    auto scheme_end = p.find("://");
    if (scheme_end != std::string::npos) {
        auto authority_end = p.find('/', scheme_end + 3);
        auto prefix_len = authority_end == std::string::npos ? p.size() : authority_end;
        p = to_lower(std::string_view(p).substr(0, prefix_len)) + p.substr(prefix_len);
    }
    return glob_match(p, subject);
}

std::size_t literal_prefix_length(const UrlPattern& pattern)
{
    auto star = pattern.pattern.find('*');
    return star == std::string::npos ? pattern.pattern.size() : star;
}

} // namespace tracer::trace
