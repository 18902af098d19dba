#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tracer {

// Generic URI split into RFC 3986 components. Only absolute URIs with an
// authority are accepted by parse_url(); relative references are handled by
// resolve_reference().
struct Url {
    std::string scheme;
    std::string userinfo;
    std::string host;
    std::optional<int> port;
    std::string path;
    std::optional<std::string> query;
    std::optional<std::string> fragment;

    std::string authority() const;
    // host[:port] with the port always present (default port filled in).
    std::string host_port() const;
    int effective_port() const;
    // path + ?query, "/" when the path is empty.
    std::string request_target() const;
    std::string str() const;
    std::string without_fragment() const;
};

// Throws InvalidUrl for relative or malformed input.
Url parse_url(std::string_view text);
std::optional<Url> try_parse_url(std::string_view text);

bool is_absolute_http_url(std::string_view text);

int default_port(std::string_view scheme);

std::string remove_dot_segments(std::string_view path);

// Resolves an href against a base URL (RFC 3986 section 5.2).
std::string resolve_reference(std::string_view base, std::string_view reference);

// Equality normal form used to compare URIs of interest: lowercase scheme and
// host, fragment dropped, dot-segments resolved, empty path becomes "/".
// The query string is kept verbatim.
std::string normalize_uri(std::string_view uri);

std::string to_lower(std::string_view s);

} // namespace tracer
