#include "tracer/util/url.hpp"

#include <algorithm>
#include <cctype>

#include "tracer/util/error.hpp"

namespace tracer {

namespace {

bool is_scheme_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

} // namespace

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

int default_port(std::string_view scheme)
{
    auto s = to_lower(scheme);
    if (s == "https") {
        return 443;
    }
    if (s == "http") {
        return 80;
    }
    return 0;
}

std::string Url::authority() const
{
    std::string out;
    if (!userinfo.empty()) {
        out += userinfo + "@";
    }
    out += host;
    if (port) {
        out += ":" + std::to_string(*port);
    }
    return out;
}

int Url::effective_port() const { return port ? *port : default_port(scheme); }

std::string Url::host_port() const { return host + ":" + std::to_string(effective_port()); }

std::string Url::request_target() const
{
    std::string out = path.empty() ? "/" : path;
    if (query) {
        out += "?" + *query;
    }
    return out;
}

std::string Url::without_fragment() const
{
    std::string out = scheme + "://" + authority() + path;
    if (query) {
        out += "?" + *query;
    }
    return out;
}

std::string Url::str() const
{
    auto out = without_fragment();
    if (fragment) {
        out += "#" + *fragment;
    }
    return out;
}

std::optional<Url> try_parse_url(std::string_view text)
{
    Url url;
    auto colon = text.find(':');
    if (colon == std::string_view::npos || colon == 0) {
        return std::nullopt;
    }
    if (!std::isalpha(static_cast<unsigned char>(text[0]))) {
        return std::nullopt;
    }
    for (std::size_t i = 0; i < colon; ++i) {
        if (!is_scheme_char(text[i])) {
            return std::nullopt;
        }
    }
    url.scheme = std::string(text.substr(0, colon));
    auto rest = text.substr(colon + 1);
    if (rest.substr(0, 2) != "//") {
        return std::nullopt;
    }
    rest.remove_prefix(2);

    auto auth_end = rest.find_first_of("/?#");
    auto authority = rest.substr(0, auth_end);
    rest = auth_end == std::string_view::npos ? std::string_view{} : rest.substr(auth_end);

    if (auto at = authority.rfind('@'); at != std::string_view::npos) {
        url.userinfo = std::string(authority.substr(0, at));
        authority.remove_prefix(at + 1);
    }
    std::string_view host = authority;
    std::string_view port;
    if (!authority.empty() && authority.front() == '[') {
        auto close = authority.find(']');
        if (close == std::string_view::npos) {
            return std::nullopt;
        }
        host = authority.substr(0, close + 1);
        auto after = authority.substr(close + 1);
        if (!after.empty()) {
            if (after.front() != ':') {
                return std::nullopt;
            }
            port = after.substr(1);
        }
    } else if (auto pc = authority.rfind(':'); pc != std::string_view::npos) {
        host = authority.substr(0, pc);
        port = authority.substr(pc + 1);
    }
    if (host.empty()) {
        return std::nullopt;
    }
    for (char c : host) {
        if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '>' || c == '"') {
            return std::nullopt;
        }
    }
    url.host = std::string(host);
    if (!port.empty()) {
        if (port.size() > 5 || !std::all_of(port.begin(), port.end(), [](char c) {
                return std::isdigit(static_cast<unsigned char>(c));
            })) {
            return std::nullopt;
        }
        int value = std::stoi(std::string(port));
        if (value > 65535) {
            return std::nullopt;
        }
        url.port = value;
    }

    if (auto hash = rest.find('#'); hash != std::string_view::npos) {
        url.fragment = std::string(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    if (auto q = rest.find('?'); q != std::string_view::npos) {
        url.query = std::string(rest.substr(q + 1));
        rest = rest.substr(0, q);
    }
    url.path = std::string(rest);
    for (char c : url.path) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            return std::nullopt;
        }
    }
    return url;
}

Url parse_url(std::string_view text)
{
    auto url = try_parse_url(text);
    if (!url) {
        throw InvalidUrl(std::string(text));
    }
    return *url;
}

bool is_absolute_http_url(std::string_view text)
{
    auto url = try_parse_url(text);
    if (!url) {
        return false;
    }
    auto scheme = to_lower(url->scheme);
    return scheme == "http" || scheme == "https";
}

std::string remove_dot_segments(std::string_view path)
{
    std::string input(path);
    std::string output;
    while (!input.empty()) {
        if (input.rfind("../", 0) == 0) {
            input.erase(0, 3);
        } else if (input.rfind("./", 0) == 0) {
            input.erase(0, 2);
        } else if (input.rfind("/./", 0) == 0) {
            input.replace(0, 3, "/");
        } else if (input == "/.") {
            input = "/";
        } else if (input.rfind("/../", 0) == 0 || input == "/..") {
            if (input == "/..") {
                input = "/";
            } else {
                input.replace(0, 4, "/");
            }
            auto last = output.rfind('/');
            output.erase(last == std::string::npos ? 0 : last);
        } else if (input == "." || input == "..") {
            input.clear();
        } else {
            auto start = input.front() == '/' ? 1 : 0;
            auto next = input.find('/', start);
            auto seg_len = next == std::string::npos ? input.size() : next;
            output += input.substr(0, seg_len);
            input.erase(0, seg_len);
        }
    }
    return output;
}

namespace {

std::string merge_paths(const Url& base, std::string_view ref_path)
{
    if (!base.host.empty() && base.path.empty()) {
        return "/" + std::string(ref_path);
    }
    auto slash = base.path.rfind('/');
    if (slash == std::string::npos) {
        return std::string(ref_path);
    }
    return base.path.substr(0, slash + 1) + std::string(ref_path);
}

} // namespace

std::string resolve_reference(std::string_view base_text, std::string_view reference)
{
    if (auto abs = try_parse_url(reference)) {
        abs->path = remove_dot_segments(abs->path);
        return abs->str();
    }
    Url base = parse_url(base_text);
    Url target;
    target.scheme = base.scheme;

    std::string_view ref = reference;
    std::optional<std::string> fragment;
    if (auto hash = ref.find('#'); hash != std::string_view::npos) {
        fragment = std::string(ref.substr(hash + 1));
        ref = ref.substr(0, hash);
    }
    std::optional<std::string> query;
    if (auto q = ref.find('?'); q != std::string_view::npos) {
        query = std::string(ref.substr(q + 1));
        ref = ref.substr(0, q);
    }

    if (ref.substr(0, 2) == "//") {
        auto parsed = parse_url(base.scheme + ":" + std::string(reference));
        parsed.path = remove_dot_segments(parsed.path);
        return parsed.str();
    }
    target.userinfo = base.userinfo;
    target.host = base.host;
    target.port = base.port;
    if (ref.empty()) {
        target.path = base.path;
        target.query = query ? query : base.query;
    } else {
        if (ref.front() == '/') {
            target.path = remove_dot_segments(ref);
        } else {
            target.path = remove_dot_segments(merge_paths(base, ref));
        }
        target.query = query;
    }
    target.fragment = fragment;
    return target.str();
}

std::string normalize_uri(std::string_view uri)
{
    auto parsed = try_parse_url(uri);
    if (!parsed) {
        return std::string(uri);
    }
    parsed->scheme = to_lower(parsed->scheme);
    parsed->host = to_lower(parsed->host);
    parsed->fragment.reset();
    parsed->path = remove_dot_segments(parsed->path);
    if (parsed->path.empty()) {
        parsed->path = "/";
    }
    return parsed->str();
}

} // namespace tracer
