#include "tracer/util/http.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "tracer/util/error.hpp"
#include "tracer/util/url.hpp"

namespace tracer::http {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

bool iequals(std::string_view a, std::string_view b)
{
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

} // namespace

std::optional<std::string> Head::get(std::string_view name) const
{
    for (const auto& [key, value] : headers) {
        if (iequals(key, name)) {
            return value;
        }
    }
    return std::nullopt;
}

bool Head::has_token(std::string_view name, std::string_view token) const
{
    for (const auto& [key, value] : headers) {
        if (!iequals(key, name)) {
            continue;
        }
        std::string_view rest = value;
        while (!rest.empty()) {
            auto comma = rest.find(',');
            auto item = trim(rest.substr(0, comma));
            if (iequals(item, token)) {
                return true;
            }
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
    }
    return false;
}

std::optional<std::size_t> find_head_end(std::string_view data)
{
    auto pos = data.find("\r\n\r\n");
    if (pos == std::string_view::npos) {
        return std::nullopt;
    }
    return pos + 4;
}

Head parse_head(std::string_view bytes)
{
    Head head;
    auto line_end = bytes.find("\r\n");
    head.start_line = std::string(bytes.substr(0, line_end));
    if (head.start_line.empty()) {
        throw Error("empty HTTP start line");
    }
    if (line_end == std::string_view::npos) {
        return head;
    }
    auto rest = bytes.substr(line_end + 2);
    while (!rest.empty()) {
        auto end = rest.find("\r\n");
        auto line = rest.substr(0, end);
        rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end + 2);
        if (line.empty()) {
            break;
        }
        if ((line.front() == ' ' || line.front() == '\t') && !head.headers.empty()) {
            head.headers.back().second += " " + std::string(trim(line));
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string_view::npos || colon == 0) {
            throw Error("malformed HTTP header line: " + std::string(line));
        }
        head.headers.emplace_back(std::string(line.substr(0, colon)),
                                  std::string(trim(line.substr(colon + 1))));
    }
    return head;
}

RequestLine parse_request_line(std::string_view line)
{
    auto sp1 = line.find(' ');
    auto sp2 = line.rfind(' ');
    if (sp1 == std::string_view::npos || sp1 == sp2) {
        throw Error("malformed request line: " + std::string(line));
    }
    RequestLine out{std::string(line.substr(0, sp1)), std::string(line.substr(sp1 + 1, sp2 - sp1 - 1)),
                    std::string(line.substr(sp2 + 1))};
    if (out.version.rfind("HTTP/", 0) != 0) {
        throw Error("malformed request line: " + std::string(line));
    }
    return out;
}

StatusLine parse_status_line(std::string_view line)
{
    if (line.rfind("HTTP/", 0) != 0) {
        throw Error("malformed status line: " + std::string(line));
    }
    auto sp1 = line.find(' ');
    if (sp1 == std::string_view::npos || sp1 + 4 > line.size()) {
        throw Error("malformed status line: " + std::string(line));
    }
    StatusLine out;
    out.version = std::string(line.substr(0, sp1));
    auto code = line.substr(sp1 + 1, 3);
    auto [ptr, ec] = std::from_chars(code.data(), code.data() + code.size(), out.status);
    if (ec != std::errc{} || ptr != code.data() + 3) {
        throw Error("malformed status code: " + std::string(line));
    }
    if (sp1 + 5 <= line.size()) {
        out.reason = std::string(line.substr(sp1 + 5));
    }
    return out;
}

namespace {

Framing length_framing(const Head& head)
{
    auto value = head.get("Content-Length");
    std::uint64_t length = 0;
    auto v = trim(*value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), length);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw Error("invalid Content-Length: " + *value);
    }
    return {FramingKind::content_length, length};
}

} // namespace

Framing request_framing(const Head& head)
{
    if (head.has_token("Transfer-Encoding", "chunked")) {
        return {FramingKind::chunked, 0};
    }
    if (head.get("Content-Length")) {
        return length_framing(head);
    }
    return {FramingKind::none, 0};
}

Framing response_framing(const Head& head, std::string_view request_method, int status)
{
    if (iequals(request_method, "HEAD") || (status >= 100 && status < 200) || status == 204 ||
        status == 304) {
        return {FramingKind::none, 0};
    }
    if (head.has_token("Transfer-Encoding", "chunked")) {
        return {FramingKind::chunked, 0};
    }
    if (head.get("Content-Length")) {
        return length_framing(head);
    }
    return {FramingKind::until_close, 0};
}

std::size_t ChunkedDecoder::feed(std::string_view input, std::string& decoded)
{
    std::size_t used = 0;
    while (used < input.size() && state_ != State::done) {
        switch (state_) {
        case State::size_line:
        case State::trailer: {
            char c = input[used++];
            line_.push_back(c);
            if (line_.size() >= 2 && line_.compare(line_.size() - 2, 2, "\r\n") == 0) {
                auto line = std::string_view(line_).substr(0, line_.size() - 2);
                if (state_ == State::trailer) {
                    if (line.empty()) {
                        state_ = State::done;
                    }
                    line_.clear();
                    break;
                }
                auto semi = line.find(';');
                auto hex = trim(line.substr(0, semi));
                std::uint64_t size = 0;
                auto [ptr, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), size, 16);
                if (ec != std::errc{} || hex.empty()) {
                    throw Error("malformed chunk size line");
                }
                line_.clear();
                remaining_ = size;
                state_ = size == 0 ? State::trailer : State::data;
            } else if (line_.size() > 4096) {
                throw Error("chunk line too long");
            }
            break;
        }
        case State::data: {
            auto take = static_cast<std::size_t>(
                std::min<std::uint64_t>(remaining_, input.size() - used));
            decoded.append(input.substr(used, take));
            used += take;
            remaining_ -= take;
            if (remaining_ == 0) {
                state_ = State::data_crlf;
            }
            break;
        }
        case State::data_crlf: {
            line_.push_back(input[used++]);
            if (line_.size() == 2) {
                if (line_ != "\r\n") {
                    throw Error("missing CRLF after chunk data");
                }
                line_.clear();
                state_ = State::size_line;
            }
            break;
        }
        case State::done:
            break;
        }
    }
    return used;
}

Message parse_message(std::string_view bytes, bool is_response)
{
    auto end = find_head_end(bytes);
    if (!end) {
        throw Error("HTTP message has no complete head");
    }
    Message msg;
    msg.head = parse_head(bytes.substr(0, *end - 4));
    auto body = bytes.substr(*end);
    Framing framing;
    if (is_response) {
        auto status = parse_status_line(msg.head.start_line).status;
        framing = response_framing(msg.head, "GET", status);
    } else {
        framing = request_framing(msg.head);
    }
    switch (framing.kind) {
    case FramingKind::none:
        break;
    case FramingKind::content_length:
        msg.payload = std::string(body.substr(0, static_cast<std::size_t>(framing.length)));
        break;
    case FramingKind::chunked: {
        ChunkedDecoder decoder;
        decoder.feed(body, msg.payload);
        break;
    }
    case FramingKind::until_close:
        msg.payload = std::string(body);
        break;
    }
    return msg;
}

std::string serialize_head(const Head& head)
{
    std::string out = head.start_line + "\r\n";
    for (const auto& [key, value] : head.headers) {
        out += key + ": " + value + "\r\n";
    }
    out += "\r\n";
    return out;
}

} // namespace tracer::http
