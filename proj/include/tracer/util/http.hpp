#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tracer::http {

using HeaderList = std::vector<std::pair<std::string, std::string>>;

// Start line plus header fields of an HTTP/1.x message.
struct Head {
    std::string start_line;
    HeaderList headers;

    std::optional<std::string> get(std::string_view name) const;
    bool has_token(std::string_view name, std::string_view token) const;
};

struct RequestLine {
    std::string method;
    std::string target;
    std::string version;
};

struct StatusLine {
    std::string version;
    int status = 0;
    std::string reason;
};

// Offset just past the CRLFCRLF that terminates the head, if present.
std::optional<std::size_t> find_head_end(std::string_view data);
// Parses the bytes before the blank line. Throws tracer::Error when malformed.
Head parse_head(std::string_view head_bytes);
RequestLine parse_request_line(std::string_view line);
StatusLine parse_status_line(std::string_view line);

enum class FramingKind { none, content_length, chunked, until_close };

struct Framing {
    FramingKind kind = FramingKind::none;
    std::uint64_t length = 0;
};

Framing request_framing(const Head& head);
Framing response_framing(const Head& head, std::string_view request_method, int status);

// Incremental decoder for chunked transfer coding. Feed raw bytes; the
// decoded entity bytes are appended to `decoded`. Returns how many input
// bytes were consumed; once done() no further input is consumed.
class ChunkedDecoder {
  public:
    std::size_t feed(std::string_view input, std::string& decoded);
    bool done() const { return state_ == State::done; }

  private:
    enum class State { size_line, data, data_crlf, trailer, done };
    State state_ = State::size_line;
    std::string line_;
    std::uint64_t remaining_ = 0;
};

// A fully buffered message split into head and entity payload (transfer
// coding removed).
struct Message {
    Head head;
    std::string payload;
};

// Throws tracer::Error on malformed input.
Message parse_message(std::string_view bytes, bool is_response);

std::string serialize_head(const Head& head);

} // namespace tracer::http
