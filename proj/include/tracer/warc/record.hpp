#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tracer/util/error.hpp"
#include "tracer/util/http.hpp"

namespace tracer::warc {

inline constexpr std::string_view kWarcVersion = "WARC/1.1";

enum class RecordType { warcinfo, request, response, metadata };

std::string_view to_string(RecordType t);
std::optional<RecordType> record_type_from(std::string_view text);

class InvalidRecord : public Error {
  public:
    using Error::Error;
};

// One WARC record. Identifiers are stored without the surrounding angle
// brackets; the writer adds them.
struct WarcRecord {
    std::string version{kWarcVersion};
    RecordType type = RecordType::warcinfo;
    std::string record_id;
    std::optional<std::string> target_uri;
    std::string date;
    std::string content_type;
    std::optional<std::string> concurrent_to;
    std::string block;
    std::string block_digest;
    std::optional<std::string> payload_digest;
    // Headers beyond the modelled ones, in file order.
    http::HeaderList extra_headers;
    // Declared Content-Length when it was given explicitly (reader output or
    // caller override). Must equal block.size() to be written.
    std::optional<std::uint64_t> content_length;

    bool operator==(const WarcRecord&) const = default;
};

// "sha1:" + RFC 4648 base32 (uppercase, unpadded) of SHA-1(payload).
std::string payload_digest(std::string_view payload);

std::string new_record_id();
std::string now_warc_date();

WarcRecord make_warcinfo(std::string_view filename, const http::HeaderList& fields);
WarcRecord make_request(std::string_view target_uri, std::string http_message);
WarcRecord make_response(std::string_view target_uri, std::string http_message);
WarcRecord make_metadata(std::string_view target_uri, std::string_view concurrent_to,
                         const http::HeaderList& fields);

// Computes block and (for HTTP records) payload digests from the block.
void fill_digests(WarcRecord& r);

// Throws InvalidRecord when a record invariant does not hold.
void check_record(const WarcRecord& r);

// Header section of a record including the terminating blank line.
std::string serialize_header(const WarcRecord& r, std::uint64_t block_size);
// Uncompressed on-disk form: header, block, CRLF CRLF.
std::string serialize_record(const WarcRecord& r);

} // namespace tracer::warc
