#include "tracer/warc/record.hpp"

#include <array>
#include <random>

#include "tracer/util/digest.hpp"
#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"

namespace tracer::warc {

std::string_view to_string(RecordType t)
{
    switch (t) {
    case RecordType::warcinfo:
        return "warcinfo";
    case RecordType::request:
        return "request";
    case RecordType::response:
        return "response";
    case RecordType::metadata:
        return "metadata";
    }
    return "warcinfo";
}

std::optional<RecordType> record_type_from(std::string_view text)
{
    for (auto t : {RecordType::warcinfo, RecordType::request, RecordType::response, RecordType::metadata}) {
        if (to_string(t) == text) {
            return t;
        }
    }
    return std::nullopt;
}

std::string payload_digest(std::string_view payload) { return "sha1:" + base32_encode(sha1_raw(payload)); }

std::string new_record_id()
{
    thread_local std::mt19937_64 rng{std::random_device{}()};
    std::array<unsigned char, 16> bytes{};
    for (std::size_t i = 0; i < bytes.size(); i += 8) {
        auto v = rng();
        for (std::size_t j = 0; j < 8; ++j) {
            bytes[i + j] = static_cast<unsigned char>(v >> (j * 8));
        }
    }
    bytes[6] = static_cast<unsigned char>((bytes[6] & 0x0f) | 0x40);
    bytes[8] = static_cast<unsigned char>((bytes[8] & 0x3f) | 0x80);
    auto hex = hex_encode(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    return "urn:uuid:" + hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
           hex.substr(16, 4) + "-" + hex.substr(20);
}

std::string now_warc_date() { return format_iso8601(std::chrono::system_clock::now()); }

namespace {

std::string fields_block(const http::HeaderList& fields)
{
    std::string out;
    for (const auto& [key, value] : fields) {
        out += key + ": " + value + "\r\n";
    }
    return out;
}

WarcRecord http_record(RecordType type, std::string_view uri, std::string message, const char* msgtype)
{
    WarcRecord r;
    r.type = type;
    r.record_id = new_record_id();
    r.target_uri = std::string(uri);
    r.date = now_warc_date();
    r.content_type = std::string("application/http; msgtype=") + msgtype;
    r.block = std::move(message);
    fill_digests(r);
    return r;
}

} // namespace

WarcRecord make_warcinfo(std::string_view filename, const http::HeaderList& fields)
{
    WarcRecord r;
    r.type = RecordType::warcinfo;
    r.record_id = new_record_id();
    r.date = now_warc_date();
    r.content_type = "application/warc-fields";
    if (!filename.empty()) {
        r.extra_headers.emplace_back("WARC-Filename", std::string(filename));
    }
    r.block = fields_block(fields);
    fill_digests(r);
    return r;
}

WarcRecord make_request(std::string_view target_uri, std::string http_message)
{
    return http_record(RecordType::request, target_uri, std::move(http_message), "request");
}

WarcRecord make_response(std::string_view target_uri, std::string http_message)
{
    return http_record(RecordType::response, target_uri, std::move(http_message), "response");
}

WarcRecord make_metadata(std::string_view target_uri, std::string_view concurrent_to,
                         const http::HeaderList& fields)
{
    WarcRecord r;
    r.type = RecordType::metadata;
    r.record_id = new_record_id();
    r.target_uri = std::string(target_uri);
    r.date = now_warc_date();
    r.content_type = "application/warc-fields";
    if (!concurrent_to.empty()) {
        r.concurrent_to = std::string(concurrent_to);
    }
    r.block = fields_block(fields);
    fill_digests(r);
    return r;
}

void fill_digests(WarcRecord& r)
{
    r.block_digest = payload_digest(r.block);
    r.payload_digest.reset();
    bool is_http = r.content_type.rfind("application/http", 0) == 0;
    if (!is_http) {
        return;
    }
    http::Message msg;
    try {
        msg = http::parse_message(r.block, r.type == RecordType::response);
    } catch (const Error& e) {
        throw InvalidRecord(std::string("block is not an HTTP message: ") + e.what());
    }
    if (r.type == RecordType::response || !msg.payload.empty()) {
        r.payload_digest = payload_digest(msg.payload);
    }
}

void check_record(const WarcRecord& r)
{
    if (r.version.rfind("WARC/", 0) != 0) {
        throw InvalidRecord("bad version " + r.version);
    }
    if (r.record_id.empty()) {
        throw InvalidRecord("record has no WARC-Record-ID");
    }
    if (r.type != RecordType::warcinfo) {
        if (!r.target_uri || !is_absolute_http_url(*r.target_uri)) {
            throw InvalidRecord(std::string(to_string(r.type)) + " record needs an absolute target URI");
        }
    }
    if (!parse_rfc3339(r.date)) {
        throw InvalidRecord("WARC-Date is not a valid timestamp: " + r.date);
    }
    if (r.content_length && *r.content_length != r.block.size()) {
        throw InvalidRecord("declared Content-Length " + std::to_string(*r.content_length) +
                            " does not match block size " + std::to_string(r.block.size()));
    }
    if (r.block_digest.rfind("sha1:", 0) == 0 && r.block_digest != payload_digest(r.block)) {
        throw InvalidRecord("WARC-Block-Digest does not match block");
    }
    for (const auto& [key, value] : r.extra_headers) {
        if (key.find_first_of(":\r\n") != std::string::npos || value.find_first_of("\r\n") != std::string::npos) {
            throw InvalidRecord("malformed extra header " + key);
        }
    }
}

std::string serialize_header(const WarcRecord& r, std::uint64_t block_size)
{
    std::string out = r.version + "\r\n";
    auto add = [&](std::string_view key, std::string_view value) {
        out += key;
        out += ": ";
        out += value;
        out += "\r\n";
    };
    add("WARC-Type", to_string(r.type));
    add("WARC-Record-ID", "<" + r.record_id + ">");
    add("WARC-Date", r.date);
    if (r.target_uri) {
        add("WARC-Target-URI", *r.target_uri);
    }
    if (r.concurrent_to) {
        add("WARC-Concurrent-To", "<" + *r.concurrent_to + ">");
    }
    for (const auto& [key, value] : r.extra_headers) {
        add(key, value);
    }
    if (!r.content_type.empty()) {
        add("Content-Type", r.content_type);
    }
    if (!r.block_digest.empty()) {
        add("WARC-Block-Digest", r.block_digest);
    }
    if (r.payload_digest) {
        add("WARC-Payload-Digest", *r.payload_digest);
    }
    add("Content-Length", std::to_string(block_size));
    out += "\r\n";
    return out;
}

std::string serialize_record(const WarcRecord& r)
{
    auto out = serialize_header(r, r.block.size());
    out += r.block;
    out += "\r\n\r\n";
    return out;
}

} // namespace tracer::warc
