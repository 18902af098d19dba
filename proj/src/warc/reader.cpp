#include "tracer/warc/reader.hpp"

#include <array>
#include <charconv>

#include <zlib.h>

#include "tracer/util/digest.hpp"

namespace tracer::warc {

namespace {

constexpr std::size_t kMaxHeaderBytes = 1 << 20;

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

std::string strip_brackets(std::string_view v)
{
    if (v.size() >= 2 && v.front() == '<' && v.back() == '>') {
        v = v.substr(1, v.size() - 2);
    }
    return std::string(v);
}

// Parses the header section (without the blank line) into a record with an
// empty block; returns the declared Content-Length.
std::uint64_t parse_header(std::string_view head, std::uint64_t offset, WarcRecord& r)
{
    auto eol = head.find("\r\n");
    auto version = head.substr(0, eol);
    if (version.rfind("WARC/", 0) != 0) {
        throw CorruptRecord(offset, "missing WARC version line");
    }
    r.version = std::string(version);
    std::optional<std::uint64_t> length;
    bool have_type = false;
    auto rest = eol == std::string_view::npos ? std::string_view{} : head.substr(eol + 2);
    while (!rest.empty()) {
        auto end = rest.find("\r\n");
        auto line = rest.substr(0, end);
        rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end + 2);
        if (line.empty()) {
            continue;
        }
        auto colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw CorruptRecord(offset, "malformed header line");
        }
        auto key = std::string(line.substr(0, colon));
        auto value = trim(line.substr(colon + 1));
        if (key == "WARC-Type") {
            auto t = record_type_from(value);
            if (!t) {
                throw CorruptRecord(offset, "unsupported WARC-Type " + std::string(value));
            }
            r.type = *t;
            have_type = true;
        } else if (key == "WARC-Record-ID") {
            r.record_id = strip_brackets(value);
        } else if (key == "WARC-Date") {
            r.date = std::string(value);
        } else if (key == "WARC-Target-URI") {
            r.target_uri = strip_brackets(value);
        } else if (key == "WARC-Concurrent-To") {
            r.concurrent_to = strip_brackets(value);
        } else if (key == "Content-Type") {
            r.content_type = std::string(value);
        } else if (key == "WARC-Block-Digest") {
            r.block_digest = std::string(value);
        } else if (key == "WARC-Payload-Digest") {
            r.payload_digest = std::string(value);
        } else if (key == "Content-Length") {
            std::uint64_t n = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), n);
            if (ec != std::errc{} || ptr != value.data() + value.size()) {
                throw CorruptRecord(offset, "invalid Content-Length");
            }
            length = n;
        } else {
            r.extra_headers.emplace_back(std::move(key), std::string(value));
        }
    }
    if (!have_type) {
        throw CorruptRecord(offset, "missing WARC-Type");
    }
    if (!length) {
        throw CorruptRecord(offset, "missing Content-Length");
    }
    r.content_length = *length;
    return *length;
}

void verify_block(const WarcRecord& r, std::uint64_t offset)
{
    if (r.block_digest.rfind("sha1:", 0) == 0 && r.block_digest != payload_digest(r.block)) {
        throw CorruptRecord(offset, "block digest mismatch");
    }
}

bool is_gzip_magic(std::string_view bytes)
{
    return bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
           static_cast<unsigned char>(bytes[1]) == 0x8b;
}

struct Inflated {
    std::string data;
    std::uint64_t consumed = 0;
};

// Inflates one gzip member. `more` supplies further compressed input and
// returns an empty view at end of input.
template <typename Supplier>
Inflated inflate_member(Supplier&& more, std::uint64_t offset)
{
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) {
        throw IoError("inflateInit2 failed");
    }
    Inflated out;
    std::array<Bytef, 64 * 1024> buffer{};
    int ret = Z_OK;
    std::string_view input;
    while (ret != Z_STREAM_END) {
        if (zs.avail_in == 0) {
            input = more();
            if (input.empty()) {
                inflateEnd(&zs);
                throw CorruptRecord(offset, "truncated gzip member");
            }
            zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
            zs.avail_in = static_cast<uInt>(input.size());
        }
        zs.next_out = buffer.data();
        zs.avail_out = static_cast<uInt>(buffer.size());
        auto before = zs.avail_in;
        ret = inflate(&zs, Z_NO_FLUSH);
        out.consumed += before - zs.avail_in;
        if (ret != Z_OK && ret != Z_STREAM_END && ret != Z_BUF_ERROR) {
            inflateEnd(&zs);
            throw CorruptRecord(offset, std::string("gzip error: ") + (zs.msg ? zs.msg : "data error"));
        }
        out.data.append(reinterpret_cast<const char*>(buffer.data()), buffer.size() - zs.avail_out);
    }
    inflateEnd(&zs);
    return out;
}

} // namespace

WarcRecord parse_record(std::string_view bytes, std::uint64_t offset)
{
    auto head_end = bytes.find("\r\n\r\n");
    if (head_end == std::string_view::npos) {
        throw CorruptRecord(offset, "record header is not terminated");
    }
    WarcRecord r;
    auto length = parse_header(bytes.substr(0, head_end), offset, r);
    auto body = bytes.substr(head_end + 4);
    if (body.size() < length) {
        throw CorruptRecord(offset, "record block is truncated");
    }
    r.block = std::string(body.substr(0, static_cast<std::size_t>(length)));
    if (body.substr(static_cast<std::size_t>(length)) != "\r\n\r\n") {
        throw CorruptRecord(offset, "record is not followed by CRLF CRLF");
    }
    verify_block(r, offset);
    return r;
}

WarcReader::WarcReader(const std::filesystem::path& path) : path_(path)
{
    file_ = std::fopen(path.c_str(), "rb");
    if (file_ == nullptr) {
        throw IoError("cannot open WARC file: " + path.string());
    }
    std::fseek(file_, 0, SEEK_END);
    size_ = static_cast<std::uint64_t>(std::ftell(file_));
    std::fseek(file_, 0, SEEK_SET);
    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, file_) == 2) {
        gzip_ = magic[0] == 0x1f && magic[1] == 0x8b;
    }
    std::fseek(file_, 0, SEEK_SET);
}

WarcReader::~WarcReader()
{
    if (file_ != nullptr) {
        std::fclose(file_);
    }
}

std::optional<ReadRecord> WarcReader::next()
{
    if (stopped_ || position_ >= size_) {
        return std::nullopt;
    }
    return gzip_ ? next_gzip() : next_plain();
}

std::optional<ReadRecord> WarcReader::next_plain()
{
    auto start = position_;
    std::fseek(file_, static_cast<long>(start), SEEK_SET);
    std::string head;
    int c;
    while ((c = std::fgetc(file_)) != EOF) {
        head.push_back(static_cast<char>(c));
        if (head.size() >= 4 && head.compare(head.size() - 4, 4, "\r\n\r\n") == 0) {
            break;
        }
        if (head.size() > kMaxHeaderBytes) {
            stopped_ = true;
            throw CorruptRecord(start, "record header exceeds size limit");
        }
    }
    if (head.size() < 4 || head.compare(head.size() - 4, 4, "\r\n\r\n") != 0) {
        stopped_ = true;
        throw CorruptRecord(start, "record header is truncated");
    }
    ReadRecord out;
    out.offset = start;
    std::uint64_t length = 0;
    try {
        length = parse_header(std::string_view(head).substr(0, head.size() - 4), start, out.record);
    } catch (const CorruptRecord&) {
        stopped_ = true;
        throw;
    }
    if (head.size() + length + 4 > size_ - start) {
        stopped_ = true;
        throw CorruptRecord(start, "record block is truncated");
    }
    out.record.block.resize(static_cast<std::size_t>(length));
    if (length > 0 && std::fread(out.record.block.data(), 1, out.record.block.size(), file_) != length) {
        stopped_ = true;
        throw IoError("read failed in " + path_.string());
    }
    char trailer[4] = {};
    if (std::fread(trailer, 1, 4, file_) != 4 || std::string_view(trailer, 4) != "\r\n\r\n") {
        stopped_ = true;
        throw CorruptRecord(start, "record is not followed by CRLF CRLF");
    }
    out.length = head.size() + length + 4;
    position_ = start + out.length;
    verify_block(out.record, start);
    return out;
}

std::optional<ReadRecord> WarcReader::next_gzip()
{
    auto start = position_;
    std::fseek(file_, static_cast<long>(start), SEEK_SET);
    std::array<char, 64 * 1024> chunk{};
    Inflated member;
    try {
        member = inflate_member(
            [&]() -> std::string_view {
                auto n = std::fread(chunk.data(), 1, chunk.size(), file_);
                return std::string_view(chunk.data(), n);
            },
            start);
    } catch (const CorruptRecord&) {
        // Resynchronise on the next gzip member header.
        std::fseek(file_, static_cast<long>(start + 1), SEEK_SET);
        std::uint64_t pos = start + 1;
        int prev2 = -1, prev1 = -1, c;
        position_ = size_;
        while ((c = std::fgetc(file_)) != EOF) {
            if (prev2 == 0x1f && prev1 == 0x8b && c == 0x08) {
                position_ = pos - 2;
                break;
            }
            prev2 = prev1;
            prev1 = c;
            ++pos;
        }
        throw;
    }
    position_ = start + member.consumed;
    ReadRecord out;
    out.offset = start;
    out.length = member.consumed;
    out.record = parse_record(member.data, start);
    return out;
}

std::vector<ReadRecord> read_records(const std::filesystem::path& path)
{
    WarcReader reader(path);
    std::vector<ReadRecord> out;
    while (auto r = reader.next()) {
        out.push_back(std::move(*r));
    }
    return out;
}

ScanResult scan_records(const std::filesystem::path& path)
{
    WarcReader reader(path);
    ScanResult out;
    while (true) {
        try {
            auto r = reader.next();
            if (!r) {
                break;
            }
            out.records.push_back(std::move(*r));
        } catch (const CorruptRecord& e) {
            out.errors.push_back(e);
        }
    }
    return out;
}

ReadRecord read_record_at(const std::filesystem::path& path, std::uint64_t offset, std::uint64_t length)
{
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) {
        throw IoError("cannot open WARC file: " + path.string());
    }
    std::string bytes(static_cast<std::size_t>(length), '\0');
    std::fseek(f, static_cast<long>(offset), SEEK_SET);
    auto n = std::fread(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    if (n != length) {
        throw CorruptRecord(offset, "range extends past end of file");
    }
    ReadRecord out;
    out.offset = offset;
    out.length = length;
    if (is_gzip_magic(bytes)) {
        bool fed = false;
        auto member = inflate_member(
            [&]() -> std::string_view {
                if (fed) {
                    return {};
                }
                fed = true;
                return bytes;
            },
            offset);
        if (member.consumed != length) {
            throw CorruptRecord(offset, "range does not cover exactly one gzip member");
        }
        out.record = parse_record(member.data, offset);
    } else {
        out.record = parse_record(bytes, offset);
    }
    return out;
}

} // namespace tracer::warc
