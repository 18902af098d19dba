#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracer/warc/record.hpp"

namespace tracer::warc {

class CorruptRecord : public Error {
  public:
    CorruptRecord(std::uint64_t offset, std::string reason)
        : Error("corrupt WARC record at offset " + std::to_string(offset) + ": " + reason),
          offset_(offset), reason_(std::move(reason))
    {
    }
    std::uint64_t offset() const { return offset_; }
    const std::string& reason() const { return reason_; }

  private:
    std::uint64_t offset_;
    std::string reason_;
};

struct ReadRecord {
    WarcRecord record;
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

// Sequential reader over plain or gzip-per-record WARC files. After a
// CorruptRecord, next() resumes at the following record boundary when one can
// be located (always in gzip mode; in plain mode only if framing survived).
class WarcReader {
  public:
    explicit WarcReader(const std::filesystem::path& path);
    ~WarcReader();
    WarcReader(const WarcReader&) = delete;
    WarcReader& operator=(const WarcReader&) = delete;

    std::optional<ReadRecord> next();
    bool gzipped() const { return gzip_; }

  private:
    std::optional<ReadRecord> next_plain();
    std::optional<ReadRecord> next_gzip();

    std::filesystem::path path_;
    std::FILE* file_ = nullptr;
    bool gzip_ = false;
    std::uint64_t position_ = 0;
    std::uint64_t size_ = 0;
    bool stopped_ = false;
};

// All records in file order; throws the first CorruptRecord.
std::vector<ReadRecord> read_records(const std::filesystem::path& path);

struct ScanResult {
    std::vector<ReadRecord> records;
    std::vector<CorruptRecord> errors;
};

// Like read_records() but collects corruption reports and keeps going.
ScanResult scan_records(const std::filesystem::path& path);

// Reads exactly one record from the byte range [offset, offset + length).
ReadRecord read_record_at(const std::filesystem::path& path, std::uint64_t offset, std::uint64_t length);

// Parses one uncompressed record occupying the whole of `bytes`.
WarcRecord parse_record(std::string_view bytes, std::uint64_t offset);

} // namespace tracer::warc
