#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string_view>

#include "tracer/warc/record.hpp"

namespace tracer::warc {

enum class Compression { none, gzip_per_record };

struct WriteResult {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
};

// Appends records to a single WARC file. Single-writer: callers serialize
// access themselves.
class WarcWriter {
  public:
    // Emits block bytes piecewise; used for spilled payloads.
    using BlockProducer = std::function<void(const std::function<void(std::string_view)>& sink)>;

    WarcWriter(const std::filesystem::path& path, Compression compression);
    ~WarcWriter();
    WarcWriter(const WarcWriter&) = delete;
    WarcWriter& operator=(const WarcWriter&) = delete;

    // Throws InvalidRecord (nothing written) or IoError.
    WriteResult write_record(const WarcRecord& record);

    // Writes a record whose block is produced incrementally. The record's
    // digests and content_length must already describe the produced block.
    WriteResult write_streamed(const WarcRecord& header, std::uint64_t block_size, const BlockProducer& produce);

    void flush();
    void close();

    const std::filesystem::path& path() const { return path_; }
    Compression compression() const { return compression_; }

  private:
    std::filesystem::path path_;
    Compression compression_;
    std::FILE* file_ = nullptr;
    std::uint64_t offset_ = 0;
};

} // namespace tracer::warc
