#include "tracer/warc/writer.hpp"

#include <array>

#include <zlib.h>

namespace tracer::warc {

namespace {

// Compresses everything pushed through it as one gzip member.
class GzipMember {
  public:
    explicit GzipMember(std::FILE* out) : out_(out)
    {
        if (deflateInit2(&zs_, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK) {
            throw IoError("deflateInit2 failed");
        }
    }
    ~GzipMember() { deflateEnd(&zs_); }
    GzipMember(const GzipMember&) = delete;
    GzipMember& operator=(const GzipMember&) = delete;

    void write(std::string_view data) { pump(data, Z_NO_FLUSH); }
    void finish() { pump({}, Z_FINISH); }
    std::uint64_t written() const { return written_; }

  private:
    void pump(std::string_view data, int flush)
    {
        zs_.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
        zs_.avail_in = static_cast<uInt>(data.size());
        int ret = Z_OK;
        do {
            zs_.next_out = buffer_.data();
            zs_.avail_out = static_cast<uInt>(buffer_.size());
            ret = deflate(&zs_, flush);
            if (ret == Z_STREAM_ERROR) {
                throw IoError("deflate failed");
            }
            auto produced = buffer_.size() - zs_.avail_out;
            if (produced > 0 && std::fwrite(buffer_.data(), 1, produced, out_) != produced) {
                throw IoError("short write to WARC file");
            }
            written_ += produced;
        } while (zs_.avail_out == 0 || (flush == Z_FINISH && ret != Z_STREAM_END));
    }

    std::FILE* out_;
    z_stream zs_{};
    std::array<Bytef, 64 * 1024> buffer_{};
    std::uint64_t written_ = 0;
};

} // namespace

WarcWriter::WarcWriter(const std::filesystem::path& path, Compression compression)
    : path_(path), compression_(compression)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    file_ = std::fopen(path.c_str(), "ab");
    if (file_ == nullptr) {
        throw IoError("cannot open WARC file for writing: " + path.string());
    }
    std::fseek(file_, 0, SEEK_END);
    offset_ = static_cast<std::uint64_t>(std::ftell(file_));
}

WarcWriter::~WarcWriter() { close(); }

WriteResult WarcWriter::write_record(const WarcRecord& record)
{
    check_record(record);
    return write_streamed(record, record.block.size(), [&](const auto& sink) { sink(record.block); });
}

WriteResult WarcWriter::write_streamed(const WarcRecord& header, std::uint64_t block_size,
                                       const BlockProducer& produce)
{
    if (file_ == nullptr) {
        throw IoError("WARC writer is closed");
    }
    if (header.content_length && *header.content_length != block_size) {
        throw InvalidRecord("declared Content-Length does not match streamed block size");
    }
    auto head = serialize_header(header, block_size);
    WriteResult result{offset_, 0};
    std::uint64_t produced = 0;

    if (compression_ == Compression::gzip_per_record) {
        GzipMember member(file_);
        member.write(head);
        produce([&](std::string_view piece) {
            produced += piece.size();
            member.write(piece);
        });
        member.write("\r\n\r\n");
        member.finish();
        result.length = member.written();
    } else {
        auto put = [&](std::string_view piece) {
            if (!piece.empty() && std::fwrite(piece.data(), 1, piece.size(), file_) != piece.size()) {
                throw IoError("short write to WARC file");
            }
        };
        put(head);
        produce([&](std::string_view piece) {
            produced += piece.size();
            put(piece);
        });
        put("\r\n\r\n");
        result.length = head.size() + produced + 4;
    }
    if (produced != block_size) {
        throw IoError("streamed block size differs from declared size");
    }
    offset_ += result.length;
    return result;
}

void WarcWriter::flush()
{
    if (file_ != nullptr) {
        std::fflush(file_);
    }
}

void WarcWriter::close()
{
    if (file_ != nullptr) {
        std::fclose(file_);
        file_ = nullptr;
    }
}

} // namespace tracer::warc
