#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tracer::warc {

struct CdxjLine {
    std::string surt;
    std::string timestamp;
    std::string url;
    std::string mime;
    std::string status;
    std::string digest;
    std::uint64_t length = 0;
    std::uint64_t offset = 0;
    std::string filename;

    std::string str() const;
    static CdxjLine parse(std::string_view line);
    bool operator==(const CdxjLine&) const = default;
};

// Sort-friendly URL key: "com,example)/path?query". Host labels are reversed,
// a leading "www." is dropped, default ports are removed, the whole key is
// lowercased and query arguments are sorted.
std::string surt_key(std::string_view url);

// One line per response record sorted by (surt, timestamp). Each offset is
// re-read before returning; a mismatch raises CorruptRecord.
std::vector<CdxjLine> build_cdxj(const std::filesystem::path& warc);

void write_cdxj(const std::filesystem::path& path, const std::vector<CdxjLine>& lines);
std::vector<CdxjLine> read_cdxj(const std::filesystem::path& path);

} // namespace tracer::warc
