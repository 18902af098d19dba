#include "tracer/util/json.hpp"

#include <fstream>
#include <sstream>

#include "tracer/util/error.hpp"

namespace tracer {

std::string to_canonical_json(const Json& doc) { return doc.dump(2, ' ', false) + "\n"; }

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

} // namespace tracer
