#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace tracer {

using Json = nlohmann::ordered_json;

// Canonical text form used for every document the toolkit emits: 2-space
// indentation, insertion-ordered keys, UTF-8, trailing newline.
std::string to_canonical_json(const Json& doc);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace tracer
