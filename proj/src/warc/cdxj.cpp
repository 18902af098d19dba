#include "tracer/warc/cdxj.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "tracer/util/http.hpp"
#include "tracer/util/json.hpp"
#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"
#include "tracer/warc/reader.hpp"

namespace tracer::warc {

namespace {

bool is_ipv4(std::string_view host)
{
    return !host.empty() && std::all_of(host.begin(), host.end(), [](char c) {
        return (c >= '0' && c <= '9') || c == '.';
    });
}

std::string sorted_query(std::string_view query)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= query.size()) {
        auto amp = query.find('&', start);
        auto piece = query.substr(start, amp == std::string_view::npos ? std::string_view::npos : amp - start);
        if (!piece.empty()) {
            parts.emplace_back(piece);
        }
        if (amp == std::string_view::npos) {
            break;
        }
        start = amp + 1;
    }
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) {
            out += '&';
        }
        out += p;
    }
    return out;
}

} // namespace

std::string surt_key(std::string_view url_text)
{
    auto url = try_parse_url(url_text);
    if (!url) {
        return to_lower(url_text);
    }
    auto host = to_lower(url->host);
    std::string key;
    if (is_ipv4(host) || host.front() == '[') {
        key = host;
    } else {
        if (host.rfind("www.", 0) == 0) {
            host.erase(0, 4);
        }
        std::vector<std::string> labels;
        std::stringstream ss(host);
        std::string label;
        while (std::getline(ss, label, '.')) {
            labels.push_back(label);
        }
        for (auto it = labels.rbegin(); it != labels.rend(); ++it) {
            if (!key.empty()) {
                key += ',';
            }
            key += *it;
        }
    }
    if (url->port && *url->port != default_port(url->scheme)) {
        key += ":" + std::to_string(*url->port);
    }
    key += ")";
    key += url->path.empty() ? "/" : to_lower(url->path);
    if (url->query && !url->query->empty()) {
        key += "?" + to_lower(sorted_query(*url->query));
    }
    return key;
}

std::string CdxjLine::str() const
{
    Json payload = Json::object();
    payload["url"] = url;
    payload["mime"] = mime;
    payload["status"] = status;
    payload["digest"] = digest;
    payload["length"] = std::to_string(length);
    payload["offset"] = std::to_string(offset);
    payload["filename"] = filename;
    return surt + " " + timestamp + " " + payload.dump();
}

CdxjLine CdxjLine::parse(std::string_view line)
{
    auto sp1 = line.find(' ');
    auto sp2 = sp1 == std::string_view::npos ? sp1 : line.find(' ', sp1 + 1);
    if (sp2 == std::string_view::npos) {
        throw Error("malformed CDXJ line");
    }
    CdxjLine out;
    out.surt = std::string(line.substr(0, sp1));
    out.timestamp = std::string(line.substr(sp1 + 1, sp2 - sp1 - 1));
    auto payload = Json::parse(line.substr(sp2 + 1));
    out.url = payload.value("url", "");
    out.mime = payload.value("mime", "");
    out.status = payload.value("status", "");
    out.digest = payload.value("digest", "");
    out.length = std::stoull(payload.value("length", "0"));
    out.offset = std::stoull(payload.value("offset", "0"));
    out.filename = payload.value("filename", "");
    return out;
}

std::vector<CdxjLine> build_cdxj(const std::filesystem::path& warc)
{
    std::vector<CdxjLine> lines;
    auto filename = warc.filename().string();
    for (const auto& rr : read_records(warc)) {
        const auto& r = rr.record;
        if (r.type != RecordType::response || !r.target_uri) {
            continue;
        }
        CdxjLine line;
        line.url = *r.target_uri;
        line.surt = surt_key(line.url);
        line.timestamp = timestamp14_from_iso(r.date).value_or("00000000000000");
        try {
            auto end = http::find_head_end(r.block);
            auto head = http::parse_head(std::string_view(r.block).substr(0, end ? *end - 4 : r.block.size()));
            line.status = std::to_string(http::parse_status_line(head.start_line).status);
            auto mime = head.get("Content-Type").value_or("unk");
            line.mime = mime.substr(0, mime.find(';'));
            while (!line.mime.empty() && line.mime.back() == ' ') {
                line.mime.pop_back();
            }
        } catch (const Error&) {
            line.status = "-";
            line.mime = "unk";
        }
        auto digest = r.payload_digest.value_or(r.block_digest);
        line.digest = digest.rfind("sha1:", 0) == 0 ? digest.substr(5) : digest;
        line.offset = rr.offset;
        line.length = rr.length;
        line.filename = filename;
        lines.push_back(std::move(line));
    }
    std::stable_sort(lines.begin(), lines.end(), [](const CdxjLine& a, const CdxjLine& b) {
        return std::tie(a.surt, a.timestamp) < std::tie(b.surt, b.timestamp);
    });
    for (const auto& line : lines) {
        auto check = read_record_at(warc, line.offset, line.length);
        if (check.record.target_uri != line.url) {
            throw CorruptRecord(line.offset, "index entry does not resolve to its record");
        }
    }
    return lines;
}

void write_cdxj(const std::filesystem::path& path, const std::vector<CdxjLine>& lines)
{
    std::string out;
    for (const auto& line : lines) {
        out += line.str();
        out += '\n';
    }
    write_file(path, out);
}

std::vector<CdxjLine> read_cdxj(const std::filesystem::path& path)
{
    std::vector<CdxjLine> out;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(CdxjLine::parse(line));
        }
    }
    return out;
}

} // namespace tracer::warc
