#include <doctest.h>

#include <fstream>

#include "digest_oracle.hpp"
#include "temp_dir.hpp"
#include "tracer/util/digest.hpp"
#include "tracer/util/json.hpp"
#include "tracer/warc/cdxj.hpp"
#include "tracer/warc/reader.hpp"
#include "tracer/warc/writer.hpp"

using namespace tracer;
using namespace tracer::warc;
using tracer::testing::oracle_payloads;
using tracer::testing::TempDir;

namespace {

std::string http_response(const std::string& body, int status = 200, const std::string& type = "text/html")
{
    return "HTTP/1.1 " + std::to_string(status) + " X\r\nContent-Type: " + type +
           "\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body;
}

void flip_byte(const std::filesystem::path& p, std::uint64_t at)
{
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekg(static_cast<std::streamoff>(at));
    char c = 0;
    f.get(c);
    f.seekp(static_cast<std::streamoff>(at));
    f.put(static_cast<char>(c ^ 0x20));
}

} // namespace

TEST_CASE("digests match the reference oracle")
{
    for (const auto& o : oracle_payloads()) {
        CHECK(payload_digest(o.payload) == o.sha1);
        CHECK(sha1_labelled(o.payload) == o.sha1);
        CHECK(sha256_hex(o.payload) == o.sha256);
    }
}

TEST_CASE("response records carry the oracle payload digest")
{
    TempDir dir;
    auto p = dir / "o.warc";
    WarcWriter w(p, Compression::none);
    auto payloads = oracle_payloads();
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        w.write_record(make_response("https://h/" + std::to_string(i), http_response(payloads[i].payload)));
    }
    w.close();
    auto records = read_records(p);
    REQUIRE(records.size() == payloads.size());
    for (std::size_t i = 0; i < payloads.size(); ++i) {
        CHECK(records[i].record.payload_digest == std::string(payloads[i].sha1));
    }
}

TEST_CASE("appends are contiguous and invalid records are refused")
{
    TempDir dir;
    auto p = dir / "a.warc";
    WarcWriter w(p, Compression::none);
    auto first = w.write_record(make_warcinfo("a.warc", {{"software", "t"}}));
    auto second = w.write_record(make_response("https://h/", http_response("x")));
    CHECK(first.offset == 0);
    CHECK(second.offset == first.offset + first.length);
    auto bad = make_response("https://h/", http_response("y"));
    bad.content_length = bad.block.size() + 1;
    CHECK_THROWS_AS(w.write_record(bad), InvalidRecord);
    w.close();
    CHECK(std::filesystem::file_size(p) == second.offset + second.length);
}

TEST_CASE("plain files round-trip byte for byte")
{
    TempDir dir;
    auto p = dir / "r.warc";
    {
        WarcWriter w(p, Compression::none);
        auto info = make_warcinfo("r.warc", {{"software", "t"}, {"format", "WARC File Format 1.1"}});
        w.write_record(info);
        auto req = make_request("https://h/x", "GET /x HTTP/1.1\r\nHost: h\r\n\r\n");
        auto res = make_response("https://h/x", http_response("<p>x</p>"));
        req.concurrent_to = res.record_id;
        w.write_record(res);
        w.write_record(req);
        w.write_record(make_metadata("https://h/x", res.record_id, {{"via", "test"}}));
    }
    auto records = read_records(p);
    REQUIRE(records.size() == 4);
    CHECK(records[0].record.type == RecordType::warcinfo);
    CHECK(records[1].record.type == RecordType::response);
    CHECK(records[2].record.type == RecordType::request);
    std::string rebuilt;
    for (const auto& r : records) {
        rebuilt += serialize_record(r.record);
    }
    CHECK(rebuilt == read_file(p));
}

TEST_CASE("corrupting any payload byte is detected")
{
    TempDir dir;
    auto p = dir / "c.warc";
    std::vector<WriteResult> spots;
    std::string body = "payload bytes that must be protected";
    {
        WarcWriter w(p, Compression::none);
        w.write_record(make_warcinfo("c.warc", {{"software", "t"}}));
        for (int i = 0; i < 3; ++i) {
            spots.push_back(w.write_record(make_response("https://h/" + std::to_string(i), http_response(body))));
        }
    }
    auto pristine = read_file(p);
    for (std::size_t rec = 0; rec < spots.size(); ++rec) {
        auto end = spots[rec].offset + spots[rec].length - 4;
        for (std::uint64_t at = end - body.size(); at < end; ++at) {
            write_file(p, pristine);
            flip_byte(p, at);
            auto scan = scan_records(p);
            REQUIRE(scan.errors.size() == 1);
            CHECK(scan.errors[0].offset() == spots[rec].offset);
        }
    }
    write_file(p, pristine.substr(0, pristine.size() - 10));
    auto scan = scan_records(p);
    REQUIRE(scan.errors.size() == 1);
    CHECK(scan.errors[0].offset() == spots.back().offset);
    CHECK_THROWS_AS(read_records(p), CorruptRecord);
}

TEST_CASE("gzip members decompress independently and resync after damage")
{
    TempDir dir;
    auto p = dir / "g.warc.gz";
    std::vector<WriteResult> spots;
    {
        WarcWriter w(p, Compression::gzip_per_record);
        for (int i = 0; i < 4; ++i) {
            spots.push_back(w.write_record(make_response("https://h/" + std::to_string(i), http_response("b"))));
        }
    }
    for (std::size_t i = 0; i < spots.size(); ++i) {
        auto one = read_record_at(p, spots[i].offset, spots[i].length);
        CHECK(one.record.target_uri == "https://h/" + std::to_string(i));
    }
    flip_byte(p, spots[1].offset + spots[1].length / 2);
    auto scan = scan_records(p);
    CHECK(scan.errors.size() == 1);
    CHECK(scan.records.size() == 3);
}

TEST_CASE("cdxj lines are sorted and resolve to their records")
{
    TempDir dir;
    auto p = dir / "x.warc.gz";
    {
        WarcWriter w(p, Compression::gzip_per_record);
        w.write_record(make_warcinfo("x.warc.gz", {{"software", "t"}}));
        w.write_record(make_response("https://b.example/y", http_response("y", 404, "text/plain")));
        w.write_record(make_request("https://b.example/y", "GET /y HTTP/1.1\r\n\r\n"));
        w.write_record(make_response("https://www.a.example/x?b=2&a=1", http_response("x")));
    }
    auto lines = build_cdxj(p);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].surt == "example,a)/x?a=1&b=2");
    CHECK(lines[1].surt == "example,b)/y");
    CHECK(lines[1].status == "404");
    CHECK(lines[1].mime == "text/plain");
    for (const auto& l : lines) {
        auto r = read_record_at(p, l.offset, l.length);
        CHECK(r.record.target_uri == l.url);
        CHECK(CdxjLine::parse(l.str()) == l);
    }
    write_cdxj(dir / "x.cdxj", lines);
    CHECK(read_cdxj(dir / "x.cdxj") == lines);

    auto empty = dir / "e.warc";
    {
        WarcWriter w(empty, Compression::none);
        w.write_record(make_warcinfo("e.warc", {{"software", "t"}}));
    }
    CHECK(build_cdxj(empty).empty());
}
