#include <doctest.h>

#include <random>

#include "tracer/util/digest.hpp"
#include "tracer/util/error.hpp"
#include "tracer/util/http.hpp"
#include "tracer/util/time.hpp"
#include "tracer/util/url.hpp"

using namespace tracer;

TEST_CASE("base32 matches RFC 4648 vectors")
{
    CHECK(base32_encode("") == "");
    CHECK(base32_encode("f") == "MY");
    CHECK(base32_encode("fo") == "MZXQ");
    CHECK(base32_encode("foo") == "MZXW6");
    CHECK(base32_encode("foob") == "MZXW6YQ");
    CHECK(base32_encode("fooba") == "MZXW6YTB");
    CHECK(base32_encode("foobar") == "MZXW6YTBOI");
}

TEST_CASE("incremental sha1 equals one-shot")
{
    std::string data(100000, '\0');
    std::mt19937 rng(3);
    for (auto& c : data) {
        c = static_cast<char>(rng());
    }
    Sha1 h;
    for (std::size_t i = 0; i < data.size(); i += 977) {
        h.update(std::string_view(data).substr(i, 977));
    }
    CHECK(h.finish() == sha1_raw(data));
}

TEST_CASE("url normalization")
{
    CHECK(normalize_uri("HTTP://Example.COM") == "http://example.com/");
    CHECK(normalize_uri("https://h/a/./b/../c?q=1#frag") == "https://h/a/c?q=1");
    CHECK(normalize_uri("https://h/A?B=C") == "https://h/A?B=C");
    CHECK(remove_dot_segments("/a/b/c/./../../g") == "/a/g");
    CHECK(resolve_reference("http://a/b/c/d;p?q", "../g") == "http://a/b/g");
    CHECK(resolve_reference("http://a/b/c/d;p?q", "//g") == "http://g");
    CHECK(resolve_reference("http://a/b/c/d;p?q", "?y") == "http://a/b/c/d;p?y");
    CHECK(resolve_reference("http://a/b/c/d;p?q", "#s") == "http://a/b/c/d;p?q#s");
    CHECK_THROWS_AS(parse_url("not a url"), InvalidUrl);
    CHECK(is_absolute_http_url("https://x/"));
    CHECK_FALSE(is_absolute_http_url("ftp://x/"));
}

TEST_CASE("normalization is idempotent")
{
    std::mt19937 rng(99);
    const std::vector<std::string> parts{"a", "B", ".", "..", "%41", "x y", "", "~u", "q=1"};
    for (int i = 0; i < 500; ++i) {
        std::string u = rng() % 2 ? "HTTP://" : "https://";
        u += rng() % 2 ? "Host.Example" : "h";
        for (unsigned k = rng() % 6; k > 0; --k) {
            u += "/" + parts[rng() % parts.size()];
        }
        if (rng() % 3 == 0) {
            u += "?" + parts[rng() % parts.size()];
        }
        if (rng() % 3 == 0) {
            u += "#f";
        }
        auto once = normalize_uri(u);
        CHECK(normalize_uri(once) == once);
    }
}

TEST_CASE("time formats")
{
    auto t = parse_rfc3339("2024-02-29T12:30:45.123+02:00");
    REQUIRE(t);
    CHECK(format_iso8601(*t).rfind("2024-02-29T10:30:45", 0) == 0);
    CHECK(format_timestamp14(*parse_rfc3339("2024-01-15T10:00:00Z")) == "20240115100000");
    CHECK_FALSE(parse_rfc3339("2024-13-01T00:00:00Z"));
    CHECK_FALSE(parse_rfc3339("yesterday"));
    CHECK(timestamp14_from_iso("2024-01-15T10:00:00Z") == "20240115100000");
}

TEST_CASE("http framing and chunked decoding")
{
    auto msg = http::parse_message("HTTP/1.1 200 OK\r\nTransfer-Encoding: chunked\r\n\r\n"
                                   "3\r\nabc\r\n2;ext=1\r\nde\r\n0\r\nX-T: 1\r\n\r\n",
                                   true);
    CHECK(msg.payload == "abcde");
    http::ChunkedDecoder d;
    std::string out;
    std::string wire = "4\r\nwiki\r\n5\r\npedia\r\n0\r\n\r\n";
    for (char c : wire) {
        d.feed(std::string_view(&c, 1), out);
    }
    CHECK(d.done());
    CHECK(out == "wikipedia");
    auto head = http::parse_head("GET /x HTTP/1.1\r\nHost: h\r\ncontent-length: 3");
    CHECK(head.get("Content-Length") == "3");
    CHECK(http::parse_status_line("HTTP/1.1 404 Not Found").status == 404);
    CHECK_THROWS(http::parse_status_line("garbage"));
}
