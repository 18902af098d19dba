#include <doctest.h>

#include "tracer/driver/dom.hpp"
#include "tracer/driver/page_script.hpp"

using namespace tracer;
using namespace tracer::driver;
using trace::Selector;
using trace::SelectorStrategy;

namespace {

Document sample()
{
    auto j = Json::parse(R"([
      {"tag": "div", "id": "main", "classes": ["wrap", "wide"], "children": [
        {"tag": "ul", "id": "files", "children": [
          {"tag": "li", "children": [{"tag": "a", "classes": ["file"], "href": "/a", "text": "a"}]},
          {"tag": "li", "children": [{"tag": "a", "classes": ["file", "big"], "href": "/b", "text": "b"}]},
          {"tag": "li", "children": [{"tag": "span", "text": "c"}]}
        ]},
        {"tag": "a", "id": "next", "href": "/next", "attributes": {"data-x": "1"}},
        {"tag": "button", "id": "go", "disabled": true}
      ]},
      {"tag": "a", "classes": ["file"], "href": "/outside"}
    ])");
    std::vector<Node> body;
    for (std::size_t i = 0; i < j.size(); ++i) {
        body.push_back(node_from_json(j[i], "$[" + std::to_string(i) + "]"));
    }
    return Document(std::move(body), "t");
}

std::vector<std::string> hrefs(const std::vector<const Node*>& nodes)
{
    std::vector<std::string> out;
    for (const auto* n : nodes) {
        out.push_back(n->href.value_or(n->tag));
    }
    return out;
}

} // namespace

TEST_CASE("css selectors resolve in document order")
{
    auto doc = sample();
    CHECK(hrefs(select(doc, {SelectorStrategy::css, "a.file"})) == std::vector<std::string>{"/a", "/b", "/outside"});
    CHECK(hrefs(select(doc, {SelectorStrategy::css, "#files a.file"})) == std::vector<std::string>{"/a", "/b"});
    CHECK(hrefs(select(doc, {SelectorStrategy::css, "ul > li > a"})) == std::vector<std::string>{"/a", "/b"});
    CHECK(select(doc, {SelectorStrategy::css, "ul > a"}).empty());
    CHECK(hrefs(select(doc, {SelectorStrategy::css, "a[data-x=\"1\"]"})) == std::vector<std::string>{"/next"});
    CHECK(hrefs(select(doc, {SelectorStrategy::css, "[href=\"/b\"], #next"})) ==
          std::vector<std::string>{"/b", "/next"});
    CHECK(select(doc, {SelectorStrategy::css, "div.wrap.wide"}).size() == 1);
    CHECK(select(doc, {SelectorStrategy::css, "*"}).size() == doc.elements().size());
    CHECK_THROWS_AS(select(doc, {SelectorStrategy::css, "a >"}), SelectorError);
}

TEST_CASE("id and class strategies")
{
    auto doc = sample();
    CHECK(select(doc, {SelectorStrategy::element_id, "next"}).size() == 1);
    CHECK(select(doc, {SelectorStrategy::element_id, "nope"}).empty());
    CHECK(hrefs(select(doc, {SelectorStrategy::html_class, "file big"})) == std::vector<std::string>{"/b"});
    CHECK(to_css({SelectorStrategy::element_id, "x"}) == "[id=\"x\"]");
    CHECK(to_css({SelectorStrategy::html_class, "a b"}) == ".a.b");
}

TEST_CASE("selection within a scope")
{
    auto doc = sample();
    auto scope = select(doc, {SelectorStrategy::element_id, "files"});
    REQUIRE(scope.size() == 1);
    CHECK(hrefs(select(doc, {SelectorStrategy::css, "a.file"}, scope[0])) == std::vector<std::string>{"/a", "/b"});
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, ".//a"}, scope[0])) == std::vector<std::string>{"/a", "/b"});
}

TEST_CASE("xpath subset")
{
    auto doc = sample();
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, "/html/body/div/ul/li[2]/a"})) ==
          std::vector<std::string>{"/b"});
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, "//li[1]/a"})) == std::vector<std::string>{"/a"});
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, "//a[@id='next']"})) == std::vector<std::string>{"/next"});
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, "//a[contains(@class,'file')]"})) ==
          std::vector<std::string>{"/a", "/b", "/outside"});
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, "//ul/li[last()]/span"})) == std::vector<std::string>{"span"});
    CHECK(hrefs(select(doc, {SelectorStrategy::xpath, "//a[text()='b']"})) == std::vector<std::string>{"/b"});
    CHECK(select(doc, {SelectorStrategy::xpath, "//button[@disabled]"}).size() == 1);
    CHECK_THROWS_AS(select(doc, {SelectorStrategy::xpath, "//a[@"}), SelectorError);
}

TEST_CASE("disabled state covers the flag and aria-disabled")
{
    auto doc = sample();
    CHECK(select(doc, {SelectorStrategy::element_id, "go"})[0]->is_disabled());
    CHECK_FALSE(select(doc, {SelectorStrategy::element_id, "next"})[0]->is_disabled());
    Node a;
    a.tag = "a";
    a.attributes["aria-disabled"] = "true";
    CHECK(a.is_disabled());
}

TEST_CASE("page script round-trips through JSON and validates transitions")
{
    auto j = Json::parse(R"({
      "pagescript_version": "1.0",
      "pages": {
        "http://Example.com/a": {
          "title": "A",
          "body": [{"tag": "button", "id": "next"}],
          "resources": ["/img.png"],
          "transitions": [{"element": "next", "push_state": "/b", "fetch": ["/b"]}]
        },
        "http://example.com/b": {"body": []}
      }
    })");
    auto script = parse_page_script(j);
    REQUIRE(script.find("http://example.com/a#frag") != nullptr);
    const auto* a = script.find("http://example.com/a");
    CHECK(a->resources == std::vector<std::string>{"http://example.com/img.png"});
    CHECK(a->transitions[0].push_state == "http://example.com/b");
    CHECK(parse_page_script(page_script_to_json(script)) == script);

    auto bad = j;
    bad["pages"]["http://example.com/a"]["transitions"][0]["element"] = "missing";
    CHECK_THROWS_AS(parse_page_script(bad), PageScriptError);
    bad = j;
    bad["pages"]["http://example.com/a"]["transitions"][0]["push_state"] = "/undefined";
    CHECK_THROWS_AS(parse_page_script(bad), PageScriptError);
}

TEST_CASE("html rendering marks disabled controls the way browsers read them")
{
    driver::Page page;
    page.title = "x & y";
    Node b;
    b.tag = "button";
    b.id = "next";
    b.disabled = true;
    Node a;
    a.tag = "a";
    a.id = "prev";
    a.disabled = true;
    page.body = {b, a};
    auto html = render_html(page);
    CHECK(html.find("<title>x &amp; y</title>") != std::string::npos);
    CHECK(html.find("<button id=\"next\" disabled>") != std::string::npos);
    CHECK(html.find("<a id=\"prev\" aria-disabled=\"true\">") != std::string::npos);
}
