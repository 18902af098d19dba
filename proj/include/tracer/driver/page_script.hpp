#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracer/driver/dom.hpp"
#include "tracer/util/json.hpp"

namespace tracer::driver {

inline constexpr std::string_view kPageScriptVersion = "1.0";

class PageScriptError : public Error {
  public:
    using Error::Error;
};

// What clicking an element does. navigate loads a new document; push_state
// swaps in the page registered under that URL without a document load (the
// in-page scripted variant). fetch lists extra resources requested either way.
struct Transition {
    std::string element; // element id on the owning page
    std::optional<std::string> navigate;
    std::optional<std::string> push_state;
    std::vector<std::string> fetch;

    bool operator==(const Transition&) const = default;
};

struct Page {
    std::string title;
    std::vector<Node> body;
    // Subresources requested when the document loads.
    std::vector<std::string> resources;
    std::vector<Transition> transitions;
    // Inline script emitted by the HTML renderer; ignored by the mock.
    std::string script;

    const Transition* transition_for(const std::string& element_id) const;
    bool operator==(const Page&) const = default;
};

struct PageScript {
    // Keys are absolute URLs as produced by normalize_uri.
    std::map<std::string, Page> pages;

    const Page* find(const std::string& url) const;
    bool operator==(const PageScript&) const = default;
};

PageScript parse_page_script(const Json& j);
PageScript load_page_script(const std::filesystem::path& path);
Json page_script_to_json(const PageScript& script);
Json node_to_json(const Node& n);
Node node_from_json(const Json& j, const std::string& path);

// Static HTML rendering of a page; the same markup a real browser would be
// served for the URL.
std::string render_html(const Page& page);

} // namespace tracer::driver
