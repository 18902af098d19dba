#include "tracer/driver/page_script.hpp"

#include <set>

#include "tracer/util/url.hpp"

namespace tracer::driver {

const Transition* Page::transition_for(const std::string& element_id) const
{
    if (element_id.empty()) {
        return nullptr;
    }
    for (const auto& t : transitions) {
        if (t.element == element_id) {
            return &t;
        }
    }
    return nullptr;
}

const Page* PageScript::find(const std::string& url) const
{
    auto normalized = try_parse_url(url) ? normalize_uri(url) : url;
    auto it = pages.find(normalized);
    return it == pages.end() ? nullptr : &it->second;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw PageScriptError("pagescript " + path + ": " + what);
}

std::string get_string(const Json& j, const char* key, const std::string& path, bool required = false)
{
    if (!j.contains(key)) {
        if (required) {
            fail(path + "." + key, "missing");
        }
        return {};
    }
    if (!j[key].is_string()) {
        fail(path + "." + key, "must be a string");
    }
    return j[key].get<std::string>();
}

std::vector<std::string> get_strings(const Json& j, const char* key, const std::string& path)
{
    std::vector<std::string> out;
    if (!j.contains(key)) {
        return out;
    }
    if (!j[key].is_array()) {
        fail(path + "." + key, "must be an array of strings");
    }
    for (const auto& v : j[key]) {
        if (!v.is_string()) {
            fail(path + "." + key, "must be an array of strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

std::string absolute(const std::string& base, const std::string& ref, const std::string& path)
{
    auto resolved = resolve_reference(base, ref);
    if (!is_absolute_http_url(resolved)) {
        fail(path, "\"" + ref + "\" does not resolve to an http(s) URL");
    }
    return normalize_uri(resolved);
}

void collect_ids(const Node& n, std::set<std::string>& ids)
{
    if (!n.id.empty()) {
        ids.insert(n.id);
    }
    for (const auto& c : n.children) {
        collect_ids(c, ids);
    }
}

std::string escape(std::string_view s, bool attr)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += attr ? "&quot;" : "\"";
            break;
        default:
            out += c;
        }
    }
    return out;
}

bool is_form_control(const std::string& tag)
{
    return tag == "button" || tag == "input" || tag == "select" || tag == "textarea";
}

bool is_void(const std::string& tag)
{
    return tag == "img" || tag == "input" || tag == "br" || tag == "meta" || tag == "link" || tag == "hr";
}

void render_node(const Node& n, std::string& out, int depth)
{
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += "<" + n.tag;
    if (!n.id.empty()) {
        out += " id=\"" + escape(n.id, true) + "\"";
    }
    if (auto cls = n.attribute("class")) {
        out += " class=\"" + escape(*cls, true) + "\"";
    }
    if (n.href) {
        out += " href=\"" + escape(*n.href, true) + "\"";
    }
    if (n.disabled) {
        out += is_form_control(n.tag) ? " disabled" : " aria-disabled=\"true\"";
    }
    for (const auto& [k, v] : n.attributes) {
        out += " " + k + "=\"" + escape(v, true) + "\"";
    }
    out += ">";
    if (is_void(n.tag)) {
        out += "\n";
        return;
    }
    out += escape(n.text, false);
    if (!n.children.empty()) {
        out += "\n";
        for (const auto& c : n.children) {
            render_node(c, out, depth + 1);
        }
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
    }
    out += "</" + n.tag + ">\n";
}

} // namespace

Node node_from_json(const Json& j, const std::string& path)
{
    if (!j.is_object()) {
        fail(path, "element must be an object");
    }
    Node n;
    n.tag = get_string(j, "tag", path, true);
    if (n.tag.empty()) {
        fail(path + ".tag", "must not be empty");
    }
    n.id = get_string(j, "id", path);
    n.classes = get_strings(j, "classes", path);
    if (j.contains("href")) {
        n.href = get_string(j, "href", path);
    }
    if (j.contains("disabled")) {
        if (!j["disabled"].is_boolean()) {
            fail(path + ".disabled", "must be a boolean");
        }
        n.disabled = j["disabled"].get<bool>();
    }
    if (j.contains("attributes")) {
        if (!j["attributes"].is_object()) {
            fail(path + ".attributes", "must be an object");
        }
        for (const auto& [k, v] : j["attributes"].items()) {
            if (!v.is_string()) {
                fail(path + ".attributes." + k, "must be a string");
            }
            n.attributes[k] = v.get<std::string>();
        }
    }
    n.text = get_string(j, "text", path);
    if (j.contains("children")) {
        if (!j["children"].is_array()) {
            fail(path + ".children", "must be an array");
        }
        for (std::size_t i = 0; i < j["children"].size(); ++i) {
            n.children.push_back(node_from_json(j["children"][i], path + ".children[" + std::to_string(i) + "]"));
        }
    }
    return n;
}

Json node_to_json(const Node& n)
{
    Json j = Json::object();
    j["tag"] = n.tag;
    if (!n.id.empty()) {
        j["id"] = n.id;
    }
    if (!n.classes.empty()) {
        j["classes"] = n.classes;
    }
    if (n.href) {
        j["href"] = *n.href;
    }
    if (n.disabled) {
        j["disabled"] = true;
    }
    if (!n.attributes.empty()) {
        Json a = Json::object();
        for (const auto& [k, v] : n.attributes) {
            a[k] = v;
        }
        j["attributes"] = std::move(a);
    }
    if (!n.text.empty()) {
        j["text"] = n.text;
    }
    if (!n.children.empty()) {
        Json c = Json::array();
        for (const auto& child : n.children) {
            c.push_back(node_to_json(child));
        }
        j["children"] = std::move(c);
    }
    return j;
}

PageScript parse_page_script(const Json& j)
{
    if (!j.is_object()) {
        fail("$", "document must be an object");
    }
    auto version = get_string(j, "pagescript_version", "$", true);
    if (version != kPageScriptVersion) {
        fail("$.pagescript_version", "unsupported version " + version);
    }
    if (!j.contains("pages") || !j["pages"].is_object()) {
        fail("$.pages", "must be an object keyed by URL");
    }
    PageScript script;
    for (const auto& [url, pj] : j["pages"].items()) {
        std::string path = "$.pages[\"" + url + "\"]";
        if (!is_absolute_http_url(url)) {
            fail(path, "page key must be an absolute http(s) URL");
        }
        if (!pj.is_object()) {
            fail(path, "page must be an object");
        }
        auto key = normalize_uri(url);
        Page page;
        page.title = get_string(pj, "title", path);
        page.script = get_string(pj, "script", path);
        if (pj.contains("body")) {
            if (!pj["body"].is_array()) {
                fail(path + ".body", "must be an array");
            }
            for (std::size_t i = 0; i < pj["body"].size(); ++i) {
                page.body.push_back(node_from_json(pj["body"][i], path + ".body[" + std::to_string(i) + "]"));
            }
        }
        for (const auto& r : get_strings(pj, "resources", path)) {
            page.resources.push_back(absolute(key, r, path + ".resources"));
        }
        std::set<std::string> ids;
        for (const auto& n : page.body) {
            collect_ids(n, ids);
        }
        if (pj.contains("transitions")) {
            if (!pj["transitions"].is_array()) {
                fail(path + ".transitions", "must be an array");
            }
            for (std::size_t i = 0; i < pj["transitions"].size(); ++i) {
                const auto& tj = pj["transitions"][i];
                auto tpath = path + ".transitions[" + std::to_string(i) + "]";
                if (!tj.is_object()) {
                    fail(tpath, "must be an object");
                }
                Transition t;
                t.element = get_string(tj, "element", tpath, true);
                if (ids.count(t.element) == 0) {
                    fail(tpath + ".element", "no element with id \"" + t.element + "\" on the page");
                }
                if (tj.contains("navigate")) {
                    t.navigate = absolute(key, get_string(tj, "navigate", tpath), tpath + ".navigate");
                }
                if (tj.contains("push_state")) {
                    t.push_state = absolute(key, get_string(tj, "push_state", tpath), tpath + ".push_state");
                }
                if (t.navigate && t.push_state) {
                    fail(tpath, "navigate and push_state are exclusive");
                }
                for (const auto& f : get_strings(tj, "fetch", tpath)) {
                    t.fetch.push_back(absolute(key, f, tpath + ".fetch"));
                }
                page.transitions.push_back(std::move(t));
            }
        }
        if (!script.pages.emplace(key, std::move(page)).second) {
            fail(path, "duplicate page after normalization");
        }
    }
    for (const auto& [url, page] : script.pages) {
        for (const auto& t : page.transitions) {
            if (t.push_state && script.pages.count(*t.push_state) == 0) {
                fail("$.pages[\"" + url + "\"]", "push_state target " + *t.push_state + " is not a defined page");
            }
        }
    }
    return script;
}

PageScript load_page_script(const std::filesystem::path& path)
{
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw PageScriptError(path.string() + ": " + e.what());
    }
    return parse_page_script(j);
}

Json page_script_to_json(const PageScript& script)
{
    Json pages = Json::object();
    for (const auto& [url, page] : script.pages) {
        Json pj = Json::object();
        if (!page.title.empty()) {
            pj["title"] = page.title;
        }
        Json body = Json::array();
        for (const auto& n : page.body) {
            body.push_back(node_to_json(n));
        }
        pj["body"] = std::move(body);
        if (!page.resources.empty()) {
            pj["resources"] = page.resources;
        }
        if (!page.transitions.empty()) {
            Json ts = Json::array();
            for (const auto& t : page.transitions) {
                Json tj = Json::object();
                tj["element"] = t.element;
                if (t.navigate) {
                    tj["navigate"] = *t.navigate;
                }
                if (t.push_state) {
                    tj["push_state"] = *t.push_state;
                }
                if (!t.fetch.empty()) {
                    tj["fetch"] = t.fetch;
                }
                ts.push_back(std::move(tj));
            }
            pj["transitions"] = std::move(ts);
        }
        if (!page.script.empty()) {
            pj["script"] = page.script;
        }
        pages[url] = std::move(pj);
    }
    Json j = Json::object();
    j["pagescript_version"] = kPageScriptVersion;
    j["pages"] = std::move(pages);
    return j;
}

std::string render_html(const Page& page)
{
    std::string out = "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" +
                      escape(page.title, false) + "</title>\n";
    if (!page.script.empty()) {
        out += "<script>\n" + page.script + "\n</script>\n";
    }
    out += "</head>\n<body>\n";
    for (const auto& n : page.body) {
        render_node(n, out, 0);
    }
    out += "</body>\n</html>\n";
    return out;
}

} // namespace tracer::driver
