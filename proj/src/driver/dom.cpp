#include "tracer/driver/dom.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace tracer::driver {

std::optional<std::string> Node::attribute(const std::string& name) const
{
    if (name == "id") {
        return id.empty() ? std::nullopt : std::optional<std::string>(id);
    }
    if (name == "class") {
        if (classes.empty()) {
            return std::nullopt;
        }
        std::string joined;
        for (const auto& c : classes) {
            joined += (joined.empty() ? "" : " ") + c;
        }
        return joined;
    }
    if (name == "href" && href) {
        return href;
    }
    if (name == "disabled" && disabled && (tag == "button" || tag == "input" || tag == "select" || tag == "textarea")) {
        return std::string("true");
    }
    if (name == "aria-disabled" && disabled && !(tag == "button" || tag == "input" || tag == "select" || tag == "textarea")) {
        return std::string("true");
    }
    auto it = attributes.find(name);
    if (it == attributes.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool Node::has_class(const std::string& cls) const
{
    return std::find(classes.begin(), classes.end(), cls) != classes.end();
}

bool Node::is_disabled() const
{
    if (disabled || attributes.count("disabled") != 0) {
        return true;
    }
    auto aria = attributes.find("aria-disabled");
    return aria != attributes.end() && aria->second == "true";
}

Document::Document(std::vector<Node> body, std::string title)
{
    Node html;
    html.tag = "html";
    Node head;
    head.tag = "head";
    if (!title.empty()) {
        Node t;
        t.tag = "title";
        t.text = std::move(title);
        head.children.push_back(std::move(t));
    }
    Node body_node;
    body_node.tag = "body";
    body_node.children = std::move(body);
    html.children.push_back(std::move(head));
    html.children.push_back(std::move(body_node));
    root_->children.push_back(std::move(html));
    build();
}

void Document::build()
{
    order_.clear();
    parents_.clear();
    index_.clear();
    std::vector<std::pair<const Node*, const Node*>> stack{{root_.get(), nullptr}};
    // Iterative pre-order; the implicit root is not an element.
    while (!stack.empty()) {
        auto [node, parent] = stack.back();
        stack.pop_back();
        if (node != root_.get()) {
            index_[node] = order_.size();
            order_.push_back(node);
            parents_[node] = parent;
        }
        for (auto it = node->children.rbegin(); it != node->children.rend(); ++it) {
            stack.emplace_back(&*it, node == root_.get() ? nullptr : node);
        }
    }
}

std::optional<std::size_t> Document::index_of(const Node* node) const
{
    auto it = index_.find(node);
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Node* Document::parent_of(const Node* node) const
{
    auto it = parents_.find(node);
    return it == parents_.end() ? nullptr : it->second;
}

namespace {

bool is_ident_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_';
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// ---- CSS ----

struct AttrTest {
    std::string name;
    std::optional<std::string> value;
};

struct Compound {
    std::string tag; // empty or "*" = any
    std::vector<std::string> ids;
    std::vector<std::string> classes;
    std::vector<AttrTest> attrs;

    bool matches(const Node& n) const
    {
        if (!tag.empty() && tag != "*" && lower(n.tag) != tag) {
            return false;
        }
        for (const auto& id : ids) {
            if (n.id != id) {
                return false;
            }
        }
        for (const auto& c : classes) {
            if (!n.has_class(c)) {
                return false;
            }
        }
        for (const auto& a : attrs) {
            auto v = n.attribute(a.name);
            if (!v || (a.value && *v != *a.value)) {
                return false;
            }
        }
        return true;
    }
};

// compounds[i] is joined to compounds[i-1] by combinators[i-1] (' ' or '>').
struct Complex {
    std::vector<Compound> compounds;
    std::vector<char> combinators;
};

class CssParser {
  public:
    explicit CssParser(std::string_view text) : s_(text) {}

    std::vector<Complex> parse()
    {
        std::vector<Complex> list;
        skip_ws();
        while (true) {
            list.push_back(complex());
            skip_ws();
            if (eof()) {
                break;
            }
            expect(',');
            skip_ws();
        }
        return list;
    }

  private:
    Complex complex()
    {
        Complex c;
        c.compounds.push_back(compound());
        while (true) {
            bool ws = skip_ws();
            if (eof() || peek() == ',') {
                break;
            }
            char comb = ' ';
            if (peek() == '>') {
                comb = '>';
                ++pos_;
                skip_ws();
            } else if (!ws) {
                fail("unexpected character");
            }
            c.combinators.push_back(comb);
            c.compounds.push_back(compound());
        }
        return c;
    }

    Compound compound()
    {
        Compound c;
        bool any = false;
        if (!eof() && (peek() == '*' || is_ident_char(peek()))) {
            c.tag = peek() == '*' ? (++pos_, std::string("*")) : lower(ident());
            any = true;
        }
        while (!eof()) {
            char ch = peek();
            if (ch == '#') {
                ++pos_;
                c.ids.push_back(ident());
            } else if (ch == '.') {
                ++pos_;
                c.classes.push_back(ident());
            } else if (ch == '[') {
                ++pos_;
                skip_ws();
                AttrTest a{lower(ident()), std::nullopt};
                skip_ws();
                if (!eof() && peek() == '=') {
                    ++pos_;
                    skip_ws();
                    a.value = (peek() == '"' || peek() == '\'') ? quoted() : ident();
                    skip_ws();
                }
                expect(']');
                c.attrs.push_back(std::move(a));
            } else {
                break;
            }
            any = true;
        }
        if (!any) {
            fail("empty compound selector");
        }
        return c;
    }

    std::string ident()
    {
        auto start = pos_;
        while (!eof() && (is_ident_char(peek()) || peek() == '\\')) {
            if (peek() == '\\') {
                ++pos_;
            }
            ++pos_;
        }
        if (start == pos_) {
            fail("identifier expected");
        }
        std::string out;
        for (auto i = start; i < pos_; ++i) {
            if (s_[i] == '\\' && i + 1 < pos_) {
                ++i;
            }
            out += s_[i];
        }
        return out;
    }

    std::string quoted()
    {
        char q = s_[pos_++];
        std::string out;
        while (!eof() && peek() != q) {
            if (peek() == '\\' && pos_ + 1 < s_.size()) {
                ++pos_;
            }
            out += s_[pos_++];
        }
        expect(q);
        return out;
    }

    bool skip_ws()
    {
        bool any = false;
        while (!eof() && std::isspace(static_cast<unsigned char>(peek())) != 0) {
            ++pos_;
            any = true;
        }
        return any;
    }
    void expect(char c)
    {
        if (eof() || peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw SelectorError("css selector \"" + std::string(s_) + "\": " + what + " at offset " + std::to_string(pos_));
    }
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }

    std::string_view s_;
    std::size_t pos_ = 0;
};

bool matches_complex(const Document& doc, const Node* node, const Complex& c, std::size_t idx)
{
    if (!c.compounds[idx].matches(*node)) {
        return false;
    }
    if (idx == 0) {
        return true;
    }
    char comb = c.combinators[idx - 1];
    for (auto* p = doc.parent_of(node); p != nullptr; p = doc.parent_of(p)) {
        if (matches_complex(doc, p, c, idx - 1)) {
            return true;
        }
        if (comb == '>') {
            break;
        }
    }
    return false;
}

bool is_descendant(const Document& doc, const Node* node, const Node* ancestor)
{
    for (auto* p = doc.parent_of(node); p != nullptr; p = doc.parent_of(p)) {
        if (p == ancestor) {
            return true;
        }
    }
    return false;
}

std::vector<const Node*> select_css(const Document& doc, std::string_view css, const Node* within)
{
    auto list = CssParser(css).parse();
    std::vector<const Node*> out;
    for (const auto* n : doc.elements()) {
        if (within != nullptr && !is_descendant(doc, n, within)) {
            continue;
        }
        for (const auto& c : list) {
            if (matches_complex(doc, n, c, c.compounds.size() - 1)) {
                out.push_back(n);
                break;
            }
        }
    }
    return out;
}

// ---- XPath ----

struct XPred {
    enum class Kind { position, last, has_attr, attr_eq, contains_attr, text_eq } kind;
    int position = 0;
    std::string name;
    std::string value;
};

struct XStep {
    bool descendant = false; // preceded by '//'
    std::string name;        // "*" for any, "." self, ".." parent
    std::vector<std::vector<XPred>> predicates; // each predicate is an 'and' list
};

struct XPath {
    bool absolute = false;
    std::vector<XStep> steps;
};

class XPathParser {
  public:
    explicit XPathParser(std::string_view text) : s_(text) {}

    XPath parse()
    {
        XPath p;
        skip_ws();
        if (starts("/")) {
            p.absolute = true;
        }
        bool first = true;
        while (!eof()) {
            XStep step;
            if (starts("//")) {
                pos_ += 2;
                step.descendant = true;
            } else if (starts("/")) {
                ++pos_;
            } else if (!first) {
                fail("'/' expected");
            }
            first = false;
            skip_ws();
            if (starts("..")) {
                pos_ += 2;
                step.name = "..";
            } else if (starts(".")) {
                ++pos_;
                step.name = ".";
            } else if (starts("*")) {
                ++pos_;
                step.name = "*";
            } else {
                step.name = lower(name());
            }
            skip_ws();
            while (starts("[")) {
                ++pos_;
                step.predicates.push_back(predicate());
                expect(']');
                skip_ws();
            }
            p.steps.push_back(std::move(step));
        }
        if (p.steps.empty()) {
            fail("empty path");
        }
        return p;
    }

  private:
    std::vector<XPred> predicate()
    {
        std::vector<XPred> terms;
        while (true) {
            skip_ws();
            terms.push_back(term());
            skip_ws();
            if (starts("and") && pos_ + 3 < s_.size() && !is_ident_char(s_[pos_ + 3])) {
                pos_ += 3;
                continue;
            }
            return terms;
        }
    }

    XPred term()
    {
        XPred p{};
        if (!eof() && std::isdigit(static_cast<unsigned char>(peek())) != 0) {
            p.kind = XPred::Kind::position;
            p.position = std::stoi(digits());
            if (p.position < 1) {
                fail("positions start at 1");
            }
            return p;
        }
        if (starts("last()")) {
            pos_ += 6;
            p.kind = XPred::Kind::last;
            return p;
        }
        if (starts("contains(")) {
            pos_ += 9;
            skip_ws();
            expect('@');
            p.kind = XPred::Kind::contains_attr;
            p.name = lower(name());
            skip_ws();
            expect(',');
            skip_ws();
            p.value = literal();
            skip_ws();
            expect(')');
            return p;
        }
        if (starts("text()")) {
            pos_ += 6;
            skip_ws();
            expect('=');
            skip_ws();
            p.kind = XPred::Kind::text_eq;
            p.value = literal();
            return p;
        }
        expect('@');
        p.name = lower(name());
        skip_ws();
        if (starts("=")) {
            ++pos_;
            skip_ws();
            p.kind = XPred::Kind::attr_eq;
            p.value = literal();
        } else {
            p.kind = XPred::Kind::has_attr;
        }
        return p;
    }

    std::string name()
    {
        auto start = pos_;
        while (!eof() && (is_ident_char(peek()) || peek() == ':')) {
            ++pos_;
        }
        if (start == pos_) {
            fail("name expected");
        }
        return std::string(s_.substr(start, pos_ - start));
    }
    std::string digits()
    {
        auto start = pos_;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek())) != 0) {
            ++pos_;
        }
        return std::string(s_.substr(start, pos_ - start));
    }
    std::string literal()
    {
        if (eof() || (peek() != '"' && peek() != '\'')) {
            fail("string literal expected");
        }
        char q = s_[pos_++];
        auto end = s_.find(q, pos_);
        if (end == std::string_view::npos) {
            fail("unterminated literal");
        }
        std::string out(s_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }
    void skip_ws()
    {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek())) != 0) {
            ++pos_;
        }
    }
    bool starts(std::string_view t) const { return s_.substr(pos_, t.size()) == t; }
    void expect(char c)
    {
        if (eof() || peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw SelectorError("xpath \"" + std::string(s_) + "\": " + what + " at offset " + std::to_string(pos_));
    }
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return s_[pos_]; }

    std::string_view s_;
    std::size_t pos_ = 0;
};

bool pred_holds(const XPred& p, const Node& n, std::size_t pos, std::size_t size)
{
    switch (p.kind) {
    case XPred::Kind::position:
        return pos == static_cast<std::size_t>(p.position);
    case XPred::Kind::last:
        return pos == size;
    case XPred::Kind::has_attr:
        return n.attribute(p.name).has_value();
    case XPred::Kind::attr_eq: {
        auto v = n.attribute(p.name);
        return v && *v == p.value;
    }
    case XPred::Kind::contains_attr: {
        auto v = n.attribute(p.name);
        return v && v->find(p.value) != std::string::npos;
    }
    case XPred::Kind::text_eq:
        return n.text == p.value;
    }
    return false;
}

void collect_self_and_descendants(const Node* n, std::vector<const Node*>& out)
{
    out.push_back(n);
    for (const auto& c : n->children) {
        collect_self_and_descendants(&c, out);
    }
}

std::vector<const Node*> select_xpath(const Document& doc, std::string_view text, const Node* within)
{
    auto path = XPathParser(text).parse();
    std::vector<const Node*> context{path.absolute || within == nullptr ? &doc.root() : within};
    for (const auto& step : path.steps) {
        if (step.descendant) {
            std::vector<const Node*> expanded;
            for (const auto* c : context) {
                collect_self_and_descendants(c, expanded);
            }
            context = std::move(expanded);
        }
        std::vector<const Node*> next;
        for (const auto* c : context) {
            std::vector<const Node*> candidates;
            if (step.name == ".") {
                candidates.push_back(c);
            } else if (step.name == "..") {
                if (auto* p = doc.parent_of(c)) {
                    candidates.push_back(p);
                } else if (c != &doc.root()) {
                    candidates.push_back(&doc.root());
                }
            } else {
                for (const auto& child : c->children) {
                    if (step.name == "*" || lower(child.tag) == step.name) {
                        candidates.push_back(&child);
                    }
                }
            }
            for (const auto& pred : step.predicates) {
                std::vector<const Node*> kept;
                for (std::size_t i = 0; i < candidates.size(); ++i) {
                    bool ok = std::all_of(pred.begin(), pred.end(), [&](const XPred& p) {
                        return pred_holds(p, *candidates[i], i + 1, candidates.size());
                    });
                    if (ok) {
                        kept.push_back(candidates[i]);
                    }
                }
                candidates = std::move(kept);
            }
            next.insert(next.end(), candidates.begin(), candidates.end());
        }
        context = std::move(next);
    }
    // Document order, no duplicates, elements only.
    std::set<std::size_t> seen;
    std::vector<std::pair<std::size_t, const Node*>> ordered;
    for (const auto* n : context) {
        auto idx = doc.index_of(n);
        if (!idx || seen.count(*idx) != 0) {
            continue;
        }
        if (within != nullptr && !is_descendant(doc, n, within)) {
            continue;
        }
        seen.insert(*idx);
        ordered.emplace_back(*idx, n);
    }
    std::sort(ordered.begin(), ordered.end());
    std::vector<const Node*> out;
    for (auto& [i, n] : ordered) {
        out.push_back(n);
    }
    return out;
}

std::string css_escape_string(const std::string& v)
{
    std::string out;
    for (char c : v) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    return out;
}

} // namespace

std::string to_css(const trace::Selector& selector)
{
    switch (selector.strategy) {
    case trace::SelectorStrategy::element_id:
        return "[id=\"" + css_escape_string(selector.value) + "\"]";
    case trace::SelectorStrategy::html_class: {
        std::istringstream in(selector.value);
        std::string cls;
        std::string out;
        while (in >> cls) {
            out += "." + cls;
        }
        if (out.empty()) {
            throw SelectorError("empty class selector");
        }
        return out;
    }
    case trace::SelectorStrategy::css:
        return selector.value;
    case trace::SelectorStrategy::xpath:
        break;
    }
    throw SelectorError("xpath selectors have no CSS equivalent");
}

std::vector<const Node*> select(const Document& doc, const trace::Selector& selector, const Node* within)
{
    switch (selector.strategy) {
    case trace::SelectorStrategy::element_id: {
        std::vector<const Node*> out;
        for (const auto* n : doc.elements()) {
            if (n->id == selector.value && (within == nullptr || is_descendant(doc, n, within))) {
                out.push_back(n);
            }
        }
        return out;
    }
    case trace::SelectorStrategy::html_class:
    case trace::SelectorStrategy::css:
        return select_css(doc, to_css(selector), within);
    case trace::SelectorStrategy::xpath:
        return select_xpath(doc, selector.value, within);
    }
    return {};
}

} // namespace tracer::driver
