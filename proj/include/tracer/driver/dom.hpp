#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracer/trace/trace.hpp"

namespace tracer::driver {

class SelectorError : public Error {
  public:
    using Error::Error;
};

// Minimal element tree used by the mock backend. Attributes hold everything
// except the fields broken out for convenience.
struct Node {
    std::string tag;
    std::string id;
    std::vector<std::string> classes;
    std::optional<std::string> href;
    bool disabled = false;
    std::map<std::string, std::string> attributes;
    std::string text;
    std::vector<Node> children;

    // Attribute lookup that also covers id, class, href and disabled.
    std::optional<std::string> attribute(const std::string& name) const;
    bool has_class(const std::string& cls) const;
    // disabled flag, a disabled attribute, or aria-disabled="true".
    bool is_disabled() const;

    bool operator==(const Node&) const = default;
};

// A document is an implicit root holding <html><body>...</body></html>.
class Document {
  public:
    Document() = default;
    explicit Document(std::vector<Node> body, std::string title = {});

    const Node& root() const { return *root_; }
    // Pre-order index of every element; handles are stable for one Document.
    const std::vector<const Node*>& elements() const { return order_; }
    std::optional<std::size_t> index_of(const Node* node) const;
    const Node* parent_of(const Node* node) const;

  private:
    void build();

    std::shared_ptr<Node> root_ = std::make_shared<Node>();
    std::vector<const Node*> order_;
    std::map<const Node*, const Node*> parents_;
    std::map<const Node*, std::size_t> index_;
};

// Elements matching the selector in document order, optionally restricted to
// descendants of `within`. Throws SelectorError for unsupported syntax.
std::vector<const Node*> select(const Document& doc, const trace::Selector& selector,
                                const Node* within = nullptr);

// Equivalent CSS for element-id and html-class strategies.
std::string to_css(const trace::Selector& selector);

} // namespace tracer::driver
