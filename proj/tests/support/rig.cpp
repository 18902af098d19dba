#include "rig.hpp"

#include "tracer/util/url.hpp"

namespace tracer::testing {

Rig::Rig(fixture::PortalSpec spec, std::optional<std::filesystem::path> warc)
{
    portal = fixture::Portal::serve(std::move(spec));
    proxy::ProxyConfig cfg;
    cfg.warc_output_path = std::move(warc);
    proxy = proxy::CaptureProxy::start(std::move(cfg));
}

driver::SessionConfig Rig::session_config(const std::string& target_url) const
{
    driver::SessionConfig c;
    c.backend = driver::BackendKind::mock;
    c.proxy_endpoint = proxy->endpoint();
    c.proxy_ca_pem = proxy->ca_certificate_pem();
    c.page_script = portal->page_script();
    c.target_url = target_url;
    auto* p = proxy.get();
    c.idle_probe = [p](int quiet) { return p->idle_state(quiet); };
    return c;
}

std::unique_ptr<driver::DriverSession> Rig::open(const std::string& target_url) const
{
    return driver::open_session(session_config(target_url));
}

namespace {

const driver::Node* find_id(const std::vector<driver::Node>& nodes, const std::string& id)
{
    for (const auto& n : nodes) {
        if (n.id == id) {
            return &n;
        }
        if (const auto* hit = find_id(n.children, id)) {
            return hit;
        }
    }
    return nullptr;
}

} // namespace

int simulate_repeat_click(const driver::PageScript& script, const std::string& start_url,
                          const std::string& element_id, int max_clicks)
{
    std::string url = normalize_uri(start_url);
    int clicks = 0;
    while (clicks < max_clicks) {
        const auto* page = script.find(url);
        if (page == nullptr) {
            break;
        }
        const auto* el = find_id(page->body, element_id);
        if (el == nullptr || el->is_disabled()) {
            break;
        }
        ++clicks;
        if (const auto* t = page->transition_for(element_id); t != nullptr) {
            url = t->navigate ? *t->navigate : t->push_state.value_or(url);
        } else if (el->href) {
            url = normalize_uri(resolve_reference(url, *el->href));
        }
    }
    return clicks;
}

} // namespace tracer::testing
