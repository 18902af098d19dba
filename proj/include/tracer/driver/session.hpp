#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tracer/driver/backend.hpp"
#include "tracer/driver/page_script.hpp"
#include "tracer/proxy/capture_proxy.hpp"
#include "tracer/trace/plan.hpp"

namespace tracer::driver {

enum class BackendKind { webdriver, mock };

std::string_view to_string(BackendKind k);

inline constexpr int kPageLoadTimeoutMs = 60000;

struct SessionConfig {
    BackendKind backend = BackendKind::mock;
    // host:port of the capture proxy all traffic goes through.
    std::string proxy_endpoint;
    std::string user_agent = "Mozilla/5.0 (X11; Linux x86_64) AppleWebKit/537.36 (KHTML, like Gecko) "
                             "Chrome/124.0.0.0 Safari/537.36";
    std::optional<PageScript> page_script;
    // PEM of the proxy CA the mock backend trusts.
    std::string proxy_ca_pem;
    std::string webdriver_endpoint;
    // Substituted for the {url} placeholder of navigate steps.
    std::string target_url;
    // Network-idle signal for wait_idle; usually CaptureProxy::idle_state.
    std::function<proxy::IdleState(int quiet_ms)> idle_probe;
    int page_load_timeout_ms = kPageLoadTimeoutMs;
};

struct ElementRef {
    std::string handle;
    std::uint64_t document_epoch = 0;
};

enum class StepStatus { ok, skipped };

std::string_view to_string(StepStatus s);

struct StepOutcome {
    StepStatus status = StepStatus::ok;
    std::string op;
    std::optional<std::size_t> action_index;
    std::int64_t duration_ms = 0;
    // Clicks dispatched by this step, including loop and click-all bodies.
    int clicks = 0;
    std::string detail;

    Json to_json() const;
};

struct InventoryEntry {
    std::string category;
    std::string uri;
    std::optional<std::size_t> action_index;

    bool operator==(const InventoryEntry&) const = default;
};

struct StepError {
    std::string op;
    std::optional<std::size_t> action_index;
    std::string kind;
    std::string message;
};

struct SessionReport {
    std::string session_id;
    BackendKind backend = BackendKind::mock;
    std::vector<InventoryEntry> inventory;
    std::vector<StepOutcome> steps;
    std::vector<StepError> errors;
    int clicks = 0;

    // category -> distinct URIs, sorted.
    std::map<std::string, std::vector<std::string>> inventory_by_category() const;
    Json to_json() const;
};

// Interprets compiled plan steps against one browser backend. Confined to a
// single thread at a time.
class DriverSession {
  public:
    DriverSession(SessionConfig config, std::unique_ptr<BrowserBackend> backend);
    ~DriverSession();
    DriverSession(const DriverSession&) = delete;
    DriverSession& operator=(const DriverSession&) = delete;

    const std::string& session_id() const { return session_id_; }
    const std::string& proxy_endpoint() const { return config_.proxy_endpoint; }
    const std::string& user_agent() const { return config_.user_agent; }
    BackendKind backend() const { return config_.backend; }
    std::uint64_t epoch() const { return epoch_; }
    // Empty until the first navigation.
    const std::string& current_url() const { return current_url_; }

    StepOutcome execute_step(const trace::PlanStep& step);
    // Resolves a selector in the current document (document order).
    std::vector<ElementRef> resolve(const trace::Selector& selector, const std::optional<ElementRef>& within = {});
    // Idempotent; later calls return the first report.
    SessionReport close();

  private:
    struct Binding {
        std::vector<ElementRef> refs;
        bool skipped = false;
        std::optional<std::string> href;
        std::optional<std::string> navigated_to;
    };

    void run(const trace::PlanStep& step, StepOutcome& out);
    void navigate(const std::string& url);
    void click(const ElementRef& ref, Binding* binding);
    void back();
    void wait_idle(int quiet_ms, int cap_ms, StepOutcome& out);
    void record(const std::string& category, const std::string& uri, const trace::PlanStep& step);
    void refresh_url();
    void check_epoch(const ElementRef& ref) const;
    Binding& binding(const std::string& name);
    bool loop_should_stop(const trace::LoopOp& loop);
    bool in_skipped_action(const trace::PlanStep& step) const;

    SessionConfig config_;
    std::unique_ptr<BrowserBackend> backend_;
    std::string session_id_;
    std::uint64_t epoch_ = 0;
    std::string current_url_;
    std::map<std::string, Binding> bindings_;
    // Action whose element was missing with on_missing=skip; the rest of its
    // steps are skipped.
    std::optional<std::size_t> skipped_action_;
    std::optional<SessionReport> final_report_;
    SessionReport report_;
};

// Opens the configured backend. Throws DriverUnreachable, CapabilityRejected
// or DriverError (missing page script).
std::unique_ptr<DriverSession> open_session(SessionConfig config);
StepOutcome execute_step(DriverSession& session, const trace::PlanStep& step);
SessionReport close_session(DriverSession& session);

} // namespace tracer::driver
