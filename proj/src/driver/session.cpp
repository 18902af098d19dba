#include "tracer/driver/session.hpp"

#include <set>
#include <thread>

#include "tracer/driver/mock_backend.hpp"
#include "tracer/driver/webdriver_backend.hpp"
#include "tracer/util/time.hpp"

namespace tracer::driver {

std::string_view to_string(BackendKind k)
{
    return k == BackendKind::webdriver ? "webdriver" : "mock";
}

std::string_view to_string(StepStatus s)
{
    return s == StepStatus::ok ? "ok" : "skipped";
}

Json StepOutcome::to_json() const
{
    Json j = Json::object();
    j["op"] = op;
    j["action_index"] = action_index ? Json(*action_index) : Json(nullptr);
    j["status"] = to_string(status);
    j["duration_ms"] = duration_ms;
    j["clicks"] = clicks;
    if (!detail.empty()) {
        j["detail"] = detail;
    }
    return j;
}

std::map<std::string, std::vector<std::string>> SessionReport::inventory_by_category() const
{
    std::map<std::string, std::set<std::string>> sets;
    for (const auto& e : inventory) {
        sets[e.category].insert(e.uri);
    }
    std::map<std::string, std::vector<std::string>> out;
    for (auto& [k, v] : sets) {
        out[k] = std::vector<std::string>(v.begin(), v.end());
    }
    return out;
}

Json SessionReport::to_json() const
{
    Json j = Json::object();
    j["session_id"] = session_id;
    j["backend"] = to_string(backend);
    Json inv = Json::array();
    for (const auto& e : inventory) {
        Json ej = Json::object();
        ej["category"] = e.category;
        ej["uri"] = e.uri;
        ej["action_index"] = e.action_index ? Json(*e.action_index) : Json(nullptr);
        inv.push_back(std::move(ej));
    }
    j["inventory"] = std::move(inv);
    Json steps_json = Json::array();
    for (const auto& s : steps) {
        steps_json.push_back(s.to_json());
    }
    j["steps"] = std::move(steps_json);
    Json errs = Json::array();
    for (const auto& e : errors) {
        Json ej = Json::object();
        ej["op"] = e.op;
        ej["action_index"] = e.action_index ? Json(*e.action_index) : Json(nullptr);
        ej["kind"] = e.kind;
        ej["message"] = e.message;
        errs.push_back(std::move(ej));
    }
    j["errors"] = std::move(errs);
    j["clicks"] = clicks;
    return j;
}

namespace {

std::string error_kind(const std::exception& e)
{
    if (dynamic_cast<const ElementNotFound*>(&e) != nullptr) {
        return "ElementNotFound";
    }
    if (dynamic_cast<const StaleElement*>(&e) != nullptr) {
        return "StaleElement";
    }
    if (dynamic_cast<const NavigationTimeout*>(&e) != nullptr) {
        return "NavigationTimeout";
    }
    if (dynamic_cast<const BackendError*>(&e) != nullptr) {
        return "BackendError";
    }
    if (dynamic_cast<const NetworkError*>(&e) != nullptr) {
        return "NetworkError";
    }
    if (dynamic_cast<const DriverError*>(&e) != nullptr) {
        return "DriverError";
    }
    return "Error";
}

std::string describe(const trace::Selector& s)
{
    return std::string(trace::to_string(s.strategy)) + " \"" + s.value + "\"";
}

} // namespace

DriverSession::DriverSession(SessionConfig config, std::unique_ptr<BrowserBackend> backend)
    : config_(std::move(config)), backend_(std::move(backend))
{
    session_id_ = backend_->session_id();
    report_.session_id = session_id_;
    report_.backend = config_.backend;
}

DriverSession::~DriverSession()
{
    try {
        close();
    } catch (...) {
    }
}

StepOutcome DriverSession::execute_step(const trace::PlanStep& step)
{
    if (final_report_) {
        throw DriverError("session " + session_id_ + " is closed");
    }
    StepOutcome out;
    out.op = std::string(trace::op_name(step.op));
    out.action_index = step.action_index;
    auto started = monotonic_ms();
    try {
        run(step, out);
    } catch (const std::exception& e) {
        report_.errors.push_back({out.op, step.action_index, error_kind(e), e.what()});
        throw;
    }
    out.duration_ms = monotonic_ms() - started;
    report_.steps.push_back(out);
    return out;
}

bool DriverSession::in_skipped_action(const trace::PlanStep& step) const
{
    return skipped_action_ && step.action_index == skipped_action_;
}

DriverSession::Binding& DriverSession::binding(const std::string& name)
{
    auto it = bindings_.find(name);
    if (it == bindings_.end()) {
        throw DriverError("binding " + name + " used before it was resolved");
    }
    return it->second;
}

void DriverSession::run(const trace::PlanStep& step, StepOutcome& out)
{
    using namespace trace;
    if (!std::holds_alternative<ResolveOp>(step.op) && !std::holds_alternative<LoopOp>(step.op) &&
        in_skipped_action(step)) {
        out.status = StepStatus::skipped;
        out.detail = "element missing earlier in this action";
        return;
    }
    if (const auto* op = std::get_if<NavigateOp>(&step.op)) {
        std::string url = op->url_template;
        auto pos = url.find(kTargetUrlTemplate);
        if (pos != std::string::npos) {
            if (config_.target_url.empty()) {
                throw DriverError("navigate step needs a target URL");
            }
            url.replace(pos, kTargetUrlTemplate.size(), config_.target_url);
        }
        navigate(url);
        out.detail = current_url_;
    } else if (const auto* op = std::get_if<ResolveOp>(&step.op)) {
        if (skipped_action_ == step.action_index) {
            skipped_action_.reset();
        }
        auto refs = resolve(op->selector);
        Binding b;
        if (refs.empty()) {
            if (op->on_missing == OnMissing::fail) {
                throw ElementNotFound("no element matches " + describe(op->selector) + " on " + current_url_);
            }
            b.skipped = true;
            skipped_action_ = step.action_index;
            out.status = StepStatus::skipped;
            out.detail = "no element matches " + describe(op->selector);
        } else {
            b.href = backend_->state(refs.front().handle).href;
            b.refs = std::move(refs);
            out.detail = std::to_string(b.refs.size()) + " element(s)";
        }
        bindings_[op->binding] = std::move(b);
    } else if (const auto* op = std::get_if<ClickOp>(&step.op)) {
        auto& b = binding(op->binding);
        if (b.skipped) {
            out.status = StepStatus::skipped;
            return;
        }
        click(b.refs.front(), &b);
        ++out.clicks;
    } else if (const auto* op = std::get_if<WaitIdleOp>(&step.op)) {
        wait_idle(op->quiet_ms, op->cap_ms, out);
    } else if (const auto* op = std::get_if<RecordTargetOp>(&step.op)) {
        auto& b = binding(op->binding);
        if (b.skipped) {
            out.status = StepStatus::skipped;
            return;
        }
        auto target = b.href ? b.href : b.navigated_to;
        if (target) {
            record(op->category, *target, step);
            out.detail = *target;
        } else {
            out.detail = "element has no target";
        }
    } else if (const auto* op = std::get_if<ClickEachAndReturnOp>(&step.op)) {
        auto scopes = resolve(op->scope);
        if (scopes.empty()) {
            if (op->on_missing == OnMissing::fail) {
                throw ElementNotFound("no element matches " + describe(op->scope) + " on " + current_url_);
            }
            out.status = StepStatus::skipped;
            out.detail = "scope missing";
            return;
        }
        auto snapshot = [&]() {
            std::vector<ElementRef> links;
            std::set<std::string> seen;
            for (const auto& scope : resolve(op->scope)) {
                for (auto& l : resolve(op->link, scope)) {
                    if (seen.insert(l.handle).second) {
                        links.push_back(std::move(l));
                    }
                }
            }
            return links;
        };
        auto links = snapshot();
        auto count = links.size();
        auto origin = current_url_;
        auto origin_epoch = epoch_;
        std::size_t visited = 0;
        for (std::size_t i = 0; i < count; ++i) {
            if (epoch_ != origin_epoch) {
                links = snapshot();
                origin_epoch = epoch_;
                if (links.size() <= i) {
                    out.detail = "link list shrank from " + std::to_string(count) + " to " + std::to_string(links.size());
                    break;
                }
            }
            Binding b;
            b.href = backend_->state(links[i].handle).href;
            click(links[i], &b);
            ++out.clicks;
            wait_idle(op->quiet_ms, op->cap_ms, out);
            auto target = b.href ? b.href : b.navigated_to;
            if (target) {
                record(op->category, *target, step);
            }
            ++visited;
            if (current_url_ != origin) {
                back();
            }
        }
        if (out.detail.empty()) {
            out.detail = std::to_string(visited) + " of " + std::to_string(count) + " links visited";
        }
    } else if (const auto* op = std::get_if<LoopOp>(&step.op)) {
        std::string stop = "max_iterations";
        while (out.clicks < op->max_iterations) {
            if (loop_should_stop(*op)) {
                stop = std::string(to_string(op->until));
                break;
            }
            bool missing = false;
            for (const auto& inner : op->body) {
                StepOutcome sub;
                run(inner, sub);
                out.clicks += sub.clicks;
                if (sub.status == StepStatus::skipped && std::holds_alternative<ResolveOp>(inner.op)) {
                    missing = true;
                    break;
                }
            }
            if (missing) {
                stop = "element missing";
                skipped_action_.reset();
                break;
            }
        }
        out.detail = std::to_string(out.clicks) + " click(s), stopped by " + stop;
    }
}

bool DriverSession::loop_should_stop(const trace::LoopOp& loop)
{
    switch (loop.until) {
    case trace::Until::element_absent:
        return resolve(loop.until_selector).empty();
    case trace::Until::element_disabled: {
        auto refs = resolve(loop.until_selector);
        return refs.empty() || backend_->state(refs.front().handle).disabled;
    }
    case trace::Until::max_only:
        return false;
    }
    return false;
}

std::vector<ElementRef> DriverSession::resolve(const trace::Selector& selector, const std::optional<ElementRef>& within)
{
    std::optional<std::string> scope;
    if (within) {
        check_epoch(*within);
        scope = within->handle;
    }
    std::vector<ElementRef> refs;
    for (auto& h : backend_->find(selector, scope)) {
        refs.push_back({std::move(h), epoch_});
    }
    return refs;
}

void DriverSession::check_epoch(const ElementRef& ref) const
{
    if (ref.document_epoch != epoch_) {
        throw StaleElement("element " + ref.handle + " belongs to document epoch " + std::to_string(ref.document_epoch) +
                           ", current epoch is " + std::to_string(epoch_));
    }
}

void DriverSession::refresh_url()
{
    current_url_ = backend_->current_url();
}

void DriverSession::navigate(const std::string& url)
{
    backend_->navigate(url);
    ++epoch_;
    refresh_url();
}

void DriverSession::click(const ElementRef& ref, Binding* b)
{
    check_epoch(ref);
    auto before = current_url_;
    backend_->click(ref.handle);
    ++report_.clicks;
    refresh_url();
    if (current_url_ != before) {
        ++epoch_;
        if (b != nullptr) {
            b->navigated_to = current_url_;
        }
    }
}

void DriverSession::back()
{
    backend_->back();
    ++epoch_;
    refresh_url();
}

void DriverSession::wait_idle(int quiet_ms, int cap_ms, StepOutcome& out)
{
    if (!config_.idle_probe) {
        std::this_thread::sleep_for(std::chrono::milliseconds(std::min(quiet_ms, cap_ms)));
        return;
    }
    auto start = monotonic_ms();
    while (true) {
        auto state = config_.idle_probe(quiet_ms);
        if (state.idle) {
            return;
        }
        auto elapsed = monotonic_ms() - start;
        if (elapsed >= cap_ms) {
            out.detail = "network not idle after " + std::to_string(cap_ms) + " ms";
            return;
        }
        auto remaining_quiet = std::max<std::int64_t>(1, quiet_ms - state.since_ms);
        auto sleep = std::min<std::int64_t>({remaining_quiet, 20, cap_ms - elapsed});
        std::this_thread::sleep_for(std::chrono::milliseconds(std::max<std::int64_t>(1, sleep)));
    }
}

void DriverSession::record(const std::string& category, const std::string& uri, const trace::PlanStep& step)
{
    report_.inventory.push_back({category, uri, step.action_index});
}

SessionReport DriverSession::close()
{
    if (final_report_) {
        return *final_report_;
    }
    try {
        backend_->close();
    } catch (const std::exception& e) {
        report_.errors.push_back({"close", std::nullopt, error_kind(e), e.what()});
    }
    final_report_ = report_;
    return *final_report_;
}

std::unique_ptr<DriverSession> open_session(SessionConfig config)
{
    std::unique_ptr<BrowserBackend> backend;
    if (config.backend == BackendKind::mock) {
        if (!config.page_script) {
            throw DriverError("the mock backend needs a page script");
        }
        backend = std::make_unique<MockBackend>(*config.page_script, MockOptions::from(config));
    } else {
        backend = WebDriverBackend::connect(WebDriverOptions::from(config));
    }
    return std::make_unique<DriverSession>(std::move(config), std::move(backend));
}

StepOutcome execute_step(DriverSession& session, const trace::PlanStep& step)
{
    return session.execute_step(step);
}

SessionReport close_session(DriverSession& session)
{
    return session.close();
}

} // namespace tracer::driver
