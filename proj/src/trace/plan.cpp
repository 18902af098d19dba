#include "tracer/trace/plan.hpp"

#include <sstream>

namespace tracer::trace {

bool LoopOp::operator==(const LoopOp& other) const
{
    return body == other.body && until == other.until && until_selector == other.until_selector &&
           max_iterations == other.max_iterations;
}

namespace {

std::string binding_for(std::size_t index, std::string_view suffix = {})
{
    auto name = "a" + std::to_string(index);
    if (!suffix.empty()) {
        name += ".";
        name += suffix;
    }
    return name;
}

const Selector& required(const std::optional<Selector>& s, std::size_t index, const char* field)
{
    if (!s) {
        throw CompileError("action " + std::to_string(index) + " has no " + field);
    }
    return *s;
}

} // namespace

ActionPlan compile(const Trace& t)
{
    if (t.actions.empty()) {
        throw CompileError("trace " + t.id + " has no actions");
    }
    ActionPlan plan;
    plan.trace_id = t.id;
    plan.compiled_for = t.url_pattern;
    plan.steps.push_back({std::nullopt, NavigateOp{}});

    for (std::size_t i = 0; i < t.actions.size(); ++i) {
        const auto& action = t.actions[i];
        auto category = t.category_of(i);
        WaitIdleOp wait{action.wait_after_ms, kWaitIdleCapMs};
        if (action.wait_after_ms < 0) {
            throw CompileError("action " + std::to_string(i) + " has a negative wait");
        }
        switch (action.kind) {
        case ActionKind::click: {
            auto binding = binding_for(i);
            plan.steps.push_back({i, ResolveOp{required(action.selector, i, "selector"), binding, action.on_missing}});
            plan.steps.push_back({i, ClickOp{binding}});
            plan.steps.push_back({i, wait});
            plan.steps.push_back({i, RecordTargetOp{binding, category}});
            break;
        }
        case ActionKind::click_all: {
            const auto& scope = required(action.scope_selector, i, "scope_selector");
            const auto& link = required(action.link_selector, i, "link_selector");
            plan.steps.push_back({i, ResolveOp{scope, binding_for(i, "scope"), action.on_missing}});
            plan.steps.push_back({i, ClickEachAndReturnOp{scope, link, action.wait_after_ms, kWaitIdleCapMs,
                                                          category, action.on_missing}});
            break;
        }
        case ActionKind::repeat_click: {
            const auto& selector = required(action.selector, i, "selector");
            if (!action.until) {
                throw CompileError("repeat-click action " + std::to_string(i) + " has no until condition");
            }
            if (*action.until == Until::max_only && !action.max_iterations) {
                throw CompileError("max-only loop in action " + std::to_string(i) + " has no max_iterations");
            }
            auto max = action.effective_max_iterations();
            if (max < 1 || max > kMaxIterationsLimit) {
                throw CompileError("action " + std::to_string(i) + " has an out-of-range iteration bound");
            }
            auto binding = binding_for(i);
            LoopOp loop;
            loop.until = *action.until;
            loop.until_selector = selector;
            loop.max_iterations = max;
            loop.body.push_back({i, ResolveOp{selector, binding, action.on_missing}});
            loop.body.push_back({i, ClickOp{binding}});
            loop.body.push_back({i, wait});
            loop.body.push_back({i, RecordTargetOp{binding, category}});
            plan.steps.push_back({i, std::move(loop)});
            break;
        }
        }
    }
    return plan;
}

std::string_view op_name(const PlanOp& op)
{
    struct Visitor {
        std::string_view operator()(const NavigateOp&) const { return "navigate"; }
        std::string_view operator()(const ResolveOp&) const { return "resolve"; }
        std::string_view operator()(const ClickOp&) const { return "click"; }
        std::string_view operator()(const ClickEachAndReturnOp&) const { return "click_each_and_return"; }
        std::string_view operator()(const LoopOp&) const { return "loop"; }
        std::string_view operator()(const WaitIdleOp&) const { return "wait_idle"; }
        std::string_view operator()(const RecordTargetOp&) const { return "record_target"; }
    };
    return std::visit(Visitor{}, op);
}

namespace {

std::string describe(const Selector& s) { return std::string(to_string(s.strategy)) + " \"" + s.value + "\""; }

void render_steps(std::ostringstream& out, const std::vector<PlanStep>& steps, int depth)
{
    for (const auto& step : steps) {
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
        out << (step.action_index ? "[" + std::to_string(*step.action_index) + "] " : "[-] ");
        out << op_name(step.op);
        std::visit(
            [&](const auto& op) {
                using T = std::decay_t<decltype(op)>;
                if constexpr (std::is_same_v<T, NavigateOp>) {
                    out << " " << op.url_template;
                } else if constexpr (std::is_same_v<T, ResolveOp>) {
                    out << " " << describe(op.selector) << " -> " << op.binding << " (on_missing="
                        << to_string(op.on_missing) << ")";
                } else if constexpr (std::is_same_v<T, ClickOp>) {
                    out << " " << op.binding;
                } else if constexpr (std::is_same_v<T, ClickEachAndReturnOp>) {
                    out << " scope=" << describe(op.scope) << " link=" << describe(op.link) << " wait=("
                        << op.quiet_ms << "," << op.cap_ms << ") category=" << op.category;
                } else if constexpr (std::is_same_v<T, LoopOp>) {
                    out << " until=" << to_string(op.until) << " " << describe(op.until_selector)
                        << " max=" << op.max_iterations;
                } else if constexpr (std::is_same_v<T, WaitIdleOp>) {
                    out << " (" << op.quiet_ms << "," << op.cap_ms << ")";
                } else if constexpr (std::is_same_v<T, RecordTargetOp>) {
                    out << " " << op.binding << " category=" << op.category;
                }
            },
            step.op);
        out << "\n";
        if (const auto* loop = std::get_if<LoopOp>(&step.op)) {
            render_steps(out, loop->body, depth + 1);
        }
    }
}

} // namespace

std::string render_plan(const ActionPlan& plan)
{
    std::ostringstream out;
    out << "plan " << plan.trace_id << " for " << plan.compiled_for.pattern << "\n";
    render_steps(out, plan.steps, 1);
    return out.str();
}

} // namespace tracer::trace
