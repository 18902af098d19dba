#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tracer/trace/trace.hpp"

namespace tracer::trace {

inline constexpr int kWaitIdleCapMs = 60000;
// Placeholder bound to the capture target when a plan is executed.
inline constexpr std::string_view kTargetUrlTemplate = "{url}";

class CompileError : public Error {
  public:
    using Error::Error;
};

struct PlanStep;

struct NavigateOp {
    std::string url_template{kTargetUrlTemplate};
    bool operator==(const NavigateOp&) const = default;
};

struct ResolveOp {
    Selector selector;
    std::string binding;
    OnMissing on_missing = OnMissing::fail;
    bool operator==(const ResolveOp&) const = default;
};

struct ClickOp {
    std::string binding;
    bool operator==(const ClickOp&) const = default;
};

// Visits every link of a snapshotted scope, returning to the origin page
// after each link; waits and records per link.
struct ClickEachAndReturnOp {
    Selector scope;
    Selector link;
    int quiet_ms = kDefaultWaitAfterMs;
    int cap_ms = kWaitIdleCapMs;
    std::string category;
    OnMissing on_missing = OnMissing::fail;
    bool operator==(const ClickEachAndReturnOp&) const = default;
};

struct LoopOp {
    std::vector<PlanStep> body;
    Until until = Until::max_only;
    // Element whose absence or disabled state ends the loop.
    Selector until_selector;
    int max_iterations = kDefaultMaxIterations;
    bool operator==(const LoopOp&) const;
};

struct WaitIdleOp {
    int quiet_ms = kDefaultWaitAfterMs;
    int cap_ms = kWaitIdleCapMs;
    bool operator==(const WaitIdleOp&) const = default;
};

struct RecordTargetOp {
    std::string binding;
    std::string category;
    bool operator==(const RecordTargetOp&) const = default;
};

using PlanOp = std::variant<NavigateOp, ResolveOp, ClickOp, ClickEachAndReturnOp, LoopOp, WaitIdleOp,
                            RecordTargetOp>;

struct PlanStep {
    // Index of the trace action this step came from; unset for the initial
    // navigation.
    std::optional<std::size_t> action_index;
    PlanOp op;

    bool operator==(const PlanStep&) const = default;
};

struct ActionPlan {
    std::vector<PlanStep> steps;
    std::string trace_id;
    UrlPattern compiled_for;

    bool operator==(const ActionPlan&) const = default;
};

ActionPlan compile(const Trace& t);

std::string_view op_name(const PlanOp& op);

// One step per line, loop bodies indented. Debug aid only.
std::string render_plan(const ActionPlan& plan);

} // namespace tracer::trace
