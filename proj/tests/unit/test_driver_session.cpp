#include <doctest.h>

#include <algorithm>
#include <set>

#include "rig.hpp"
#include "tracer/trace/plan.hpp"
#include "tracer/warc/reader.hpp"

using namespace tracer;
using namespace tracer::testing;
using tracer::driver::StepStatus;

namespace {

fixture::PortalSpec small_spec()
{
    fixture::PortalSpec spec;
    spec.repos = {{"five", 5, true}, {"nozip", 2, false}, {"empty", 0, true}};
    spec.decks = {{"ten", 10, 3, fixture::Pagination::href}, {"scripted", 10, 1, fixture::Pagination::script},
                  {"one", 1, 0, fixture::Pagination::href}};
    return spec;
}

driver::SessionReport run_plan(const Rig& rig, const trace::Trace& t, const std::string& url)
{
    auto plan = trace::compile(t);
    auto session = rig.open(url);
    for (const auto& step : plan.steps) {
        session->execute_step(step);
    }
    return session->close();
}

int loop_clicks(const driver::SessionReport& r)
{
    for (const auto& s : r.steps) {
        if (s.op == "loop") {
            return s.clicks;
        }
    }
    return -1;
}

trace::Trace deck_with_max(int max)
{
    auto t = fixture::deck_trace("http://127.0.0.1:*", 5);
    t.actions[2].max_iterations = max;
    return t;
}

} // namespace

TEST_CASE("mock session starts at epoch 0 with no current URL")
{
    Rig rig(small_spec());
    auto s = rig.open(rig.portal->repo_url("five"));
    CHECK(s->epoch() == 0);
    CHECK(s->current_url().empty());
    CHECK(s->backend() == driver::BackendKind::mock);
    CHECK(s->proxy_endpoint() == rig.proxy->endpoint());
}

TEST_CASE("mock backend without a page script is refused")
{
    driver::SessionConfig c;
    CHECK_THROWS_AS(driver::open_session(c), driver::DriverError);
}

TEST_CASE("repo trace inventories every file and the zip")
{
    Rig rig(small_spec());
    auto url = rig.portal->repo_url("five");
    auto report = run_plan(rig, fixture::repo_trace("http://127.0.0.1:*", 5), url);
    auto inv = report.inventory_by_category();
    auto expected = *rig.portal->expected_inventory(url);
    CHECK(inv["files"] == expected["files"]);
    CHECK(inv["zip"] == expected["zip"]);
    CHECK(inv["files"].size() == 5);
    CHECK(report.errors.empty());
}

TEST_CASE("missing zip with on_missing=skip is skipped, not an error")
{
    Rig rig(small_spec());
    auto url = rig.portal->repo_url("nozip");
    auto plan = trace::compile(fixture::repo_trace("http://127.0.0.1:*", 5));
    auto session = rig.open(url);
    std::vector<StepStatus> statuses;
    for (const auto& step : plan.steps) {
        statuses.push_back(session->execute_step(step).status);
    }
    auto report = session->close();
    CHECK(report.inventory_by_category()["files"].size() == 2);
    CHECK(report.inventory_by_category().count("zip") == 0);
    // resolve, click, wait, record of the zip action
    CHECK(std::vector<StepStatus>(statuses.end() - 4, statuses.end()) ==
          std::vector<StepStatus>(4, StepStatus::skipped));
}

TEST_CASE("missing element with on_missing=fail raises ElementNotFound")
{
    Rig rig(small_spec());
    auto t = fixture::repo_trace("http://127.0.0.1:*", 5);
    t.actions[1].on_missing = trace::OnMissing::fail;
    auto plan = trace::compile(t);
    auto session = rig.open(rig.portal->repo_url("nozip"));
    bool thrown = false;
    for (const auto& step : plan.steps) {
        try {
            session->execute_step(step);
        } catch (const driver::ElementNotFound&) {
            thrown = true;
            break;
        }
    }
    CHECK(thrown);
    auto report = session->close();
    REQUIRE(report.errors.size() == 1);
    CHECK(report.errors[0].kind == "ElementNotFound");
}

TEST_CASE("empty file list is fine")
{
    Rig rig(small_spec());
    auto report = run_plan(rig, fixture::repo_trace("http://127.0.0.1:*", 5), rig.portal->repo_url("empty"));
    CHECK(report.inventory_by_category()["files"].empty());
    CHECK(report.inventory_by_category()["zip"].size() == 1);
}

TEST_CASE("deck trace: 10 slides take 9 next clicks and record every slide")
{
    Rig rig(small_spec());
    for (const auto* name : {"ten", "scripted"}) {
        CAPTURE(name);
        auto url = rig.portal->deck_url(name);
        auto report = run_plan(rig, fixture::deck_trace("http://127.0.0.1:*", 5), url);
        auto expected = *rig.portal->expected_inventory(url);
        std::sort(expected["slides"].begin(), expected["slides"].end());
        auto inv = report.inventory_by_category();
        CHECK(loop_clicks(report) == 9);
        CHECK(inv["slides"] == expected["slides"]);
        CHECK(inv["notes"] == expected["notes"]);
        auto oracle = simulate_repeat_click(rig.portal->page_script(), url + "/slide/1", "next", 1000);
        CHECK(oracle == 9);
    }
}

TEST_CASE("max_iterations caps the loop")
{
    Rig rig(small_spec());
    auto url = rig.portal->deck_url("ten");
    auto report = run_plan(rig, deck_with_max(5), url);
    CHECK(loop_clicks(report) == 5);
    CHECK(simulate_repeat_click(rig.portal->page_script(), url + "/slide/1", "next", 5) == 5);
    CHECK(report.inventory_by_category()["slides"].size() == 6);
}

TEST_CASE("single-slide deck makes no next clicks")
{
    Rig rig(small_spec());
    auto report = run_plan(rig, fixture::deck_trace("http://127.0.0.1:*", 5), rig.portal->deck_url("one"));
    CHECK(loop_clicks(report) == 0);
    CHECK(report.inventory_by_category()["slides"].size() == 1);
}

TEST_CASE("element-absent loop ends when the element disappears")
{
    Rig rig(small_spec());
    auto t = fixture::deck_trace("http://127.0.0.1:*", 5);
    // a[href] on the next control only exists while there is a next slide.
    t.actions[2].selector = trace::Selector{trace::SelectorStrategy::css, "a#next[href]"};
    t.actions[2].until = trace::Until::element_absent;
    auto report = run_plan(rig, t, rig.portal->deck_url("ten"));
    CHECK(loop_clicks(report) == 9);
}

TEST_CASE("stale element references are rejected")
{
    Rig rig(small_spec());
    auto session = rig.open(rig.portal->deck_url("ten"));
    session->execute_step({std::nullopt, trace::NavigateOp{}});
    auto refs = session->resolve({trace::SelectorStrategy::element_id, "start"});
    REQUIRE(refs.size() == 1);
    session->execute_step({std::nullopt, trace::NavigateOp{rig.portal->deck_url("ten") + "/slide/1"}});
    CHECK_THROWS_AS(session->resolve({trace::SelectorStrategy::css, "a"}, refs[0]), driver::StaleElement);
}

TEST_CASE("resolve is stable within one epoch")
{
    Rig rig(small_spec());
    auto session = rig.open(rig.portal->repo_url("five"));
    session->execute_step({std::nullopt, trace::NavigateOp{}});
    auto a = session->resolve({trace::SelectorStrategy::css, "a"});
    auto b = session->resolve({trace::SelectorStrategy::css, "a"});
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].handle == b[i].handle);
    }
}

TEST_CASE("close is idempotent and refuses further steps")
{
    Rig rig(small_spec());
    auto session = rig.open(rig.portal->repo_url("five"));
    session->execute_step({std::nullopt, trace::NavigateOp{}});
    auto first = session->close();
    auto second = session->close();
    CHECK(first.to_json() == second.to_json());
    CHECK_THROWS_AS(session->execute_step({std::nullopt, trace::NavigateOp{}}), driver::DriverError);
}

TEST_CASE("all session traffic goes through the proxy")
{
    TempDir dir;
    Rig rig(small_spec(), dir / "c.warc.gz");
    auto url = rig.portal->deck_url("scripted");
    run_plan(rig, fixture::deck_trace("http://127.0.0.1:*", 5), url);
    auto log = rig.proxy->stop();
    auto stats = rig.portal->stats();
    std::uint64_t proxied = 0;
    for (const auto& e : log.exchanges) {
        if (e.disposition == proxy::Disposition::recorded || e.disposition == proxy::Disposition::duplicate_skipped) {
            ++proxied;
        }
    }
    CHECK(proxied == stats.hits);
    std::set<std::string> uris;
    for (const auto& r : warc::read_records(*log.warc_path)) {
        if (r.record.type == warc::RecordType::response) {
            uris.insert(*r.record.target_uri);
        }
    }
    auto expected = *rig.portal->expected_inventory(url);
    for (const auto& slide : expected.at("slides")) {
        CHECK(uris.count(slide) == 1);
    }
}
