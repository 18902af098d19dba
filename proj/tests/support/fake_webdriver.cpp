#include "fake_webdriver.hpp"

#include <httplib.h>

#include <map>
#include <mutex>
#include <thread>

#include "tracer/driver/mock_backend.hpp"
#include "tracer/driver/webdriver_backend.hpp"

namespace tracer::testing {

struct FakeWebDriver::Impl {
    Options options;
    httplib::Server server;
    std::thread thread;
    int port = 0;
    mutable std::mutex mutex;
    std::map<std::string, std::unique_ptr<driver::MockBackend>> sessions;
    int created = 0;
    int deleted = 0;
    std::string last_proxy;

    static void reply(httplib::Response& res, const Json& value, int status = 200)
    {
        res.status = status;
        res.set_content(Json{{"value", value}}.dump(), "application/json");
    }

    static void error(httplib::Response& res, int status, const std::string& code, const std::string& message)
    {
        reply(res, {{"error", code}, {"message", message}, {"stacktrace", ""}}, status);
    }

    static Json element(const std::string& handle)
    {
        return Json{{std::string(driver::kWebElementKey), handle}};
    }

    template <typename F>
    void guarded(httplib::Response& res, F&& f)
    {
        std::lock_guard lock(mutex);
        try {
            f();
        } catch (const driver::StaleElement& e) {
            error(res, 404, "stale element reference", e.what());
        } catch (const driver::BackendError& e) {
            error(res, e.status() == "invalid selector" ? 400 : 404, e.status(), e.what());
        } catch (const driver::NetworkError& e) {
            error(res, 500, "unknown error", std::string("net::ERR_CONNECTION_FAILED ") + e.what());
        } catch (const std::exception& e) {
            error(res, 500, "unknown error", e.what());
        }
    }

    driver::MockBackend& session(const httplib::Request& req)
    {
        auto it = sessions.find(req.matches[1].str());
        if (it == sessions.end()) {
            throw driver::BackendError("invalid session id", "invalid session id");
        }
        return *it->second;
    }

    trace::Selector selector(const httplib::Request& req)
    {
        auto body = Json::parse(req.body);
        auto using_ = body.at("using").get<std::string>();
        auto value = body.at("value").get<std::string>();
        if (using_ == "xpath") {
            return {trace::SelectorStrategy::xpath, value};
        }
        if (using_ != "css selector") {
            throw driver::BackendError("unsupported locator " + using_, "invalid argument");
        }
        return {trace::SelectorStrategy::css, value};
    }

    void routes()
    {
        const std::string s = "/wd/hub/session/([^/]+)";
        const std::string e = s + "/element/([^/]+)";
        server.Post("/wd/hub/session", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto caps = Json::parse(req.body).at("capabilities").at("alwaysMatch");
                driver::MockOptions mo;
                mo.proxy_endpoint = caps.at("proxy").at("sslProxy").get<std::string>();
                mo.ca_pem = options.ca_pem;
                mo.user_agent = "fake-webdriver";
                last_proxy = mo.proxy_endpoint;
                auto backend = std::make_unique<driver::MockBackend>(options.script, mo);
                auto id = "fake-" + std::to_string(++created);
                sessions[id] = std::move(backend);
                reply(res, {{"sessionId", id},
                            {"capabilities",
                             {{"browserName", "fake"}, {"acceptInsecureCerts", !options.refuse_insecure_certs}}}});
            });
        });
        server.Delete(s, [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                session(req).close();
                sessions.erase(req.matches[1].str());
                ++deleted;
                reply(res, nullptr);
            });
        });
        server.Post(s + "/url", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                session(req).navigate(Json::parse(req.body).at("url").get<std::string>());
                reply(res, nullptr);
            });
        });
        server.Get(s + "/url", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, session(req).current_url()); });
        });
        server.Post(s + "/back", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                session(req).back();
                reply(res, nullptr);
            });
        });
        server.Post(s + "/elements", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                Json out = Json::array();
                for (const auto& h : session(req).find(selector(req), std::nullopt)) {
                    out.push_back(element(h));
                }
                reply(res, out);
            });
        });
        server.Post(e + "/elements", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                Json out = Json::array();
                for (const auto& h : session(req).find(selector(req), req.matches[2].str())) {
                    out.push_back(element(h));
                }
                reply(res, out);
            });
        });
        server.Get(e + "/name", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, session(req).state(req.matches[2].str()).tag); });
        });
        server.Get(e + "/(attribute|property)/([^/]+)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto st = session(req).state(req.matches[2].str());
                bool property = req.matches[3].str() == "property";
                auto name = req.matches[4].str();
                bool control = st.tag == "button" || st.tag == "input";
                Json v = nullptr;
                if (name == "href" && st.href) {
                    v = *st.href;
                } else if (name == "disabled") {
                    if (property) {
                        v = control && st.disabled;
                    } else if (control && st.disabled) {
                        v = "true";
                    }
                } else if (name == "aria-disabled" && !property && !control && st.disabled) {
                    v = "true";
                }
                reply(res, v);
            });
        });
        server.Post(e + "/click", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                session(req).click(req.matches[2].str());
                reply(res, nullptr);
            });
        });
    }
};

FakeWebDriver::FakeWebDriver(Options options) : impl_(std::make_unique<Impl>())
{
    impl_->options = std::move(options);
    impl_->routes();
    impl_->server.set_tcp_nodelay(true);
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

FakeWebDriver::~FakeWebDriver()
{
    impl_->server.stop();
    impl_->thread.join();
}

std::string FakeWebDriver::endpoint() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/wd/hub"; }

int FakeWebDriver::sessions_created() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->created;
}

int FakeWebDriver::sessions_deleted() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->deleted;
}

std::string FakeWebDriver::last_proxy() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->last_proxy;
}

} // namespace tracer::testing
