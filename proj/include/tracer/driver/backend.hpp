#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tracer/trace/trace.hpp"

namespace tracer::driver {

class DriverError : public Error {
  public:
    using Error::Error;
};

class ElementNotFound : public DriverError {
  public:
    using DriverError::DriverError;
};

class StaleElement : public DriverError {
  public:
    using DriverError::DriverError;
};

class NavigationTimeout : public DriverError {
  public:
    using DriverError::DriverError;
};

// Wire-protocol failure; status is the HTTP status or protocol error code.
class BackendError : public DriverError {
  public:
    BackendError(const std::string& what, std::string status) : DriverError(what), status_(std::move(status)) {}
    const std::string& status() const { return status_; }

  private:
    std::string status_;
};

class DriverUnreachable : public DriverError {
  public:
    using DriverError::DriverError;
};

class CapabilityRejected : public DriverError {
  public:
    using DriverError::DriverError;
};

// Transport-level failure while loading a page (connection refused, gateway
// errors from the proxy). Callers may retry these.
class NetworkError : public DriverError {
  public:
    using DriverError::DriverError;
};

struct ElementState {
    std::string tag;
    // Absolute href for anchors that carry one.
    std::optional<std::string> href;
    bool disabled = false;
};

// One browser tab. Element handles are opaque and only valid until the next
// document load.
class BrowserBackend {
  public:
    virtual ~BrowserBackend() = default;

    virtual std::string session_id() const = 0;
    virtual void navigate(const std::string& url) = 0;
    virtual std::string current_url() = 0;
    virtual std::vector<std::string> find(const trace::Selector& selector,
                                          const std::optional<std::string>& within) = 0;
    virtual ElementState state(const std::string& handle) = 0;
    virtual void click(const std::string& handle) = 0;
    virtual void back() = 0;
    virtual void close() = 0;
};

} // namespace tracer::driver
