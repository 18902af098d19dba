#pragma once

#include <stdexcept>
#include <string>

namespace tracer {

// Root of every exception thrown by the library. Modules derive their own
// error kinds from this so callers can catch per module or globally.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class InvalidUrl : public Error {
  public:
    explicit InvalidUrl(const std::string& url) : Error("invalid url: " + url) {}
};

} // namespace tracer
