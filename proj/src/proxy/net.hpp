#pragma once

// Blocking socket and TLS stream helpers private to the capture proxy.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <openssl/ssl.h>

#include "tracer/proxy/certificate_authority.hpp"
#include "tracer/util/error.hpp"

namespace tracer::proxy::net {

class NetError : public Error {
  public:
    using Error::Error;
};

class Socket {
  public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket();
    Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void shutdown() const;
    void set_timeouts(std::chrono::milliseconds timeout) const;

  private:
    int fd_ = -1;
};

// Listening socket bound to host:port (0 = ephemeral). Throws NetError.
Socket listen_on(const std::string& host, int port, int& bound_port);
Socket connect_to(const std::string& host, int port, std::chrono::milliseconds timeout);

class Stream {
  public:
    virtual ~Stream() = default;
    // 0 on orderly EOF; throws NetError on failure.
    virtual std::size_t read_some(char* buf, std::size_t n) = 0;
    virtual void write_all(std::string_view data) = 0;
};

class SocketStream : public Stream {
  public:
    explicit SocketStream(int fd) : fd_(fd) {}
    std::size_t read_some(char* buf, std::size_t n) override;
    void write_all(std::string_view data) override;

  private:
    int fd_;
};

class TlsStream : public Stream {
  public:
    ~TlsStream() override;
    TlsStream(const TlsStream&) = delete;
    TlsStream& operator=(const TlsStream&) = delete;

    // Server side of an intercepted tunnel.
    static std::unique_ptr<TlsStream> accept(SSL_CTX* ctx, int fd, const Credential& leaf);
    // Client side towards an origin. ALPN offers http/1.1 only.
    static std::unique_ptr<TlsStream> connect(SSL_CTX* ctx, int fd, const std::string& server_name);

    std::size_t read_some(char* buf, std::size_t n) override;
    void write_all(std::string_view data) override;

  private:
    explicit TlsStream(SSL* ssl) : ssl_(ssl) {}
    SSL* ssl_;
};

struct SslCtxDeleter {
    void operator()(SSL_CTX* ctx) const { SSL_CTX_free(ctx); }
};
using SslCtx = std::unique_ptr<SSL_CTX, SslCtxDeleter>;

SslCtx make_server_ctx();
SslCtx make_client_ctx(bool verify, const std::optional<std::string>& ca_file);

// Buffered reading on top of a Stream.
class Reader {
  public:
    explicit Reader(Stream& stream) : stream_(&stream) {}

    void rebind(Stream& stream) { stream_ = &stream; }
    // Returns the head including its terminating CRLF CRLF, or nullopt on EOF
    // before any byte. Throws NetError on EOF mid-head or oversize heads.
    std::optional<std::string> read_head(std::size_t limit = 256 * 1024);
    std::size_t read_some(char* buf, std::size_t n);
    std::size_t buffered() const { return buffer_.size() - pos_; }
    // Returns bytes read too far (e.g. past the end of a chunked body).
    void unread(std::string_view data) { buffer_.insert(pos_, data); }

  private:
    Stream* stream_;
    std::string buffer_;
    std::size_t pos_ = 0;
};

} // namespace tracer::proxy::net
