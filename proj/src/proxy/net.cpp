#include "net.hpp"

#include <cerrno>
#include <cstring>

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>
#include <fcntl.h>

#include <openssl/err.h>

namespace tracer::proxy::net {

Socket::~Socket()
{
    if (fd_ >= 0) {
        ::close(fd_);
    }
}

Socket& Socket::operator=(Socket&& other) noexcept
{
    if (this != &other) {
        if (fd_ >= 0) {
            ::close(fd_);
        }
        fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
}

void Socket::shutdown() const
{
    if (fd_ >= 0) {
        ::shutdown(fd_, SHUT_RDWR);
    }
}

void Socket::set_timeouts(std::chrono::milliseconds timeout) const
{
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    int one = 1;
    setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

namespace {

struct AddrInfo {
    addrinfo* head = nullptr;
    ~AddrInfo()
    {
        if (head != nullptr) {
            freeaddrinfo(head);
        }
    }
};

void resolve(const std::string& host, int port, bool passive, AddrInfo& out)
{
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) {
        hints.ai_flags = AI_PASSIVE;
    }
    auto service = std::to_string(port);
    int rc = getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(), &hints, &out.head);
    if (rc != 0) {
        throw NetError("cannot resolve " + host + ": " + gai_strerror(rc));
    }
}

} // namespace

Socket listen_on(const std::string& host, int port, int& bound_port)
{
    AddrInfo info;
    resolve(host, port, true, info);
    std::string last_error = "no address";
    for (auto* ai = info.head; ai != nullptr; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!s.valid()) {
            last_error = std::strerror(errno);
            continue;
        }
        int one = 1;
        setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), 256) != 0) {
            last_error = std::strerror(errno);
            continue;
        }
        sockaddr_storage addr{};
        socklen_t len = sizeof addr;
        getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
        bound_port = addr.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port)
                                                : ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
        return s;
    }
    throw NetError("cannot listen on " + host + ":" + std::to_string(port) + ": " + last_error);
}

Socket connect_to(const std::string& host, int port, std::chrono::milliseconds timeout)
{
    AddrInfo info;
    resolve(host, port, false, info);
    std::string last_error = "no address";
    for (auto* ai = info.head; ai != nullptr; ai = ai->ai_next) {
        Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
        if (!s.valid()) {
            last_error = std::strerror(errno);
            continue;
        }
        int flags = fcntl(s.fd(), F_GETFL, 0);
        fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
        if (rc != 0 && errno == EINPROGRESS) {
            pollfd pfd{s.fd(), POLLOUT, 0};
            rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
            if (rc == 1) {
                int err = 0;
                socklen_t len = sizeof err;
                getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
                rc = err == 0 ? 0 : -1;
                errno = err;
            } else {
                errno = rc == 0 ? ETIMEDOUT : errno;
                rc = -1;
            }
        }
        if (rc != 0) {
            last_error = std::strerror(errno);
            continue;
        }
        fcntl(s.fd(), F_SETFL, flags);
        s.set_timeouts(timeout);
        return s;
    }
    throw NetError("cannot connect to " + host + ":" + std::to_string(port) + ": " + last_error);
}

std::size_t SocketStream::read_some(char* buf, std::size_t n)
{
    while (true) {
        auto got = ::recv(fd_, buf, n, 0);
        if (got >= 0) {
            return static_cast<std::size_t>(got);
        }
        if (errno == EINTR) {
            continue;
        }
        throw NetError(std::string("recv failed: ") + std::strerror(errno));
    }
}

void SocketStream::write_all(std::string_view data)
{
    while (!data.empty()) {
        auto sent = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
        if (sent < 0) {
            if (errno == EINTR) {
                continue;
            }
            throw NetError(std::string("send failed: ") + std::strerror(errno));
        }
        data.remove_prefix(static_cast<std::size_t>(sent));
    }
}

namespace {

std::string ssl_error_text(SSL* ssl, int rc, std::string_view what)
{
    int err = SSL_get_error(ssl, rc);
    std::string out(what);
    out += " (ssl error " + std::to_string(err);
    if (auto code = ERR_get_error(); code != 0) {
        char buf[256];
        ERR_error_string_n(code, buf, sizeof buf);
        out += ", ";
        out += buf;
    }
    out += ")";
    return out;
}

int select_http11(SSL*, const unsigned char** out, unsigned char* outlen, const unsigned char* in,
                  unsigned int inlen, void*)
{
    static const unsigned char http11[] = "\x08http/1.1";
    unsigned char* selected = nullptr;
    if (SSL_select_next_proto(&selected, outlen, http11, sizeof http11 - 1, in, inlen) == OPENSSL_NPN_NEGOTIATED) {
        *out = selected;
        return SSL_TLSEXT_ERR_OK;
    }
    return SSL_TLSEXT_ERR_NOACK;
}

} // namespace

TlsStream::~TlsStream()
{
    if (ssl_ != nullptr) {
        SSL_shutdown(ssl_);
        SSL_free(ssl_);
    }
}

std::unique_ptr<TlsStream> TlsStream::accept(SSL_CTX* ctx, int fd, const Credential& leaf)
{
    SSL* ssl = SSL_new(ctx);
    std::unique_ptr<TlsStream> stream(new TlsStream(ssl));
    if (SSL_use_certificate(ssl, leaf.certificate.get()) != 1 || SSL_use_PrivateKey(ssl, leaf.key.get()) != 1) {
        throw NetError("cannot install leaf certificate");
    }
    SSL_set_fd(ssl, fd);
    int rc = SSL_accept(ssl);
    if (rc != 1) {
        throw NetError(ssl_error_text(ssl, rc, "TLS accept failed"));
    }
    return stream;
}

std::unique_ptr<TlsStream> TlsStream::connect(SSL_CTX* ctx, int fd, const std::string& server_name)
{
    SSL* ssl = SSL_new(ctx);
    std::unique_ptr<TlsStream> stream(new TlsStream(ssl));
    SSL_set_fd(ssl, fd);
    SSL_set_tlsext_host_name(ssl, server_name.c_str());
    if (SSL_get_verify_mode(ssl) != SSL_VERIFY_NONE) {
        SSL_set1_host(ssl, server_name.c_str());
    }
    static const unsigned char alpn[] = "\x08http/1.1";
    SSL_set_alpn_protos(ssl, alpn, sizeof alpn - 1);
    int rc = SSL_connect(ssl);
    if (rc != 1) {
        throw NetError(ssl_error_text(ssl, rc, "TLS connect to " + server_name + " failed"));
    }
    return stream;
}

std::size_t TlsStream::read_some(char* buf, std::size_t n)
{
    while (true) {
        int rc = SSL_read(ssl_, buf, static_cast<int>(std::min<std::size_t>(n, 1 << 30)));
        if (rc > 0) {
            return static_cast<std::size_t>(rc);
        }
        int err = SSL_get_error(ssl_, rc);
        if (err == SSL_ERROR_ZERO_RETURN) {
            return 0;
        }
        if (err == SSL_ERROR_SYSCALL && ERR_peek_error() == 0) {
            // Peer closed without close_notify; treat as EOF.
            return 0;
        }
        if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) {
            continue;
        }
        throw NetError(ssl_error_text(ssl_, rc, "TLS read failed"));
    }
}

void TlsStream::write_all(std::string_view data)
{
    while (!data.empty()) {
        int rc = SSL_write(ssl_, data.data(), static_cast<int>(std::min<std::size_t>(data.size(), 1 << 30)));
        if (rc <= 0) {
            int err = SSL_get_error(ssl_, rc);
            if (err == SSL_ERROR_WANT_READ || err == SSL_ERROR_WANT_WRITE) {
                continue;
            }
            throw NetError(ssl_error_text(ssl_, rc, "TLS write failed"));
        }
        data.remove_prefix(static_cast<std::size_t>(rc));
    }
}

SslCtx make_server_ctx()
{
    SslCtx ctx(SSL_CTX_new(TLS_server_method()));
    if (!ctx) {
        throw NetError("cannot create TLS server context");
    }
    SSL_CTX_set_min_proto_version(ctx.get(), TLS1_2_VERSION);
    SSL_CTX_set_alpn_select_cb(ctx.get(), select_http11, nullptr);
    return ctx;
}

SslCtx make_client_ctx(bool verify, const std::optional<std::string>& ca_file)
{
    SslCtx ctx(SSL_CTX_new(TLS_client_method()));
    if (!ctx) {
        throw NetError("cannot create TLS client context");
    }
    SSL_CTX_set_min_proto_version(ctx.get(), TLS1_2_VERSION);
    if (verify) {
        SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_PEER, nullptr);
        if (ca_file) {
            if (SSL_CTX_load_verify_locations(ctx.get(), ca_file->c_str(), nullptr) != 1) {
                throw NetError("cannot load upstream CA file " + *ca_file);
            }
            X509_VERIFY_PARAM_set_flags(SSL_CTX_get0_param(ctx.get()), X509_V_FLAG_PARTIAL_CHAIN);
        } else {
            SSL_CTX_set_default_verify_paths(ctx.get());
        }
    } else {
        SSL_CTX_set_verify(ctx.get(), SSL_VERIFY_NONE, nullptr);
    }
    return ctx;
}

std::optional<std::string> Reader::read_head(std::size_t limit)
{
    std::size_t scan_from = pos_;
    while (true) {
        auto end = buffer_.find("\r\n\r\n", scan_from);
        if (end != std::string::npos) {
            auto head = buffer_.substr(pos_, end + 4 - pos_);
            pos_ = end + 4;
            if (pos_ == buffer_.size()) {
                buffer_.clear();
                pos_ = 0;
            }
            return head;
        }
        scan_from = buffer_.size() >= 3 ? buffer_.size() - 3 : 0;
        scan_from = std::max(scan_from, pos_);
        if (buffer_.size() - pos_ > limit) {
            throw NetError("HTTP head exceeds limit");
        }
        char chunk[16 * 1024];
        auto got = stream_->read_some(chunk, sizeof chunk);
        if (got == 0) {
            if (buffer_.size() == pos_) {
                return std::nullopt;
            }
            throw NetError("connection closed mid-head");
        }
        buffer_.append(chunk, got);
    }
}

std::size_t Reader::read_some(char* buf, std::size_t n)
{
    if (pos_ < buffer_.size()) {
        auto take = std::min(n, buffer_.size() - pos_);
        std::memcpy(buf, buffer_.data() + pos_, take);
        pos_ += take;
        if (pos_ == buffer_.size()) {
            buffer_.clear();
            pos_ = 0;
        }
        return take;
    }
    return stream_->read_some(buf, n);
}

} // namespace tracer::proxy::net
