#pragma once

#include <memory>
#include <string>
#include <string_view>

#include <openssl/types.h>

#include "tracer/util/error.hpp"

namespace tracer::proxy {

class CaError : public Error {
  public:
    using Error::Error;
};

// Certificate plus private key, shared between the owner and TLS sessions.
struct Credential {
    std::shared_ptr<X509> certificate;
    std::shared_ptr<EVP_PKEY> key;

    std::string certificate_pem() const;
    std::string private_key_pem() const;
};

// Session-local certificate authority that mints per-host leaf
// certificates for TLS interception. Copies share the same key and leaf
// cache; leaf_for() is safe to call from any thread.
class CertificateAuthority {
  public:
    static CertificateAuthority generate(std::string_view common_name = "tracer capture session CA");
    static CertificateAuthority load(std::string_view certificate_pem, std::string_view key_pem);

    std::string certificate_pem() const;
    // Only for persisting the CA deliberately (e.g. --ca-out with a key).
    std::string private_key_pem() const;
    const Credential& credential() const;

    // Leaf for a DNS name or IP literal, signed by this CA.
    Credential leaf_for(std::string_view host) const;

  private:
    struct State;
    explicit CertificateAuthority(std::shared_ptr<State> state);
    std::shared_ptr<State> state_;
};

// Self-signed server credential for a host (used by the fixture portal).
Credential self_signed_credential(std::string_view host);

} // namespace tracer::proxy
