#include "tracer/proxy/certificate_authority.hpp"

#include <map>
#include <mutex>
#include <random>

#include <openssl/bio.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/x509.h>
#include <openssl/x509v3.h>

#include <arpa/inet.h>

namespace tracer::proxy {

namespace {

std::string openssl_error(std::string_view what)
{
    std::string out(what);
    if (auto code = ERR_get_error(); code != 0) {
        char buf[256];
        ERR_error_string_n(code, buf, sizeof buf);
        out += ": ";
        out += buf;
    }
    return out;
}

std::shared_ptr<EVP_PKEY> new_key()
{
    EVP_PKEY* key = EVP_EC_gen("P-256");
    if (key == nullptr) {
        throw CaError(openssl_error("key generation failed"));
    }
    return {key, EVP_PKEY_free};
}

std::shared_ptr<X509> wrap(X509* cert) { return {cert, X509_free}; }

void set_serial(X509* cert)
{
    thread_local std::mt19937_64 rng{std::random_device{}()};
    ASN1_INTEGER_set_int64(X509_get_serialNumber(cert), static_cast<std::int64_t>(rng() >> 2));
}

void add_extension(X509* cert, X509* issuer, int nid, const char* value)
{
    X509V3_CTX ctx;
    X509V3_set_ctx_nodb(&ctx);
    X509V3_set_ctx(&ctx, issuer, cert, nullptr, nullptr, 0);
    X509_EXTENSION* ext = X509V3_EXT_conf_nid(nullptr, &ctx, nid, value);
    if (ext == nullptr) {
        throw CaError(openssl_error("cannot build certificate extension"));
    }
    X509_add_ext(cert, ext, -1);
    X509_EXTENSION_free(ext);
}

bool is_ip_literal(std::string_view host)
{
    std::string h(host);
    unsigned char buf[16];
    return inet_pton(AF_INET, h.c_str(), buf) == 1 || inet_pton(AF_INET6, h.c_str(), buf) == 1;
}

std::shared_ptr<X509> build_certificate(std::string_view common_name, EVP_PKEY* subject_key, X509* issuer,
                                        EVP_PKEY* issuer_key, bool is_ca, std::string_view san_host)
{
    auto cert = wrap(X509_new());
    X509_set_version(cert.get(), 2);
    set_serial(cert.get());
    X509_gmtime_adj(X509_getm_notBefore(cert.get()), -3600);
    X509_gmtime_adj(X509_getm_notAfter(cert.get()), 60L * 60 * 24 * 30);
    X509_set_pubkey(cert.get(), subject_key);
    X509_NAME* name = X509_get_subject_name(cert.get());
    std::string cn(common_name);
    X509_NAME_add_entry_by_txt(name, "O", MBSTRING_ASC, reinterpret_cast<const unsigned char*>("tracer"), -1,
                               -1, 0);
    X509_NAME_add_entry_by_txt(name, "CN", MBSTRING_ASC, reinterpret_cast<const unsigned char*>(cn.c_str()), -1,
                               -1, 0);
    X509* signer = issuer != nullptr ? issuer : cert.get();
    X509_set_issuer_name(cert.get(), X509_get_subject_name(signer));

    if (is_ca) {
        add_extension(cert.get(), signer, NID_basic_constraints, "critical,CA:TRUE");
        add_extension(cert.get(), signer, NID_key_usage, "critical,keyCertSign,cRLSign");
        add_extension(cert.get(), signer, NID_subject_key_identifier, "hash");
    } else {
        add_extension(cert.get(), signer, NID_basic_constraints, "critical,CA:FALSE");
        add_extension(cert.get(), signer, NID_key_usage, "critical,digitalSignature,keyEncipherment");
        add_extension(cert.get(), signer, NID_ext_key_usage, "serverAuth");
        std::string san = (is_ip_literal(san_host) ? "IP:" : "DNS:") + std::string(san_host);
        add_extension(cert.get(), signer, NID_subject_alt_name, san.c_str());
        if (issuer != nullptr) {
            add_extension(cert.get(), signer, NID_authority_key_identifier, "keyid:always");
        }
    }
    if (X509_sign(cert.get(), issuer_key, EVP_sha256()) == 0) {
        throw CaError(openssl_error("certificate signing failed"));
    }
    return cert;
}

std::string bio_to_string(BIO* bio)
{
    char* data = nullptr;
    long len = BIO_get_mem_data(bio, &data);
    std::string out(data, static_cast<std::size_t>(len));
    BIO_free(bio);
    return out;
}

} // namespace

std::string Credential::certificate_pem() const
{
    BIO* bio = BIO_new(BIO_s_mem());
    PEM_write_bio_X509(bio, certificate.get());
    return bio_to_string(bio);
}

std::string Credential::private_key_pem() const
{
    BIO* bio = BIO_new(BIO_s_mem());
    PEM_write_bio_PrivateKey(bio, key.get(), nullptr, nullptr, 0, nullptr, nullptr);
    return bio_to_string(bio);
}

struct CertificateAuthority::State {
    Credential ca;
    mutable std::mutex mutex;
    mutable std::map<std::string, Credential, std::less<>> leaves;
};

CertificateAuthority::CertificateAuthority(std::shared_ptr<State> state) : state_(std::move(state)) {}

CertificateAuthority CertificateAuthority::generate(std::string_view common_name)
{
    auto state = std::make_shared<State>();
    state->ca.key = new_key();
    state->ca.certificate =
        build_certificate(common_name, state->ca.key.get(), nullptr, state->ca.key.get(), true, {});
    return CertificateAuthority(std::move(state));
}

CertificateAuthority CertificateAuthority::load(std::string_view certificate_pem, std::string_view key_pem)
{
    auto state = std::make_shared<State>();
    BIO* cbio = BIO_new_mem_buf(certificate_pem.data(), static_cast<int>(certificate_pem.size()));
    X509* cert = PEM_read_bio_X509(cbio, nullptr, nullptr, nullptr);
    BIO_free(cbio);
    BIO* kbio = BIO_new_mem_buf(key_pem.data(), static_cast<int>(key_pem.size()));
    EVP_PKEY* key = PEM_read_bio_PrivateKey(kbio, nullptr, nullptr, nullptr);
    BIO_free(kbio);
    if (cert == nullptr || key == nullptr) {
        X509_free(cert);
        EVP_PKEY_free(key);
        throw CaError(openssl_error("cannot load CA certificate or key"));
    }
    state->ca.certificate = wrap(cert);
    state->ca.key = {key, EVP_PKEY_free};
    if (X509_check_private_key(cert, key) != 1) {
        throw CaError("CA key does not match certificate");
    }
    return CertificateAuthority(std::move(state));
}

std::string CertificateAuthority::certificate_pem() const { return state_->ca.certificate_pem(); }

std::string CertificateAuthority::private_key_pem() const { return state_->ca.private_key_pem(); }

const Credential& CertificateAuthority::credential() const { return state_->ca; }

Credential CertificateAuthority::leaf_for(std::string_view host) const
{
    std::lock_guard lock(state_->mutex);
    if (auto it = state_->leaves.find(host); it != state_->leaves.end()) {
        return it->second;
    }
    Credential leaf;
    leaf.key = new_key();
    leaf.certificate = build_certificate(host, leaf.key.get(), state_->ca.certificate.get(), state_->ca.key.get(),
                                         false, host);
    state_->leaves.emplace(std::string(host), leaf);
    return leaf;
}

Credential self_signed_credential(std::string_view host)
{
    Credential c;
    c.key = new_key();
    c.certificate = build_certificate(host, c.key.get(), nullptr, c.key.get(), false, host);
    return c;
}

} // namespace tracer::proxy
