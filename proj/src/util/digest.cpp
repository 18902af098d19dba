#include "tracer/util/digest.hpp"

#include <array>

#include <openssl/evp.h>

#include "tracer/util/error.hpp"

namespace tracer {

std::string base32_encode(std::string_view bytes)
{
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ234567";
    std::string out;
    out.reserve((bytes.size() * 8 + 4) / 5);
    std::uint32_t buffer = 0;
    int bits = 0;
    for (unsigned char c : bytes) {
        buffer = (buffer << 8) | c;
        bits += 8;
        while (bits >= 5) {
            out.push_back(alphabet[(buffer >> (bits - 5)) & 0x1f]);
            bits -= 5;
        }
    }
    if (bits > 0) {
        out.push_back(alphabet[(buffer << (5 - bits)) & 0x1f]);
    }
    return out;
}

std::string hex_encode(std::string_view bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out.push_back(digits[c >> 4]);
        out.push_back(digits[c & 0xf]);
    }
    return out;
}

namespace {

std::string one_shot(const EVP_MD* md, std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
        throw Error("digest computation failed");
    }
    return std::string(reinterpret_cast<const char*>(out.data()), len);
}

} // namespace

std::string sha1_raw(std::string_view data) { return one_shot(EVP_sha1(), data); }

std::string sha256_hex(std::string_view data) { return hex_encode(one_shot(EVP_sha256(), data)); }

std::string sha1_labelled(std::string_view data) { return "sha1:" + base32_encode(sha1_raw(data)); }

struct Sha1::Impl {
    EVP_MD_CTX* ctx = nullptr;
    ~Impl() { EVP_MD_CTX_free(ctx); }
};

Sha1::Sha1() : impl_(std::make_unique<Impl>())
{
    impl_->ctx = EVP_MD_CTX_new();
    if (impl_->ctx == nullptr || EVP_DigestInit_ex(impl_->ctx, EVP_sha1(), nullptr) != 1) {
        throw Error("sha1 init failed");
    }
}

Sha1::~Sha1() = default;
Sha1::Sha1(Sha1&&) noexcept = default;
Sha1& Sha1::operator=(Sha1&&) noexcept = default;

void Sha1::update(std::string_view data)
{
    if (!data.empty()) {
        EVP_DigestUpdate(impl_->ctx, data.data(), data.size());
    }
}

std::string Sha1::finish()
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx, out.data(), &len);
    return std::string(reinterpret_cast<const char*>(out.data()), len);
}

std::string Sha1::finish_labelled() { return "sha1:" + base32_encode(finish()); }

} // namespace tracer
