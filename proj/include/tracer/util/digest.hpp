#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace tracer {

std::string base32_encode(std::string_view bytes);
std::string hex_encode(std::string_view bytes);

std::string sha1_raw(std::string_view data);
std::string sha256_hex(std::string_view data);
// WARC form: "sha1:" + base32.
std::string sha1_labelled(std::string_view data);

// Incremental SHA-1 for streamed blocks.
class Sha1 {
  public:
    Sha1();
    ~Sha1();
    Sha1(Sha1&&) noexcept;
    Sha1& operator=(Sha1&&) noexcept;
    Sha1(const Sha1&) = delete;
    Sha1& operator=(const Sha1&) = delete;

    void update(std::string_view data);
    // Raw 20-byte digest. The hasher must not be updated afterwards.
    std::string finish();
    // "sha1:" + base32 of finish().
    std::string finish_labelled();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace tracer
