#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <string_view>

namespace tracer::proxy {

// Byte accumulator that moves to an anonymous temporary file once it grows
// past a threshold.
class SpillBuffer {
  public:
    explicit SpillBuffer(std::size_t threshold) : threshold_(threshold) {}
    ~SpillBuffer();
    SpillBuffer(const SpillBuffer&) = delete;
    SpillBuffer& operator=(const SpillBuffer&) = delete;

    void append(std::string_view data);
    std::uint64_t size() const { return size_; }
    bool spilled() const { return file_ != nullptr; }
    void for_each_chunk(const std::function<void(std::string_view)>& sink) const;

  private:
    std::size_t threshold_;
    std::string memory_;
    std::FILE* file_ = nullptr;
    std::uint64_t size_ = 0;
};

} // namespace tracer::proxy
