#include "spill_buffer.hpp"

#include <array>

#include "tracer/util/error.hpp"

namespace tracer::proxy {

SpillBuffer::~SpillBuffer()
{
    if (file_ != nullptr) {
        std::fclose(file_);
    }
}

void SpillBuffer::append(std::string_view data)
{
    size_ += data.size();
    if (file_ == nullptr && memory_.size() + data.size() <= threshold_) {
        memory_.append(data);
        return;
    }
    if (file_ == nullptr) {
        file_ = std::tmpfile();
        if (file_ == nullptr) {
            throw IoError("cannot create spill file");
        }
        if (!memory_.empty() && std::fwrite(memory_.data(), 1, memory_.size(), file_) != memory_.size()) {
            throw IoError("spill write failed");
        }
        memory_.clear();
        memory_.shrink_to_fit();
    }
    if (!data.empty() && std::fwrite(data.data(), 1, data.size(), file_) != data.size()) {
        throw IoError("spill write failed");
    }
}

void SpillBuffer::for_each_chunk(const std::function<void(std::string_view)>& sink) const
{
    if (file_ == nullptr) {
        sink(memory_);
        return;
    }
    std::fflush(file_);
    std::rewind(file_);
    std::array<char, 64 * 1024> chunk{};
    std::size_t n;
    while ((n = std::fread(chunk.data(), 1, chunk.size(), file_)) > 0) {
        sink(std::string_view(chunk.data(), n));
    }
    std::fseek(file_, 0, SEEK_END);
}

} // namespace tracer::proxy
