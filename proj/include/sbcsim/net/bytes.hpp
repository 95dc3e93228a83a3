#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sbcsim {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string to_hex(ByteView b);
Bytes from_hex(std::string_view hex);

// Big-endian (network order) appender.
class ByteWriter {
public:
    explicit ByteWriter(Bytes& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
    std::size_t size() const { return out_.size(); }

private:
    Bytes& out_;
};

class ShortRead : public std::runtime_error {
public:
    ShortRead() : std::runtime_error("read past end of buffer") {}
};

// Big-endian cursor over a byte view; throws ShortRead when exhausted.
class ByteReader {
public:
    explicit ByteReader(ByteView b) : buf_(b) {}

    std::uint8_t u8() {
        need(1);
        return buf_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((buf_[pos_] << 8) | buf_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    ByteView take(std::size_t n) {
        need(n);
        auto v = buf_.subspan(pos_, n);
        pos_ += n;
        return v;
    }
    ByteView rest() { return take(remaining()); }
    std::size_t remaining() const { return buf_.size() - pos_; }
    std::size_t position() const { return pos_; }
    void seek(std::size_t p) {
        if (p > buf_.size()) throw ShortRead();
        pos_ = p;
    }

private:
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw ShortRead();
    }
    ByteView buf_;
    std::size_t pos_ = 0;
};

}  // namespace sbcsim
