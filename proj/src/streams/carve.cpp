#include <algorithm>
#include <array>

#include "sbcsim/streams/streams.hpp"

namespace sbcsim::streams {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

bool is_jpeg_start(ByteView s, std::size_t i) {
    return i + 3 <= s.size() && s[i] == 0xFF && s[i + 1] == 0xD8 && s[i + 2] == 0xFF;
}

// Position one past the first FF D9 at or after `from`.
std::optional<std::size_t> jpeg_end(ByteView s, std::size_t from) {
    for (std::size_t p = from; p + 1 < s.size(); ++p)
        if (s[p] == 0xFF && s[p + 1] == 0xD9) return p + 2;
    return std::nullopt;
}

std::uint32_t be32(ByteView s, std::size_t at) {
    return (std::uint32_t{s[at]} << 24) | (std::uint32_t{s[at + 1]} << 16) | (std::uint32_t{s[at + 2]} << 8) |
           std::uint32_t{s[at + 3]};
}

bool chunk_type_ok(ByteView s, std::size_t at) {
    for (std::size_t k = 0; k < 4; ++k) {
        const auto c = s[at + k];
        if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'))) return false;
    }
    return true;
}

// Walks chunks from just past the signature; one past the IEND CRC on success.
std::optional<std::size_t> png_end(ByteView s, std::size_t start) {
    std::size_t pos = start + kPngSignature.size();
    while (true) {
        if (s.size() - pos < 12) return std::nullopt;
        const std::uint32_t len = be32(s, pos);
        if (len > 0x7FFFFFFFu || !chunk_type_ok(s, pos + 4)) return std::nullopt;
        if (s.size() - pos - 12 < len) return std::nullopt;
        const bool iend = s[pos + 4] == 'I' && s[pos + 5] == 'E' && s[pos + 6] == 'N' && s[pos + 7] == 'D';
        pos += 12 + len;
        if (iend) return pos;
    }
}

bool is_png_start(ByteView s, std::size_t i) {
    return i + kPngSignature.size() <= s.size() &&
           std::equal(kPngSignature.begin(), kPngSignature.end(), s.begin() + static_cast<std::ptrdiff_t>(i));
}

}  // namespace

std::vector<CarvedImage> carve_images(ByteView s) {
    std::vector<CarvedImage> out;
    std::size_t i = 0;
    while (i < s.size()) {
        std::optional<std::size_t> end;
        ImageFormat fmt = ImageFormat::Jpeg;
        if (is_jpeg_start(s, i)) {
            end = jpeg_end(s, i + 3);
        } else if (is_png_start(s, i)) {
            fmt = ImageFormat::Png;
            end = png_end(s, i);
        }
        if (!end) {
            ++i;
            continue;
        }
        out.push_back(CarvedImage{fmt, i, Bytes(s.begin() + static_cast<std::ptrdiff_t>(i),
                                                s.begin() + static_cast<std::ptrdiff_t>(*end))});
        i = *end;
    }
    return out;
}

}  // namespace sbcsim::streams
