#include "sbcsim/net/addr.hpp"

#include <charconv>
#include <cstdio>

namespace sbcsim::net {

std::optional<MacAddr> MacAddr::parse(std::string_view text) {
    MacAddr m;
    if (text.size() != 17) return std::nullopt;
    for (std::size_t i = 0; i < 6; ++i) {
        if (i > 0 && text[i * 3 - 1] != ':') return std::nullopt;
        unsigned v = 0;
        auto first = text.data() + i * 3;
        auto [p, ec] = std::from_chars(first, first + 2, v, 16);
        if (ec != std::errc{} || p != first + 2) return std::nullopt;
        m.octets[i] = static_cast<std::uint8_t>(v);
    }
    return m;
}

std::string MacAddr::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1], octets[2], octets[3],
                  octets[4], octets[5]);
    return buf;
}

std::optional<Ipv4Addr> Ipv4Addr::parse(std::string_view text) {
    Ipv4Addr a;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 4; ++i) {
        if (i > 0) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
        unsigned v = 0;
        auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc{} || next == p || v > 255 || next - p > 3) return std::nullopt;
        a.octets[i] = static_cast<std::uint8_t>(v);
        p = next;
    }
    if (p != end) return std::nullopt;
    return a;
}

std::string Ipv4Addr::to_string() const {
    return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." + std::to_string(octets[2]) + "." +
           std::to_string(octets[3]);
}

std::optional<Subnet> Subnet::parse(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        auto a = Ipv4Addr::parse(text);
        if (!a) return std::nullopt;
        return Subnet{*a, 32};
    }
    auto a = Ipv4Addr::parse(text.substr(0, slash));
    unsigned prefix = 0;
    auto tail = text.substr(slash + 1);
    auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), prefix);
    if (!a || ec != std::errc{} || p != tail.data() + tail.size() || prefix > 32) return std::nullopt;
    return Subnet{*a, static_cast<std::uint8_t>(prefix)};
}

std::vector<Ipv4Addr> Subnet::hosts() const {
    std::vector<Ipv4Addr> out;
    const std::uint32_t base = network.to_u32() & mask();
    const std::uint64_t count = std::uint64_t{1} << (32 - prefix);
    if (prefix >= 31) {
        for (std::uint64_t i = 0; i < count; ++i) out.push_back(Ipv4Addr::from_u32(base + static_cast<std::uint32_t>(i)));
        return out;
    }
    for (std::uint64_t i = 1; i + 1 < count; ++i) out.push_back(Ipv4Addr::from_u32(base + static_cast<std::uint32_t>(i)));
    return out;
}

std::string Subnet::to_string() const {
    return Ipv4Addr::from_u32(network.to_u32() & mask()).to_string() + "/" + std::to_string(prefix);
}

}  // namespace sbcsim::net
