#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sbcsim::net {

struct MacAddr {
    std::array<std::uint8_t, 6> octets{};

    static constexpr MacAddr broadcast() { return MacAddr{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}}; }
    static constexpr MacAddr zero() { return MacAddr{}; }
    static std::optional<MacAddr> parse(std::string_view text);

    constexpr bool is_broadcast() const { return *this == broadcast(); }
    // Group bit: lowest bit of the first octet. Broadcast is also a group address.
    constexpr bool is_group() const { return (octets[0] & 0x01) != 0; }

    std::string to_string() const;
    constexpr auto operator<=>(const MacAddr&) const = default;
};

struct Ipv4Addr {
    std::array<std::uint8_t, 4> octets{};

    static constexpr Ipv4Addr from_u32(std::uint32_t v) {
        return Ipv4Addr{{static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                         static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)}};
    }
    static std::optional<Ipv4Addr> parse(std::string_view text);

    constexpr std::uint32_t to_u32() const {
        return (std::uint32_t{octets[0]} << 24) | (std::uint32_t{octets[1]} << 16) |
               (std::uint32_t{octets[2]} << 8) | std::uint32_t{octets[3]};
    }
    constexpr bool is_unspecified() const { return to_u32() == 0; }

    std::string to_string() const;
    constexpr auto operator<=>(const Ipv4Addr&) const = default;
};

/// IPv4 prefix such as 10.0.0.0/28.
struct Subnet {
    Ipv4Addr network;
    std::uint8_t prefix = 32;

    static std::optional<Subnet> parse(std::string_view text);

    std::uint32_t mask() const { return prefix == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix); }
    bool contains(Ipv4Addr a) const { return (a.to_u32() & mask()) == (network.to_u32() & mask()); }
    // Usable host addresses in ascending order (excludes network and broadcast for prefix < 31).
    std::vector<Ipv4Addr> hosts() const;
    std::string to_string() const;
};

}  // namespace sbcsim::net

template <>
struct std::hash<sbcsim::net::MacAddr> {
    std::size_t operator()(const sbcsim::net::MacAddr& m) const noexcept {
        std::uint64_t v = 0;
        for (auto o : m.octets) v = (v << 8) | o;
        return std::hash<std::uint64_t>{}(v);
    }
};

template <>
struct std::hash<sbcsim::net::Ipv4Addr> {
    std::size_t operator()(const sbcsim::net::Ipv4Addr& a) const noexcept {
        return std::hash<std::uint32_t>{}(a.to_u32());
    }
};
