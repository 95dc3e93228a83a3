#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>

#include "sbcsim/net/addr.hpp"
#include "sbcsim/net/bytes.hpp"

namespace sbcsim::net {

inline constexpr std::uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr std::uint16_t kEtherTypeArp = 0x0806;
inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

inline constexpr std::size_t kEthernetHeaderLen = 14;
inline constexpr std::size_t kArpLen = 28;
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kUdpHeaderLen = 8;
inline constexpr std::size_t kTcpHeaderLen = 20;
inline constexpr std::size_t kMtu = 1500;
inline constexpr std::size_t kMaxUdpPayload = kMtu - kIpv4HeaderLen - kUdpHeaderLen;
inline constexpr std::size_t kTcpMss = kMtu - kIpv4HeaderLen - kTcpHeaderLen;

enum class ArpOp : std::uint16_t { Request = 1, Reply = 2 };

struct ArpPacket {
    ArpOp op = ArpOp::Request;
    MacAddr sender_mac;
    Ipv4Addr sender_ip;
    MacAddr target_mac;
    Ipv4Addr target_ip;

    bool operator==(const ArpPacket&) const = default;
};

struct UdpDatagram {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    Bytes payload;

    bool operator==(const UdpDatagram&) const = default;
};

namespace tcp_flags {
inline constexpr std::uint8_t FIN = 0x01;
inline constexpr std::uint8_t SYN = 0x02;
inline constexpr std::uint8_t RST = 0x04;
inline constexpr std::uint8_t PSH = 0x08;
inline constexpr std::uint8_t ACK = 0x10;
}  // namespace tcp_flags

// No options; window is carried only so decoded headers re-encode exactly.
struct TcpSegment {
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint32_t seq = 0;
    std::uint32_t ack = 0;
    std::uint8_t flags = 0;
    std::uint16_t window = 65535;
    Bytes payload;

    bool has(std::uint8_t f) const { return (flags & f) == f; }
    bool operator==(const TcpSegment&) const = default;
};

using TransportPayload = std::variant<UdpDatagram, TcpSegment, Bytes>;

struct Ipv4Packet {
    Ipv4Addr src;
    Ipv4Addr dst;
    std::uint8_t protocol = 0;
    std::uint8_t ttl = 64;
    std::uint8_t tos = 0;
    std::uint16_t identification = 0;
    std::uint16_t flags_fragment = 0;
    // UdpDatagram when protocol is 17, TcpSegment when 6, raw bytes otherwise.
    TransportPayload payload = Bytes{};

    const UdpDatagram* udp() const { return std::get_if<UdpDatagram>(&payload); }
    const TcpSegment* tcp() const { return std::get_if<TcpSegment>(&payload); }
    bool operator==(const Ipv4Packet&) const = default;
};

using FramePayload = std::variant<ArpPacket, Ipv4Packet, Bytes>;

struct EthernetFrame {
    MacAddr dst;
    MacAddr src;
    std::uint16_t ethertype = 0;
    FramePayload payload = Bytes{};

    const ArpPacket* arp() const { return std::get_if<ArpPacket>(&payload); }
    const Ipv4Packet* ipv4() const { return std::get_if<Ipv4Packet>(&payload); }
    bool operator==(const EthernetFrame&) const = default;
};

class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DecodeError : public std::runtime_error {
public:
    enum class Kind { TruncatedFrame, MalformedPacket };
    DecodeError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Ethernet II bytes with IPv4/UDP/TCP checksums filled in. No padding is added.
Bytes encode_frame(const EthernetFrame& frame);

/// Strict inverse of encode_frame: any accepted input re-encodes to the same bytes.
/// Unknown ethertypes and IPv4 protocols are kept as opaque payload.
EthernetFrame decode_frame(ByteView bytes);

Bytes encode_arp(const ArpPacket& arp);
ArpPacket decode_arp(ByteView bytes);

Bytes encode_ipv4(const Ipv4Packet& pkt);
Ipv4Packet decode_ipv4(ByteView bytes);

Bytes encode_udp(const UdpDatagram& udp, Ipv4Addr src, Ipv4Addr dst);
Bytes encode_tcp(const TcpSegment& seg, Ipv4Addr src, Ipv4Addr dst);

/// RFC 1071 ones'-complement sum over `data`, seeded with `initial`.
std::uint16_t internet_checksum(ByteView data, std::uint32_t initial = 0);
std::uint32_t pseudo_header_sum(Ipv4Addr src, Ipv4Addr dst, std::uint8_t protocol, std::size_t length);

// Frame builders used by every node type.
EthernetFrame make_arp_frame(MacAddr eth_src, MacAddr eth_dst, const ArpPacket& arp);
EthernetFrame make_udp_frame(MacAddr eth_src, MacAddr eth_dst, Ipv4Addr src, Ipv4Addr dst,
                             UdpDatagram udp, std::uint8_t ttl = 64);
EthernetFrame make_tcp_frame(MacAddr eth_src, MacAddr eth_dst, Ipv4Addr src, Ipv4Addr dst,
                             TcpSegment seg, std::uint8_t ttl = 64);

/// An encoded frame shared between trace events and nodes without copying.
struct WireFrame {
    EthernetFrame frame;
    Bytes bytes;

    static std::shared_ptr<const WireFrame> make(EthernetFrame f);
    static std::shared_ptr<const WireFrame> from_bytes(Bytes b);
};
using FrameRef = std::shared_ptr<const WireFrame>;

std::string describe(const EthernetFrame& frame);

}  // namespace sbcsim::net
