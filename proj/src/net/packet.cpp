#include "sbcsim/net/packet.hpp"

#include <cstdio>
#include <sstream>

namespace sbcsim::net {

namespace {

[[noreturn]] void malformed(const std::string& what) {
    throw DecodeError(DecodeError::Kind::MalformedPacket, what);
}

void put_mac(ByteWriter& w, const MacAddr& m) { w.raw(m.octets); }
void put_ip(ByteWriter& w, const Ipv4Addr& a) { w.raw(a.octets); }

MacAddr get_mac(ByteReader& r) {
    MacAddr m;
    auto v = r.take(6);
    std::copy(v.begin(), v.end(), m.octets.begin());
    return m;
}

Ipv4Addr get_ip(ByteReader& r) {
    Ipv4Addr a;
    auto v = r.take(4);
    std::copy(v.begin(), v.end(), a.octets.begin());
    return a;
}

void patch_u16(Bytes& b, std::size_t at, std::uint16_t v) {
    b[at] = static_cast<std::uint8_t>(v >> 8);
    b[at + 1] = static_cast<std::uint8_t>(v);
}

UdpDatagram decode_udp(ByteView bytes, Ipv4Addr src, Ipv4Addr dst) {
    if (bytes.size() < kUdpHeaderLen) malformed("udp header truncated");
    ByteReader r(bytes);
    UdpDatagram d;
    d.src_port = r.u16();
    d.dst_port = r.u16();
    const auto length = r.u16();
    const auto checksum = r.u16();
    if (length != bytes.size()) malformed("udp length field disagrees with ip payload length");
    if (checksum == 0) malformed("udp datagram without checksum");
    if (internet_checksum(bytes, pseudo_header_sum(src, dst, kProtoUdp, bytes.size())) != 0)
        malformed("udp checksum mismatch");
    auto rest = r.rest();
    d.payload.assign(rest.begin(), rest.end());
    return d;
}

TcpSegment decode_tcp(ByteView bytes, Ipv4Addr src, Ipv4Addr dst) {
    if (bytes.size() < kTcpHeaderLen) malformed("tcp header truncated");
    ByteReader r(bytes);
    TcpSegment s;
    s.src_port = r.u16();
    s.dst_port = r.u16();
    s.seq = r.u32();
    s.ack = r.u32();
    const auto offset_flags = r.u16();
    if ((offset_flags >> 12) != 5) malformed("tcp options are not modeled");
    if ((offset_flags & 0x0f00) != 0) malformed("tcp reserved bits set");
    s.flags = static_cast<std::uint8_t>(offset_flags & 0xff);
    s.window = r.u16();
    r.u16();  // checksum, verified below
    if (r.u16() != 0) malformed("tcp urgent pointer is not modeled");
    if (internet_checksum(bytes, pseudo_header_sum(src, dst, kProtoTcp, bytes.size())) != 0)
        malformed("tcp checksum mismatch");
    auto rest = r.rest();
    s.payload.assign(rest.begin(), rest.end());
    return s;
}

}  // namespace

std::uint16_t internet_checksum(ByteView data, std::uint32_t initial) {
    std::uint64_t sum = initial;
    std::size_t i = 0;
    for (; i + 1 < data.size(); i += 2) sum += static_cast<std::uint32_t>((data[i] << 8) | data[i + 1]);
    if (i < data.size()) sum += static_cast<std::uint32_t>(data[i] << 8);
    while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum & 0xffff);
}

std::uint32_t pseudo_header_sum(Ipv4Addr src, Ipv4Addr dst, std::uint8_t protocol, std::size_t length) {
    std::uint32_t sum = 0;
    sum += (src.to_u32() >> 16) + (src.to_u32() & 0xffff);
    sum += (dst.to_u32() >> 16) + (dst.to_u32() & 0xffff);
    sum += protocol;
    sum += static_cast<std::uint32_t>(length);
    return sum;
}

Bytes encode_arp(const ArpPacket& arp) {
    Bytes out;
    out.reserve(kArpLen);
    ByteWriter w(out);
    w.u16(1);  // ethernet
    w.u16(kEtherTypeIpv4);
    w.u8(6);
    w.u8(4);
    w.u16(static_cast<std::uint16_t>(arp.op));
    put_mac(w, arp.sender_mac);
    put_ip(w, arp.sender_ip);
    put_mac(w, arp.target_mac);
    put_ip(w, arp.target_ip);
    return out;
}

ArpPacket decode_arp(ByteView bytes) {
    if (bytes.size() != kArpLen) malformed("arp body must be 28 bytes, got " + std::to_string(bytes.size()));
    ByteReader r(bytes);
    if (r.u16() != 1 || r.u16() != kEtherTypeIpv4 || r.u8() != 6 || r.u8() != 4)
        malformed("arp hardware/protocol fields are not ethernet/ipv4");
    ArpPacket a;
    const auto op = r.u16();
    if (op != 1 && op != 2) malformed("unsupported arp opcode " + std::to_string(op));
    a.op = static_cast<ArpOp>(op);
    a.sender_mac = get_mac(r);
    a.sender_ip = get_ip(r);
    a.target_mac = get_mac(r);
    a.target_ip = get_ip(r);
    return a;
}

Bytes encode_udp(const UdpDatagram& udp, Ipv4Addr src, Ipv4Addr dst) {
    const std::size_t length = kUdpHeaderLen + udp.payload.size();
    if (length > 0xffff) throw EncodeError("udp datagram exceeds 65535 bytes");
    Bytes out;
    out.reserve(length);
    ByteWriter w(out);
    w.u16(udp.src_port);
    w.u16(udp.dst_port);
    w.u16(static_cast<std::uint16_t>(length));
    w.u16(0);
    w.raw(udp.payload);
    auto sum = internet_checksum(out, pseudo_header_sum(src, dst, kProtoUdp, length));
    if (sum == 0) sum = 0xffff;  // zero means "no checksum" on the wire
    patch_u16(out, 6, sum);
    return out;
}

Bytes encode_tcp(const TcpSegment& seg, Ipv4Addr src, Ipv4Addr dst) {
    Bytes out;
    out.reserve(kTcpHeaderLen + seg.payload.size());
    ByteWriter w(out);
    w.u16(seg.src_port);
    w.u16(seg.dst_port);
    w.u32(seg.seq);
    w.u32(seg.ack);
    w.u16(static_cast<std::uint16_t>((5u << 12) | seg.flags));
    w.u16(seg.window);
    w.u16(0);
    w.u16(0);
    w.raw(seg.payload);
    patch_u16(out, 16, internet_checksum(out, pseudo_header_sum(src, dst, kProtoTcp, out.size())));
    return out;
}

Bytes encode_ipv4(const Ipv4Packet& pkt) {
    Bytes body;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, UdpDatagram>)
                body = encode_udp(p, pkt.src, pkt.dst);
            else if constexpr (std::is_same_v<T, TcpSegment>)
                body = encode_tcp(p, pkt.src, pkt.dst);
            else
                body = p;
        },
        pkt.payload);
    const std::size_t total = kIpv4HeaderLen + body.size();
    if (total > 0xffff) throw EncodeError("ipv4 total length " + std::to_string(total) + " exceeds 65535");

    Bytes out;
    out.reserve(total);
    ByteWriter w(out);
    w.u8(0x45);
    w.u8(pkt.tos);
    w.u16(static_cast<std::uint16_t>(total));
    w.u16(pkt.identification);
    w.u16(pkt.flags_fragment);
    w.u8(pkt.ttl);
    w.u8(pkt.protocol);
    w.u16(0);
    put_ip(w, pkt.src);
    put_ip(w, pkt.dst);
    patch_u16(out, 10, internet_checksum(ByteView(out).first(kIpv4HeaderLen)));
    w.raw(body);
    return out;
}

Ipv4Packet decode_ipv4(ByteView bytes) {
    if (bytes.size() < kIpv4HeaderLen) malformed("ipv4 header truncated");
    ByteReader r(bytes);
    const auto vihl = r.u8();
    if ((vihl >> 4) != 4) malformed("ip version is not 4");
    if ((vihl & 0x0f) != 5) malformed("ipv4 options are not modeled");
    Ipv4Packet p;
    p.tos = r.u8();
    const auto total = r.u16();
    if (total != bytes.size())
        malformed("ipv4 total length " + std::to_string(total) + " disagrees with frame payload " +
                  std::to_string(bytes.size()));
    p.identification = r.u16();
    p.flags_fragment = r.u16();
    p.ttl = r.u8();
    p.protocol = r.u8();
    r.u16();
    p.src = get_ip(r);
    p.dst = get_ip(r);
    if (internet_checksum(bytes.first(kIpv4HeaderLen)) != 0) malformed("ipv4 header checksum mismatch");

    auto body = r.rest();
    const bool fragment = (p.flags_fragment & 0x3fff) != 0;  // MF or nonzero offset
    if (!fragment && p.protocol == kProtoUdp)
        p.payload = decode_udp(body, p.src, p.dst);
    else if (!fragment && p.protocol == kProtoTcp)
        p.payload = decode_tcp(body, p.src, p.dst);
    else
        p.payload = Bytes(body.begin(), body.end());
    return p;
}

Bytes encode_frame(const EthernetFrame& frame) {
    Bytes out;
    ByteWriter w(out);
    put_mac(w, frame.dst);
    put_mac(w, frame.src);
    w.u16(frame.ethertype);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ArpPacket>)
                w.raw(encode_arp(p));
            else if constexpr (std::is_same_v<T, Ipv4Packet>)
                w.raw(encode_ipv4(p));
            else
                w.raw(p);
        },
        frame.payload);
    return out;
}

EthernetFrame decode_frame(ByteView bytes) {
    if (bytes.size() < kEthernetHeaderLen)
        throw DecodeError(DecodeError::Kind::TruncatedFrame,
                          "frame of " + std::to_string(bytes.size()) + " bytes is shorter than an ethernet header");
    try {
        ByteReader r(bytes);
        EthernetFrame f;
        f.dst = get_mac(r);
        f.src = get_mac(r);
        f.ethertype = r.u16();
        auto body = r.rest();
        if (f.ethertype == kEtherTypeArp)
            f.payload = decode_arp(body);
        else if (f.ethertype == kEtherTypeIpv4)
            f.payload = decode_ipv4(body);
        else
            f.payload = Bytes(body.begin(), body.end());
        return f;
    } catch (const ShortRead&) {
        malformed("inner header truncated");
    }
}

EthernetFrame make_arp_frame(MacAddr eth_src, MacAddr eth_dst, const ArpPacket& arp) {
    return EthernetFrame{eth_dst, eth_src, kEtherTypeArp, arp};
}

EthernetFrame make_udp_frame(MacAddr eth_src, MacAddr eth_dst, Ipv4Addr src, Ipv4Addr dst, UdpDatagram udp,
                             std::uint8_t ttl) {
    Ipv4Packet ip;
    ip.src = src;
    ip.dst = dst;
    ip.protocol = kProtoUdp;
    ip.ttl = ttl;
    ip.payload = std::move(udp);
    return EthernetFrame{eth_dst, eth_src, kEtherTypeIpv4, std::move(ip)};
}

EthernetFrame make_tcp_frame(MacAddr eth_src, MacAddr eth_dst, Ipv4Addr src, Ipv4Addr dst, TcpSegment seg,
                             std::uint8_t ttl) {
    Ipv4Packet ip;
    ip.src = src;
    ip.dst = dst;
    ip.protocol = kProtoTcp;
    ip.ttl = ttl;
    ip.payload = std::move(seg);
    return EthernetFrame{eth_dst, eth_src, kEtherTypeIpv4, std::move(ip)};
}

std::shared_ptr<const WireFrame> WireFrame::make(EthernetFrame f) {
    auto bytes = encode_frame(f);
    return std::make_shared<const WireFrame>(WireFrame{std::move(f), std::move(bytes)});
}

std::shared_ptr<const WireFrame> WireFrame::from_bytes(Bytes b) {
    auto f = decode_frame(b);
    return std::make_shared<const WireFrame>(WireFrame{std::move(f), std::move(b)});
}

std::string describe(const EthernetFrame& frame) {
    std::ostringstream os;
    if (const auto* a = frame.arp()) {
        if (a->op == ArpOp::Request)
            os << "arp who-has " << a->target_ip.to_string() << " tell " << a->sender_ip.to_string();
        else
            os << "arp reply " << a->sender_ip.to_string() << " is-at " << a->sender_mac.to_string();
    } else if (const auto* ip = frame.ipv4()) {
        os << ip->src.to_string();
        if (const auto* u = ip->udp())
            os << ":" << u->src_port << " > " << ip->dst.to_string() << ":" << u->dst_port << " udp "
               << u->payload.size();
        else if (const auto* t = ip->tcp()) {
            os << ":" << t->src_port << " > " << ip->dst.to_string() << ":" << t->dst_port << " tcp [";
            if (t->has(tcp_flags::SYN)) os << 'S';
            if (t->has(tcp_flags::FIN)) os << 'F';
            if (t->has(tcp_flags::PSH)) os << 'P';
            if (t->has(tcp_flags::ACK)) os << '.';
            os << "] seq " << t->seq << " len " << t->payload.size();
        } else
            os << " > " << ip->dst.to_string() << " proto " << int{ip->protocol};
    } else {
        char buf[8];
        std::snprintf(buf, sizeof buf, "%04x", frame.ethertype);
        os << "ethertype 0x" << buf;
    }
    return os.str();
}

}  // namespace sbcsim::net
