#include "sbcsim/net/stack.hpp"

#include <algorithm>

namespace sbcsim::net {

namespace {
constexpr int kArpAttempts = 3;
constexpr SimDuration kArpRetry = 1_s;
constexpr SimDuration kTcpConnectTimeout = 3_s;
}  // namespace

void ArpCache::learn(Ipv4Addr ip, MacAddr mac, SimTime now) {
    entries_[ip] = ArpEntry{mac, now};
    history_.push_back(Change{now, ip, mac});
}

std::optional<MacAddr> ArpCache::lookup(Ipv4Addr ip, SimTime now) const {
    auto it = entries_.find(ip);
    if (it == entries_.end() || now - it->second.learned_at >= ttl_) return std::nullopt;
    return it->second.mac;
}

std::map<Ipv4Addr, ArpEntry> ArpCache::live(SimTime now) const {
    std::map<Ipv4Addr, ArpEntry> out;
    for (const auto& [ip, e] : entries_)
        if (now - e.learned_at < ttl_) out.emplace(ip, e);
    return out;
}

IpStack::IpStack(StackConfig cfg, TimerTable& timers, Transmit transmit)
    : cfg_(cfg), timers_(timers), transmit_(std::move(transmit)), arp_(cfg.arp_ttl) {}

bool IpStack::on_link(Ipv4Addr dst) const {
    if (cfg_.forwarding) return true;
    return Subnet{cfg_.ip, cfg_.prefix}.contains(dst);
}

std::uint16_t IpStack::ephemeral_port() {
    const auto p = next_ephemeral_;
    next_ephemeral_ = next_ephemeral_ == 65535 ? 49152 : static_cast<std::uint16_t>(next_ephemeral_ + 1);
    return p;
}

void IpStack::receive(StepContext& ctx, int port, const FrameRef& frame, bool for_us) {
    const auto& f = frame->frame;
    if (const auto* arp = f.arp()) {
        for (auto& l : arp_listeners_) l(ctx, *arp, frame);
        handle_arp(ctx, *arp);
        return;
    }
    if (const auto* ip = f.ipv4()) {
        handle_ipv4(ctx, port, frame, *ip, for_us);
        return;
    }
    ctx.drop(port, frame, "unhandled-ethertype");
}

void IpStack::handle_arp(StepContext& ctx, const ArpPacket& arp) {
    if (arp.op == ArpOp::Request) {
        if (arp.target_ip != cfg_.ip) return;
        ArpPacket reply{ArpOp::Reply, cfg_.mac, cfg_.ip, arp.sender_mac, arp.sender_ip};
        ++stats_.arp_replies_sent;
        transmit_(ctx, WireFrame::make(make_arp_frame(cfg_.mac, arp.sender_mac, reply)));
        return;
    }
    // Replies are trusted without checking for an outstanding request.
    const bool gratuitous = arp.sender_ip == arp.target_ip;
    if (arp.target_ip != cfg_.ip && !gratuitous) return;
    arp_.learn(arp.sender_ip, arp.sender_mac, ctx.now());
    if (auto it = pending_.find(arp.sender_ip); it != pending_.end()) {
        auto queue = std::move(it->second.queue);
        pending_.erase(it);
        for (auto& pkt : queue) transmit_ip(ctx, arp.sender_mac, std::move(pkt));
    }
}

void IpStack::handle_ipv4(StepContext& ctx, int port, const FrameRef& frame, const Ipv4Packet& ip, bool for_us) {
    if (!for_us) {
        ctx.drop(port, frame, "not-for-us");
        return;
    }
    const bool local = ip.dst == cfg_.ip || ip.dst == Ipv4Addr{{255, 255, 255, 255}};
    if (!local) {
        if (cfg_.forwarding && frame->frame.dst == cfg_.mac) {
            if (ip.ttl <= 1) {
                ctx.drop(port, frame, "ttl-exceeded");
                return;
            }
            Ipv4Packet fwd = ip;
            fwd.ttl = static_cast<std::uint8_t>(ip.ttl - 1);
            ++stats_.forwarded;
            send_ip(ctx, std::move(fwd));
            return;
        }
        ctx.drop(port, frame, "not-for-us");
        return;
    }
    if (const auto* udp = ip.udp()) {
        auto it = udp_.find(udp->dst_port);
        if (it == udp_.end()) {
            ctx.drop(port, frame, "port-unreachable");
            return;
        }
        auto handler = it->second;  // handler may unbind itself
        handler(ctx, ip, *udp);
        return;
    }
    if (const auto* tcp = ip.tcp()) {
        handle_tcp(ctx, port, frame, ip, *tcp);
        return;
    }
    ctx.drop(port, frame, "protocol-unreachable");
}

void IpStack::send_ip(StepContext& ctx, Ipv4Packet pkt) {
    Ipv4Addr next_hop = pkt.dst;
    if (!on_link(pkt.dst)) {
        if (!cfg_.gateway) return;  // no route
        next_hop = *cfg_.gateway;
    }
    if (pkt.dst == Ipv4Addr{{255, 255, 255, 255}}) {
        transmit_ip(ctx, MacAddr::broadcast(), std::move(pkt));
        return;
    }
    if (auto mac = arp_.lookup(next_hop, ctx.now())) {
        transmit_ip(ctx, *mac, std::move(pkt));
        return;
    }
    auto [it, fresh] = pending_.try_emplace(next_hop);
    it->second.queue.push_back(std::move(pkt));
    if (fresh) resolve_retry(ctx, next_hop);
}

void IpStack::resolve_retry(StepContext& ctx, Ipv4Addr next_hop) {
    auto it = pending_.find(next_hop);
    if (it == pending_.end()) return;
    if (it->second.attempts >= kArpAttempts) {
        ++stats_.arp_failures;
        pending_.erase(it);
        return;
    }
    ++it->second.attempts;
    send_arp_request(ctx, next_hop);
    timers_.schedule(ctx, ctx.now() + kArpRetry, [this, next_hop](StepContext& c) { resolve_retry(c, next_hop); });
}

void IpStack::send_arp_request(StepContext& ctx, Ipv4Addr target) {
    ArpPacket req{ArpOp::Request, cfg_.mac, cfg_.ip, MacAddr::zero(), target};
    ++stats_.arp_requests_sent;
    transmit_(ctx, WireFrame::make(make_arp_frame(cfg_.mac, MacAddr::broadcast(), req)));
}

void IpStack::transmit_ip(StepContext& ctx, MacAddr next_hop, Ipv4Packet pkt) {
    transmit_(ctx, WireFrame::make(EthernetFrame{next_hop, cfg_.mac, kEtherTypeIpv4, std::move(pkt)}));
}

bool IpStack::send_udp(StepContext& ctx, Ipv4Addr dst, std::uint16_t src_port, std::uint16_t dst_port,
                       Bytes payload) {
    if (payload.size() > kMaxUdpPayload) {
        ++stats_.udp_rejected_oversize;
        return false;
    }
    Ipv4Packet ip;
    ip.src = cfg_.ip;
    ip.dst = dst;
    ip.protocol = kProtoUdp;
    ip.payload = UdpDatagram{src_port, dst_port, std::move(payload)};
    send_ip(ctx, std::move(ip));
    return true;
}

void IpStack::send_segment(StepContext& ctx, TcpConn& c, std::uint8_t flags, Bytes payload) {
    TcpSegment seg;
    seg.src_port = c.local_port;
    seg.dst_port = c.remote_port;
    seg.seq = c.snd_nxt;
    seg.ack = (flags & tcp_flags::ACK) ? c.rcv_nxt : 0;
    seg.flags = flags;
    const auto len = static_cast<std::uint32_t>(payload.size());
    seg.payload = std::move(payload);
    c.snd_nxt += len;
    if (flags & (tcp_flags::SYN | tcp_flags::FIN)) c.snd_nxt += 1;

    Ipv4Packet ip;
    ip.src = cfg_.ip;
    ip.dst = c.remote;
    ip.protocol = kProtoTcp;
    ip.payload = std::move(seg);
    send_ip(ctx, std::move(ip));
}

void IpStack::send_stream(StepContext& ctx, TcpConn& c, const Bytes& data, bool fin) {
    for (std::size_t off = 0; off < data.size(); off += kTcpMss) {
        const auto n = std::min(kTcpMss, data.size() - off);
        const bool last = off + n == data.size();
        Bytes chunk(data.begin() + static_cast<std::ptrdiff_t>(off),
                    data.begin() + static_cast<std::ptrdiff_t>(off + n));
        send_segment(ctx, c, static_cast<std::uint8_t>(tcp_flags::ACK | (last ? tcp_flags::PSH : 0)),
                     std::move(chunk));
    }
    if (fin) {
        send_segment(ctx, c, tcp_flags::FIN | tcp_flags::ACK, {});
        c.we_closed = true;
    }
}

void IpStack::tcp_request(StepContext& ctx, Ipv4Addr dst, std::uint16_t dst_port, Bytes request,
                          bool close_after_send, TcpDone done) {
    const auto lport = ephemeral_port();
    ConnKey key{lport, dst, dst_port};
    TcpConn c;
    c.remote = dst;
    c.remote_port = dst_port;
    c.local_port = lport;
    c.client = true;
    c.snd_nxt = static_cast<std::uint32_t>(ctx.rng().next());
    c.request = std::move(request);
    c.close_after_send = close_after_send;
    c.done = std::move(done);
    auto& conn = conns_[key] = std::move(c);
    send_segment(ctx, conn, tcp_flags::SYN, {});
    timers_.schedule(ctx, ctx.now() + kTcpConnectTimeout, [this, key](StepContext& c2) {
        auto it = conns_.find(key);
        if (it == conns_.end() || it->second.established) return;
        auto done_cb = std::move(it->second.done);
        conns_.erase(it);
        if (done_cb) done_cb(c2, false, {});
    });
}

void IpStack::handle_tcp(StepContext& ctx, int port, const FrameRef& frame, const Ipv4Packet& ip,
                         const TcpSegment& seg) {
    ConnKey key{seg.dst_port, ip.src, seg.src_port};
    auto it = conns_.find(key);

    if (seg.has(tcp_flags::SYN) && !seg.has(tcp_flags::ACK)) {
        auto lit = listeners_.find(seg.dst_port);
        if (lit == listeners_.end() || it != conns_.end()) {
            ctx.drop(port, frame, "port-unreachable");
            return;
        }
        TcpConn c;
        c.remote = ip.src;
        c.remote_port = seg.src_port;
        c.local_port = seg.dst_port;
        c.rcv_base = seg.seq + 1;
        c.rcv_nxt = c.rcv_base;
        c.snd_nxt = static_cast<std::uint32_t>(ctx.rng().next());
        c.server = lit->second;
        auto& conn = conns_[key] = std::move(c);
        send_segment(ctx, conn, tcp_flags::SYN | tcp_flags::ACK, {});
        return;
    }
    if (it == conns_.end()) {
        ctx.drop(port, frame, "no-connection");
        return;
    }
    auto& c = it->second;

    if (seg.has(tcp_flags::SYN | tcp_flags::ACK)) {
        if (!c.client || c.established) return;
        c.established = true;
        c.rcv_base = seg.seq + 1;
        c.rcv_nxt = c.rcv_base;
        if (c.request.empty() && !c.close_after_send)
            send_segment(ctx, c, tcp_flags::ACK, {});
        else
            send_stream(ctx, c, c.request, c.close_after_send);
        after_input(ctx, key);
        return;
    }
    c.established = true;

    const std::uint32_t off = seg.seq - c.rcv_base;
    if (!seg.payload.empty()) c.out_of_order.emplace(off, seg.payload);
    if (seg.has(tcp_flags::FIN)) c.peer_fin_offset = off + static_cast<std::uint32_t>(seg.payload.size());

    // Drain in-order data.
    for (auto oit = c.out_of_order.begin(); oit != c.out_of_order.end();) {
        const auto have = static_cast<std::uint32_t>(c.received.size());
        const auto start = oit->first;
        const auto end = start + static_cast<std::uint32_t>(oit->second.size());
        if (start > have) break;
        if (end > have)
            c.received.insert(c.received.end(), oit->second.begin() + (have - start), oit->second.end());
        oit = c.out_of_order.erase(oit);
    }
    c.rcv_nxt = c.rcv_base + static_cast<std::uint32_t>(c.received.size());
    if (c.peer_fin_offset && *c.peer_fin_offset == c.received.size() && !c.peer_closed) {
        c.peer_closed = true;
        c.rcv_nxt += 1;
    }
    after_input(ctx, key);
}

void IpStack::after_input(StepContext& ctx, const ConnKey& key) {
    auto it = conns_.find(key);
    if (it == conns_.end()) return;
    auto& c = it->second;

    if (!c.client && !c.we_closed && c.server) {
        if (auto response = c.server(ctx, c.remote, c.received, c.peer_closed)) send_stream(ctx, c, *response, true);
    }
    if (c.client && c.peer_closed && !c.finished) {
        c.finished = true;
        if (c.done) c.done(ctx, true, c.received);
    }
    // Our FIN (if still owed) doubles as the final ACK; the peer needs nothing further.
    if (c.peer_closed) {
        if (!c.we_closed) send_segment(ctx, c, tcp_flags::FIN | tcp_flags::ACK, {});
        conns_.erase(it);
    }
}

}  // namespace sbcsim::net
