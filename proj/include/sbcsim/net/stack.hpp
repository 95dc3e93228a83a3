#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "sbcsim/net/sim.hpp"

namespace sbcsim::net {

using namespace sbcsim::time_literals;

struct ArpEntry {
    MacAddr mac;
    SimTime learned_at;
};

/// IP → MAC bindings with expiry. Holds at most one binding per IP; an entry is
/// live while `now - learned_at < ttl`.
class ArpCache {
public:
    struct Change {
        SimTime time;
        Ipv4Addr ip;
        MacAddr mac;
    };

    explicit ArpCache(SimDuration ttl = 60_s) : ttl_(ttl) {}

    void learn(Ipv4Addr ip, MacAddr mac, SimTime now);
    std::optional<MacAddr> lookup(Ipv4Addr ip, SimTime now) const;
    std::map<Ipv4Addr, ArpEntry> live(SimTime now) const;

    const std::map<Ipv4Addr, ArpEntry>& entries() const { return entries_; }
    const std::vector<Change>& history() const { return history_; }
    SimDuration ttl() const { return ttl_; }

private:
    SimDuration ttl_;
    std::map<Ipv4Addr, ArpEntry> entries_;
    std::vector<Change> history_;
};

struct StackConfig {
    MacAddr mac;
    Ipv4Addr ip;
    std::uint8_t prefix = 24;
    std::optional<Ipv4Addr> gateway;
    SimDuration arp_ttl = 60_s;
    // Route packets addressed to our MAC but another IP (single-interface router).
    bool forwarding = false;
};

struct StackStats {
    std::uint64_t arp_requests_sent = 0;
    std::uint64_t arp_replies_sent = 0;
    std::uint64_t arp_failures = 0;
    std::uint64_t udp_rejected_oversize = 0;
    std::uint64_t forwarded = 0;
};

/// ARP + IPv4 + UDP + a lossless-link TCP subset (handshake, segmented data,
/// FIN close; no retransmission or windowing).
class IpStack {
public:
    using Transmit = std::function<void(StepContext&, FrameRef)>;
    using UdpHandler = std::function<void(StepContext&, const Ipv4Packet&, const UdpDatagram&)>;
    // Called with the request bytes so far; returning a value sends it as the
    // response and closes our side.
    using TcpServer = std::function<std::optional<Bytes>(StepContext&, Ipv4Addr peer, const Bytes& request,
                                                         bool peer_closed)>;
    using TcpDone = std::function<void(StepContext&, bool ok, const Bytes& response)>;
    using ArpListener = std::function<void(StepContext&, const ArpPacket&, const FrameRef&)>;

    IpStack(StackConfig cfg, TimerTable& timers, Transmit transmit);

    const StackConfig& config() const { return cfg_; }
    ArpCache& arp() { return arp_; }
    const ArpCache& arp() const { return arp_; }
    const StackStats& stats() const { return stats_; }

    bool on_link(Ipv4Addr dst) const;

    /// Inbound frame that passed the NIC filter. `for_us` is false for frames only
    /// a promiscuous NIC would have accepted.
    void receive(StepContext& ctx, int port, const FrameRef& frame, bool for_us);

    void send_ip(StepContext& ctx, Ipv4Packet pkt);
    /// False (and nothing sent) when the payload does not fit one MTU.
    bool send_udp(StepContext& ctx, Ipv4Addr dst, std::uint16_t src_port, std::uint16_t dst_port, Bytes payload);
    void send_arp_request(StepContext& ctx, Ipv4Addr target);

    std::uint16_t ephemeral_port();
    void bind_udp(std::uint16_t port, UdpHandler h) { udp_[port] = std::move(h); }
    void unbind_udp(std::uint16_t port) { udp_.erase(port); }
    void listen_tcp(std::uint16_t port, TcpServer server) { listeners_[port] = std::move(server); }
    void tcp_request(StepContext& ctx, Ipv4Addr dst, std::uint16_t dst_port, Bytes request, bool close_after_send,
                     TcpDone done);
    void add_arp_listener(ArpListener l) { arp_listeners_.push_back(std::move(l)); }

private:
    struct TcpConn {
        Ipv4Addr remote;
        std::uint16_t remote_port = 0;
        std::uint16_t local_port = 0;
        bool client = false;
        bool established = false;
        std::uint32_t snd_nxt = 0;
        std::uint32_t rcv_base = 0;  // first data sequence number of the peer
        std::uint32_t rcv_nxt = 0;
        Bytes request;
        bool close_after_send = false;
        Bytes received;
        std::map<std::uint32_t, Bytes> out_of_order;
        std::optional<std::uint32_t> peer_fin_offset;
        bool peer_closed = false;
        bool we_closed = false;
        bool finished = false;
        TcpServer server;
        TcpDone done;
    };
    using ConnKey = std::tuple<std::uint16_t, Ipv4Addr, std::uint16_t>;

    void handle_arp(StepContext& ctx, const ArpPacket& arp);
    void handle_ipv4(StepContext& ctx, int port, const FrameRef& frame, const Ipv4Packet& ip, bool for_us);
    void handle_tcp(StepContext& ctx, int port, const FrameRef& frame, const Ipv4Packet& ip, const TcpSegment& seg);
    void transmit_ip(StepContext& ctx, MacAddr next_hop, Ipv4Packet pkt);
    void resolve_retry(StepContext& ctx, Ipv4Addr next_hop);
    void send_segment(StepContext& ctx, TcpConn& c, std::uint8_t flags, Bytes payload);
    void send_stream(StepContext& ctx, TcpConn& c, const Bytes& data, bool fin);
    void after_input(StepContext& ctx, const ConnKey& key);

    StackConfig cfg_;
    TimerTable& timers_;
    Transmit transmit_;
    ArpCache arp_;
    StackStats stats_;
    struct Pending {
        std::deque<Ipv4Packet> queue;
        int attempts = 0;
    };
    std::map<Ipv4Addr, Pending> pending_;
    std::map<std::uint16_t, UdpHandler> udp_;
    std::map<std::uint16_t, TcpServer> listeners_;
    std::map<ConnKey, TcpConn> conns_;
    std::vector<ArpListener> arp_listeners_;
    std::uint16_t next_ephemeral_ = 49152;
};

}  // namespace sbcsim::net
