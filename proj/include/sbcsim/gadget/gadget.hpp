#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sbcsim/exfil/exfil.hpp"
#include "sbcsim/gadget/capture.hpp"
#include "sbcsim/net/stack.hpp"

namespace sbcsim::gadget {

using net::Ipv4Addr;
using net::MacAddr;

inline constexpr int kVictimPort = 0;
inline constexpr int kNetworkPort = 1;

enum class Mode { Passive, Active };

struct ArpPoison {
    Ipv4Addr victim_ip;
    Ipv4Addr gateway_ip;
    SimDuration period = SimTime::from_seconds(1);
    SimTime start;
    std::optional<SimTime> stop;
    // Send corrective replies when poisoning ends or the carrier is lost.
    bool rearp_on_stop = true;
};

struct DnsSpoof {
    std::map<std::string, Ipv4Addr> names;
    // Forward the query as well and rely on first-response-wins.
    bool race_mode = false;
};

struct UdpFlood {
    std::optional<Ipv4Addr> target;  // nullopt: random host in the subnet, broadcast MAC
    std::uint32_t rate = 100;        // datagrams per virtual second
    std::uint16_t port_lo = 1;
    std::uint16_t port_hi = 65535;
    std::size_t payload_len = 64;
    SimTime start;
    std::optional<SimTime> stop;
};

using AttackConfig = std::variant<ArpPoison, DnsSpoof, UdpFlood>;

inline constexpr std::uint16_t kFloodSourcePort = 40000;
inline constexpr std::uint8_t kFloodFiller = 0x41;

/// Time of the k-th flood datagram: start + floor(k * 1e6 / rate) microseconds.
SimTime flood_tick_time(const UdpFlood& f, std::uint64_t k);

/// The two forged replies of one poison tick: [0] toward the victim claiming the
/// gateway IP, [1] toward the gateway claiming the victim IP.
std::vector<net::EthernetFrame> arp_poison_frames(const ArpPoison& cfg, MacAddr own_mac, MacAddr victim_mac,
                                                  MacAddr gateway_mac);

/// Forged answer for a query whose name is mapped, addressed back to the querier
/// with the queried server's MAC and IP as source.
std::optional<net::EthernetFrame> dns_spoof_response(const DnsSpoof& cfg, const net::EthernetFrame& query);

struct ExfilSetup {
    Ipv4Addr sink_ip;
    std::unique_ptr<exfil::ExfilScheduler> scheduler;
};

struct GadgetConfig {
    std::string name;
    Mode mode = Mode::Passive;
    MacAddr own_mac;
    std::optional<Ipv4Addr> own_ip;
    std::uint8_t prefix = 24;
    SimDuration capture_interval = SimTime::from_seconds(60);
    std::vector<AttackConfig> attacks;
};

struct SpoofHit {
    SimTime time;
    std::string qname;
    std::uint16_t id = 0;
    Ipv4Addr answer;
};

struct ExfilTransfer {
    SimTime time;
    std::vector<std::string> files;
    std::size_t bytes = 0;
    bool completed = false;
};

struct GadgetStats {
    std::uint64_t frames_captured = 0;
    std::uint64_t frames_forwarded = 0;
    std::uint64_t frames_relayed = 0;
    std::uint64_t frames_consumed = 0;
    std::uint64_t poison_replies = 0;
    std::optional<SimTime> first_poison;
    std::uint64_t flood_sent = 0;
    std::vector<std::uint16_t> flood_ports;
    std::vector<SpoofHit> spoof_hits;
    std::vector<ExfilTransfer> transfers;
};

/// Inline two-port bridge. Port 0 faces the victim, port 1 the network.
class Gadget : public net::Node {
public:
    explicit Gadget(GadgetConfig cfg, std::optional<ExfilSetup> exfil = std::nullopt);

    int port_count() const override { return 2; }
    void on_start(net::StepContext& ctx) override;
    void on_frame(net::StepContext& ctx, int port, const net::FrameRef& frame) override;
    void on_timer(net::StepContext& ctx, std::uint64_t token) override { timers_.fire(ctx, token); }
    void on_link_down(net::StepContext& ctx, int port) override;
    void on_finish(SimTime end) override;

    const GadgetConfig& config() const { return cfg_; }
    const CaptureEngine& capture() const { return capture_; }
    const GadgetStats& stats() const { return stats_; }
    const exfil::ExfilScheduler* scheduler() const { return exfil_ ? exfil_->scheduler.get() : nullptr; }
    /// IP → MAC bindings learned from ARP traffic of other stations.
    const std::map<Ipv4Addr, MacAddr>& true_bindings() const { return bindings_; }
    bool halted() const { return halted_; }

private:
    static int other(int port) { return port == kVictimPort ? kNetworkPort : kVictimPort; }
    void learn(int port, const net::EthernetFrame& f);
    bool poisoning(SimTime now) const;
    bool intercept_arp_reply(net::StepContext& ctx, int port, const net::EthernetFrame& f);
    bool try_spoof(net::StepContext& ctx, int port, const net::FrameRef& frame);
    bool try_relay(net::StepContext& ctx, int port, const net::EthernetFrame& f);
    void stack_transmit(net::StepContext& ctx, net::FrameRef frame);

    void poison_tick(net::StepContext& ctx, std::size_t attack);
    void rearp(net::StepContext& ctx, const ArpPoison& cfg);
    void flood_tick(net::StepContext& ctx, std::size_t attack, std::uint64_t k);
    void exfil_tick(net::StepContext& ctx, bool periodic);

    GadgetConfig cfg_;
    net::TimerTable timers_;
    CaptureEngine capture_;
    std::unique_ptr<net::IpStack> stack_;
    std::optional<ExfilSetup> exfil_;
    std::map<Ipv4Addr, MacAddr> bindings_;
    std::map<MacAddr, int> side_;
    std::vector<bool> poison_done_;
    bool halted_ = false;
    GadgetStats stats_;
};

}  // namespace sbcsim::gadget
