#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbcsim/net/host.hpp"
#include "sbcsim/net/trace.hpp"
#include "sbcsim/pcap/pcap.hpp"
#include "sbcsim/streams/streams.hpp"

namespace sbcsim::detect {

using net::Ipv4Addr;
using net::MacAddr;
using streams::FlowKey;

/// One frame as seen by a passive sensor.
struct Observation {
    SimTime time;
    net::FrameRef frame;
};

/// Frames as they first went on the wire (originated view of the trace).
std::vector<Observation> observations_from_trace(const net::EventTrace& trace);
/// Decodable pcap records; others are skipped.
std::vector<Observation> observations_from_pcap(const std::vector<pcap::PcapRecord>& records);

// ---- promiscuous-mode probing ----

enum class Verdict { Promiscuous, Normal, NoResponse };
std::string_view to_string(Verdict v);

struct ProbeVerdict {
    Ipv4Addr target_ip;
    Verdict verdict = Verdict::NoResponse;
    SimTime probed_at;
    net::FrameRef probe;
    net::FrameRef reply;  // set for Promiscuous
};

struct SweepConfig {
    std::vector<Ipv4Addr> targets;
    SimTime start;
    double rate = 10.0;  // probes per virtual second
    SimDuration timeout = SimTime::from_seconds(1);
    // Gap between the broadcast liveness check and the fake-address probe.
    SimDuration liveness_lead = SimTime::from_millis(50);
    MacAddr probe_mac{{0xff, 0xff, 0xff, 0xff, 0xff, 0xfe}};
};

inline constexpr MacAddr kMulticastProbeMac{{0x01, 0x00, 0x5e, 0x00, 0x00, 0x00}};

/// Host app: per target, a broadcast ARP request establishes liveness, then an ARP
/// request to the fake address tests whether the target's NIC passed it up.
class PromiscSweepApp : public net::HostApp {
public:
    explicit PromiscSweepApp(SweepConfig cfg) : cfg_(std::move(cfg)) {}
    std::string kind() const override { return "promisc-sweep"; }
    void start(net::Host& host, net::StepContext& ctx) override;

    const SweepConfig& config() const { return cfg_; }
    /// In target order; entries are final once their timeout has passed.
    const std::vector<ProbeVerdict>& verdicts() const { return verdicts_; }
    bool complete() const { return settled_ == cfg_.targets.size(); }
    std::optional<SimTime> completed_at() const { return completed_at_; }

private:
    struct Slot {
        bool alive = false;
        bool probe_sent = false;
        bool settled = false;
    };
    void on_arp(net::StepContext& ctx, const net::ArpPacket& arp, const net::FrameRef& frame);

    SweepConfig cfg_;
    std::vector<ProbeVerdict> verdicts_;
    std::vector<Slot> slots_;
    std::map<Ipv4Addr, std::size_t> index_;
    std::size_t settled_ = 0;
    std::optional<SimTime> completed_at_;
};

// ---- ARP watching ----

enum class ArpAlertKind { BindingChange, DuplicateClaim, GratuitousStorm };
std::string_view to_string(ArpAlertKind k);

struct ArpAlert {
    ArpAlertKind kind = ArpAlertKind::BindingChange;
    Ipv4Addr ip;                // BindingChange: the contested IP; DuplicateClaim: first claimed IP
    std::vector<MacAddr> macs;  // in order of appearance
    std::vector<Ipv4Addr> ips;  // DuplicateClaim: every IP the MAC claimed
    SimTime first_seen;
    SimTime last_seen;
    std::uint64_t count = 0;
};

struct ArpWatchConfig {
    // Replies before this instant only build the baseline.
    SimDuration learning = SimTime::from_seconds(60);
    SimDuration storm_window = SimTime::from_seconds(1);
    std::uint64_t storm_threshold = 10;
};

/// Scans ARP replies. One alert per (kind, subject); later evidence extends it.
std::vector<ArpAlert> arp_watch(const std::vector<Observation>& obs, const ArpWatchConfig& cfg = {});

// ---- flows, beacons, storms ----

enum class Transport { Tcp, Udp };

struct FlowRecord {
    FlowKey key;
    Transport transport = Transport::Tcp;
    SimTime start;
    std::uint64_t bytes = 0;    // transport payload bytes
    std::uint64_t packets = 0;
};

/// TCP flows begin at a SYN without ACK, or at the first packet of a 4-tuple whose
/// reverse was never seen. UDP flows begin at the first packet of a 4-tuple or
/// after `udp_idle` of silence on it.
std::vector<FlowRecord> derive_flows(const std::vector<Observation>& obs,
                                     SimDuration udp_idle = SimTime::from_seconds(30));

struct BeaconConfig {
    std::size_t min_events = 4;
    double jitter_tol = 0.05;
};

struct Beacon {
    Ipv4Addr src;
    Ipv4Addr dst;
    SimDuration period;  // median inter-start delta
    double confidence = 0;  // fraction of deltas within jitter_tol of the period
    std::size_t events = 0;
    double relative_mad = 0;
};

/// Groups flows by (src, dst); reports pairs whose median absolute deviation of
/// inter-start deltas, relative to the median, is within jitter_tol.
std::vector<Beacon> beacon_detect(const std::vector<FlowRecord>& flows, const BeaconConfig& cfg = {});

struct StormConfig {
    SimDuration window = SimTime::from_seconds(1);
    double pps_threshold = 400;
    std::size_t distinct_port_threshold = 50;
};

struct StormAlert {
    SimTime first_seen;
    SimTime last_seen;
    double peak_pps = 0;
    std::size_t peak_distinct_ports = 0;
    std::vector<std::pair<Ipv4Addr, std::uint64_t>> top_sources;  // by count, during the episode
    std::uint64_t packets = 0;
};

/// Sliding window (t - W, t] over unsolicited UDP (no earlier packet on the reverse
/// 4-tuple). Consecutive alerting instants merge into one episode.
std::vector<StormAlert> udp_storm_detect(const std::vector<Observation>& obs, const StormConfig& cfg = {});

}  // namespace sbcsim::detect
