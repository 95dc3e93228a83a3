#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sbcsim/detect/detect.hpp"
#include "sbcsim/exfil/exfil.hpp"
#include "sbcsim/gadget/gadget.hpp"
#include "sbcsim/net/host.hpp"
#include "sbcsim/net/switch.hpp"

namespace sbcsim::scenario {

using net::Ipv4Addr;
using net::MacAddr;

struct Diagnostic {
    int line = 0;  // 1-based; 0 when unknown
    int column = 0;
    std::string path;  // e.g. "gadgets[0].splice.host"
    std::string message;
    std::string to_string() const;
};

class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(std::vector<Diagnostic> diags);
    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

struct DnsServerSpec {
    std::map<std::string, Ipv4Addr> zone;
};
struct HttpServerSpec {
    std::uint16_t port = 80;
    std::map<std::string, Bytes> pages;
};
struct EchoSpec {
    std::uint16_t port = 7;
};
struct SinkSpec {
    std::uint16_t port = 25;
};
struct SweepSpec {
    detect::SweepConfig config;
};
using AppSpec = std::variant<DnsServerSpec, HttpServerSpec, EchoSpec, SinkSpec, SweepSpec>;

struct HostSpec {
    std::string name;
    MacAddr mac;
    Ipv4Addr ip;
    std::uint8_t prefix = 24;
    std::optional<Ipv4Addr> gateway;
    std::optional<Ipv4Addr> dns_server;
    net::NicMode nic_mode = net::NicMode::Normal;
    bool forwarding = false;
    SimDuration arp_ttl = SimTime::from_seconds(60);
    std::vector<MacAddr> multicast;
    std::vector<AppSpec> apps;
};

struct SwitchSpec {
    std::string name;
    int ports = 0;
    std::map<int, net::PortPolicy> port_security;
};

struct Endpoint {
    std::string node;
    int port = 0;
    bool operator==(const Endpoint&) const = default;
};

struct LinkDef {
    Endpoint a;
    Endpoint b;
    SimDuration latency = SimTime::from_micros(100);
};

struct Splice {
    std::string host;
    std::string switch_name;
    int port = 0;
};

struct GadgetSpec {
    gadget::GadgetConfig config;
    Splice splice;
};

enum class ChannelKind { Email, Cloud };

struct ExfilSpec {
    std::string gadget;
    ChannelKind channel = ChannelKind::Email;
    std::string sink;  // host running an exfil-sink app
    exfil::SchedulerConfig scheduler;
    std::string recipient = "attacker@example.invalid";
    std::size_t size_cap = exfil::EmailChannel::kDefaultSizeCap;
    std::string token = "token";
    std::optional<std::string> presented_token;  // defaults to `token`
};

struct DetectorSpec {
    std::optional<detect::ArpWatchConfig> arp_watch;
    std::optional<detect::BeaconConfig> beacon;
    std::optional<detect::StormConfig> udp_storm;
    bool carve = false;
};

struct RepeatSpec {
    SimDuration every;
    std::size_t count = 1;
};
struct PoissonSpec {
    SimDuration mean;
    SimTime until;
};

struct TrafficSpec {
    std::string host;
    SimTime at;
    net::TrafficAction action;
    std::optional<RepeatSpec> repeat;
    std::optional<PoissonSpec> poisson;
};

struct FetchExpectation {
    std::string host;
    std::string path;
    Bytes body;
};
struct ResolveExpectation {
    std::string host;
    std::string name;
    Ipv4Addr ip;
};

/// Assertions evaluated by `run --check`.
struct Expectations {
    std::optional<std::size_t> deliveries;
    std::optional<SimDuration> beacon_period;  // 1% tolerance
    std::optional<std::size_t> storm_alerts;
    std::optional<double> storm_peak_pps;
    std::optional<std::size_t> arp_alerts;
    std::optional<bool> binding_change;
    std::optional<bool> duplicate_claim;
    std::optional<std::size_t> spoof_hits_min;
    std::optional<std::size_t> port_violations;
    std::optional<bool> port_shutdown;
    std::optional<std::vector<Ipv4Addr>> promiscuous;
    std::optional<std::size_t> normal_verdicts;
    std::optional<std::size_t> carved_images;
    std::optional<FetchExpectation> fetch;
    std::optional<ResolveExpectation> resolves;

    bool empty() const;
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    SimTime duration;
    std::vector<HostSpec> hosts;
    std::vector<SwitchSpec> switches;
    std::vector<LinkDef> links;
    std::vector<GadgetSpec> gadgets;
    std::optional<ExfilSpec> exfil;
    DetectorSpec detectors;
    std::vector<TrafficSpec> traffic;
    Expectations expect;
};

/// Parses and validates a YAML scenario document. Relative fixture paths resolve
/// against `base_dir`. Throws ScenarioError carrying every diagnostic found.
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);

/// Reference checks that need the whole document (names, addresses, splices).
std::vector<Diagnostic> validate(const Scenario& s);

/// Simulation built from a scenario, with typed handles to its nodes.
struct World {
    std::unique_ptr<net::Simulator> sim;
    std::map<std::string, net::Host*> hosts;
    std::map<std::string, net::Switch*> switches;
    std::map<std::string, gadget::Gadget*> gadgets;
    std::map<std::string, detect::PromiscSweepApp*> sweeps;
};

World build_world(const Scenario& s);

struct RunResult {
    World world;
    net::EventTrace trace;
};

/// Builds and runs the world through `s.duration` (inclusive).
RunResult run_simulation(const Scenario& s);

/// Send times of one traffic entry after repeat/poisson expansion.
std::vector<SimTime> expand_times(const TrafficSpec& t, std::uint64_t seed, std::size_t index);

}  // namespace sbcsim::scenario
