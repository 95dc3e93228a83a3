#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sbcsim/net/dns.hpp"
#include "sbcsim/net/stack.hpp"

namespace sbcsim::net {

enum class NicMode { Normal, Promiscuous };

class Host;

/// Behavior attached to a host; started once at t=0.
class HostApp {
public:
    virtual ~HostApp() = default;
    virtual std::string kind() const = 0;
    virtual void start(Host& host, StepContext& ctx) = 0;
};

struct DnsLookup {
    std::string name;
};
struct HttpGet {
    std::string host;  // name (resolved via DNS) or dotted-quad
    std::string path = "/";
    std::uint16_t port = 80;
};
struct UdpSend {
    Ipv4Addr dst;
    std::uint16_t port = 7;
    Bytes payload;
};
using TrafficAction = std::variant<DnsLookup, HttpGet, UdpSend>;

struct DnsLookupRecord {
    SimTime started;
    SimTime finished;
    std::string name;
    std::optional<Ipv4Addr> answer;
};

struct HttpFetchRecord {
    SimTime started;
    SimTime finished;
    std::string host;
    std::string path;
    std::optional<Ipv4Addr> server;
    bool ok = false;
    int status = 0;
    Bytes body;
};

struct UdpRecord {
    SimTime time;
    Ipv4Addr from;
    std::uint16_t from_port = 0;
    std::uint16_t to_port = 0;
    Bytes payload;
};

struct SinkMessage {
    SimTime time;
    Ipv4Addr peer;
    Bytes data;
};

struct HostConfig {
    std::string name;
    StackConfig stack;
    NicMode nic_mode = NicMode::Normal;
    std::vector<MacAddr> multicast;
    std::optional<Ipv4Addr> dns_server;
    // Bindings present at t=0 (learned_at = 0, subject to the normal ttl).
    std::vector<std::pair<Ipv4Addr, MacAddr>> arp_preload;
};

class Host : public Node {
public:
    explicit Host(HostConfig cfg);

    int port_count() const override { return 1; }
    void on_start(StepContext& ctx) override;
    void on_frame(StepContext& ctx, int port, const FrameRef& frame) override;
    void on_timer(StepContext& ctx, std::uint64_t token) override { timers_.fire(ctx, token); }

    /// NIC filter: own MAC, broadcast, or a subscribed group; everything when promiscuous.
    bool nic_accepts(const MacAddr& dst) const;
    bool addressed_to_me(const MacAddr& dst) const;

    void add_app(std::unique_ptr<HostApp> app) { apps_.push_back(std::move(app)); }
    void schedule(SimTime at, TrafficAction action) { script_.emplace_back(at, std::move(action)); }

    void run_action(StepContext& ctx, const TrafficAction& action);
    void resolve(StepContext& ctx, const std::string& name,
                 std::function<void(StepContext&, std::optional<Ipv4Addr>)> done);
    void transmit(StepContext& ctx, FrameRef frame) { ctx.emit(0, std::move(frame)); }

    const HostConfig& config() const { return cfg_; }
    NicMode nic_mode() const { return cfg_.nic_mode; }
    IpStack& stack() { return stack_; }
    const IpStack& stack() const { return stack_; }
    TimerTable& timers() { return timers_; }
    const std::vector<std::unique_ptr<HostApp>>& apps() const { return apps_; }

    std::vector<DnsLookupRecord> lookups;
    std::vector<HttpFetchRecord> fetches;
    std::vector<UdpRecord> udp_received;
    std::vector<SinkMessage> sink_messages;

private:
    HostConfig cfg_;
    TimerTable timers_;
    IpStack stack_;
    std::vector<std::unique_ptr<HostApp>> apps_;
    std::vector<std::pair<SimTime, TrafficAction>> script_;
};

// Server-side apps.

class DnsServerApp : public HostApp {
public:
    explicit DnsServerApp(std::map<std::string, Ipv4Addr> zone) : zone_(std::move(zone)) {}
    std::string kind() const override { return "dns-server"; }
    void start(Host& host, StepContext& ctx) override;
    std::uint64_t queries_answered() const { return answered_; }

private:
    std::map<std::string, Ipv4Addr> zone_;
    std::uint64_t answered_ = 0;
};

/// Answers "GET <path> HTTP/1.0" requests from a fixed page table.
class HttpServerApp : public HostApp {
public:
    HttpServerApp(std::uint16_t port, std::map<std::string, Bytes> pages) : port_(port), pages_(std::move(pages)) {}
    std::string kind() const override { return "http-server"; }
    void start(Host& host, StepContext& ctx) override;
    std::uint64_t requests_served() const { return served_; }

private:
    std::uint16_t port_;
    std::map<std::string, Bytes> pages_;
    std::uint64_t served_ = 0;
};

class EchoServerApp : public HostApp {
public:
    explicit EchoServerApp(std::uint16_t port = 7) : port_(port) {}
    std::string kind() const override { return "echo"; }
    void start(Host& host, StepContext& ctx) override;

private:
    std::uint16_t port_;
};

/// Accepts a TCP upload and records it once the peer closes.
class SinkServerApp : public HostApp {
public:
    explicit SinkServerApp(std::uint16_t port) : port_(port) {}
    std::string kind() const override { return "exfil-sink"; }
    void start(Host& host, StepContext& ctx) override;

private:
    std::uint16_t port_;
};

Bytes http_request(const std::string& host, const std::string& path);
Bytes http_response(int status, const Bytes& body);
/// Splits a response into (status, body); nullopt when not a complete response.
std::optional<std::pair<int, Bytes>> parse_http_response(const Bytes& raw);

}  // namespace sbcsim::net
