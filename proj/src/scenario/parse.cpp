#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "sbcsim/scenario/scenario.hpp"

namespace sbcsim::scenario {

std::string Diagnostic::to_string() const {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ":" + std::to_string(column) + ": ";
    if (!path.empty()) out += path + ": ";
    return out + message;
}

namespace {
std::string join(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) out += (out.empty() ? "" : "\n") + d.to_string();
    return out;
}
}  // namespace

ScenarioError::ScenarioError(std::vector<Diagnostic> diags) : std::runtime_error(join(diags)), diags_(std::move(diags)) {}

bool Expectations::empty() const {
    return !deliveries && !beacon_period && !storm_alerts && !storm_peak_pps && !arp_alerts && !binding_change &&
           !duplicate_claim && !spoof_hits_min && !port_violations && !port_shutdown && !promiscuous &&
           !normal_verdicts && !carved_images && !fetch && !resolves;
}

namespace {

using Keys = std::set<std::string>;

// Thrown to abandon the current field after a diagnostic has been recorded.
struct FieldAbort {};

class Parser {
public:
    Parser(std::string base_dir) : base_dir_(std::move(base_dir)) {}

    std::vector<Diagnostic> diags;

    void error(const YAML::Node& n, const std::string& path, const std::string& msg) {
        Diagnostic d;
        if (n.IsDefined() && n.Mark().line >= 0) {
            d.line = n.Mark().line + 1;
            d.column = n.Mark().column + 1;
        }
        d.path = path;
        d.message = msg;
        diags.push_back(std::move(d));
    }
    [[noreturn]] void abort(const YAML::Node& n, const std::string& path, const std::string& msg) {
        error(n, path, msg);
        throw FieldAbort{};
    }

    // Runs `f`, swallowing FieldAbort so parsing continues with the next field.
    template <typename F>
    void guard(F&& f) {
        try {
            f();
        } catch (const FieldAbort&) {
        }
    }

    void expect_map(const YAML::Node& n, const std::string& path) {
        if (!n.IsMap()) abort(n, path, "expected a mapping");
    }
    void expect_seq(const YAML::Node& n, const std::string& path) {
        if (!n.IsSequence()) abort(n, path, "expected a list");
    }

    void check_keys(const YAML::Node& n, const std::string& path, const Keys& allowed) {
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.count(key)) error(kv.first, sub(path, key), "unknown key '" + key + "'");
        }
    }

    static std::string sub(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }
    static std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

    YAML::Node required(const YAML::Node& map, const std::string& path, const std::string& key) {
        auto n = map[key];
        if (!n.IsDefined() || n.IsNull()) abort(map, sub(path, key), "missing required key '" + key + "'");
        return n;
    }

    std::string scalar(const YAML::Node& n, const std::string& path) {
        if (!n.IsScalar()) abort(n, path, "expected a scalar");
        return n.Scalar();
    }

    std::uint64_t integer(const YAML::Node& n, const std::string& path, std::uint64_t lo, std::uint64_t hi) {
        const auto s = scalar(n, path);
        std::uint64_t v = 0;
        try {
            std::size_t used = 0;
            if (s.empty() || s[0] == '-') throw std::invalid_argument("negative");
            v = std::stoull(s, &used, 0);
            if (used != s.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            abort(n, path, "expected a non-negative integer, got '" + s + "'");
        }
        if (v < lo || v > hi)
            abort(n, path, "value " + std::to_string(v) + " out of range [" + std::to_string(lo) + ", " +
                               std::to_string(hi) + "]");
        return v;
    }

    double real(const YAML::Node& n, const std::string& path, double lo, double hi) {
        const auto s = scalar(n, path);
        double v = 0;
        try {
            std::size_t used = 0;
            v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            abort(n, path, "expected a number, got '" + s + "'");
        }
        if (!(v >= lo && v <= hi)) abort(n, path, "value " + s + " out of range");
        return v;
    }

    bool boolean(const YAML::Node& n, const std::string& path) {
        const auto s = scalar(n, path);
        if (s == "true") return true;
        if (s == "false") return false;
        abort(n, path, "expected true or false, got '" + s + "'");
    }

    SimTime duration(const YAML::Node& n, const std::string& path) {
        const auto s = scalar(n, path);
        try {
            return parse_duration(s);
        } catch (const std::exception& e) {
            abort(n, path, e.what());
        }
    }

    MacAddr mac(const YAML::Node& n, const std::string& path) {
        const auto s = scalar(n, path);
        auto m = MacAddr::parse(s);
        if (!m) abort(n, path, "invalid MAC address '" + s + "'");
        return *m;
    }

    Ipv4Addr ip(const YAML::Node& n, const std::string& path) {
        const auto s = scalar(n, path);
        auto a = Ipv4Addr::parse(s);
        if (!a) abort(n, path, "invalid IPv4 address '" + s + "'");
        return *a;
    }

    Bytes file(const YAML::Node& n, const std::string& path) {
        const auto rel = scalar(n, path);
        const auto full = std::filesystem::path(base_dir_) / rel;
        std::ifstream is(full, std::ios::binary);
        if (!is) abort(n, path, "cannot read fixture '" + full.string() + "'");
        return Bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    }

    Endpoint endpoint(const YAML::Node& n, const std::string& path) {
        const auto s = scalar(n, path);
        Endpoint e;
        const auto colon = s.rfind(':');
        if (colon == std::string::npos) {
            e.node = s;
            return e;
        }
        e.node = s.substr(0, colon);
        try {
            std::size_t used = 0;
            e.port = std::stoi(s.substr(colon + 1), &used);
            if (used != s.size() - colon - 1 || e.port < 0) throw std::invalid_argument("port");
        } catch (const std::exception&) {
            abort(n, path, "expected 'node' or 'node:port', got '" + s + "'");
        }
        return e;
    }

    template <typename T, typename F>
    void opt(const YAML::Node& map, const std::string& path, const std::string& key, T& out, F&& conv) {
        auto n = map[key];
        if (!n.IsDefined() || n.IsNull()) return;
        guard([&] { out = conv(n, sub(path, key)); });
    }

    // ---- sections ----

    AppSpec app(const YAML::Node& n, const std::string& path);
    HostSpec host(const YAML::Node& n, const std::string& path);
    SwitchSpec switch_(const YAML::Node& n, const std::string& path);
    LinkDef link(const YAML::Node& n, const std::string& path);
    GadgetSpec gadget(const YAML::Node& n, const std::string& path);
    gadget::AttackConfig attack(const YAML::Node& n, const std::string& path);
    ExfilSpec exfil(const YAML::Node& n, const std::string& path);
    DetectorSpec detectors(const YAML::Node& n, const std::string& path);
    TrafficSpec traffic(const YAML::Node& n, const std::string& path);
    Expectations expect(const YAML::Node& n, const std::string& path);
    std::vector<Ipv4Addr> targets(const YAML::Node& n, const std::string& path);

    template <typename T, typename F>
    std::vector<T> list(const YAML::Node& root, const std::string& key, F&& each) {
        std::vector<T> out;
        auto n = root[key];
        if (!n.IsDefined() || n.IsNull()) return out;
        guard([&] {
            expect_seq(n, key);
            for (std::size_t i = 0; i < n.size(); ++i)
                guard([&] { out.push_back(each(n[i], idx(key, i))); });
        });
        return out;
    }

private:
    std::string base_dir_;
};

std::vector<Ipv4Addr> Parser::targets(const YAML::Node& n, const std::string& path) {
    std::vector<Ipv4Addr> out;
    if (n.IsSequence()) {
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(ip(n[i], idx(path, i)));
        return out;
    }
    const auto s = scalar(n, path);
    if (s.find('/') != std::string::npos) {
        auto sn = net::Subnet::parse(s);
        if (!sn) abort(n, path, "invalid subnet '" + s + "'");
        return sn->hosts();
    }
    const auto dash = s.find('-');
    if (dash == std::string::npos) return {ip(n, path)};
    auto lo = Ipv4Addr::parse(s.substr(0, dash));
    auto hi = Ipv4Addr::parse(s.substr(dash + 1));
    if (!lo || !hi || lo->to_u32() > hi->to_u32()) abort(n, path, "invalid address range '" + s + "'");
    if (hi->to_u32() - lo->to_u32() > 65535) abort(n, path, "address range too large");
    for (auto v = lo->to_u32(); v <= hi->to_u32(); ++v) out.push_back(Ipv4Addr::from_u32(v));
    return out;
}

AppSpec Parser::app(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    const auto kind = scalar(required(n, path, "kind"), sub(path, "kind"));
    if (kind == "dns-server") {
        check_keys(n, path, {"kind", "zone"});
        DnsServerSpec s;
        auto z = required(n, path, "zone");
        expect_map(z, sub(path, "zone"));
        for (const auto& kv : z) {
            const auto name = kv.first.as<std::string>();
            guard([&] { s.zone[name] = ip(kv.second, sub(sub(path, "zone"), name)); });
        }
        return s;
    }
    if (kind == "http-server") {
        check_keys(n, path, {"kind", "port", "pages"});
        HttpServerSpec s;
        opt(n, path, "port", s.port, [&](const auto& x, auto p) { return static_cast<std::uint16_t>(integer(x, p, 1, 65535)); });
        auto pages = required(n, path, "pages");
        const auto pp = sub(path, "pages");
        expect_map(pages, pp);
        for (const auto& kv : pages) {
            const auto url = kv.first.as<std::string>();
            const auto up = sub(pp, url);
            guard([&] {
                const auto& page = kv.second;
                expect_map(page, up);
                check_keys(page, up, {"text", "file"});
                if (page["text"].IsDefined() == page["file"].IsDefined())
                    abort(page, up, "page needs exactly one of 'text' or 'file'");
                s.pages[url] = page["text"].IsDefined() ? to_bytes(scalar(page["text"], sub(up, "text")))
                                                         : file(page["file"], sub(up, "file"));
            });
        }
        return s;
    }
    if (kind == "echo") {
        check_keys(n, path, {"kind", "port"});
        EchoSpec s;
        opt(n, path, "port", s.port, [&](const auto& x, auto p) { return static_cast<std::uint16_t>(integer(x, p, 1, 65535)); });
        return s;
    }
    if (kind == "exfil-sink") {
        check_keys(n, path, {"kind", "port"});
        SinkSpec s;
        opt(n, path, "port", s.port, [&](const auto& x, auto p) { return static_cast<std::uint16_t>(integer(x, p, 1, 65535)); });
        return s;
    }
    if (kind == "promisc-sweep") {
        check_keys(n, path, {"kind", "targets", "start", "rate", "timeout", "probe_mac", "liveness_lead"});
        SweepSpec s;
        s.config.targets = targets(required(n, path, "targets"), sub(path, "targets"));
        opt(n, path, "start", s.config.start, [&](const auto& x, auto p) { return duration(x, p); });
        opt(n, path, "rate", s.config.rate, [&](const auto& x, auto p) { return real(x, p, 0.001, 1e6); });
        opt(n, path, "timeout", s.config.timeout, [&](const auto& x, auto p) { return duration(x, p); });
        opt(n, path, "liveness_lead", s.config.liveness_lead, [&](const auto& x, auto p) { return duration(x, p); });
        opt(n, path, "probe_mac", s.config.probe_mac, [&](const auto& x, auto p) {
            if (x.IsScalar() && x.Scalar() == "multicast") return detect::kMulticastProbeMac;
            return mac(x, p);
        });
        return s;
    }
    abort(n["kind"], sub(path, "kind"),
          "unknown app kind '" + kind + "' (expected dns-server, http-server, echo, exfil-sink, promisc-sweep)");
}

HostSpec Parser::host(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"name", "mac", "ip", "prefix", "gateway", "dns_server", "nic_mode", "forwarding", "arp_ttl",
                         "multicast", "apps"});
    HostSpec h;
    h.name = scalar(required(n, path, "name"), sub(path, "name"));
    guard([&] { h.mac = mac(required(n, path, "mac"), sub(path, "mac")); });
    guard([&] { h.ip = ip(required(n, path, "ip"), sub(path, "ip")); });
    opt(n, path, "prefix", h.prefix, [&](const auto& x, auto p) { return static_cast<std::uint8_t>(integer(x, p, 1, 32)); });
    opt(n, path, "gateway", h.gateway, [&](const auto& x, auto p) { return ip(x, p); });
    opt(n, path, "dns_server", h.dns_server, [&](const auto& x, auto p) { return ip(x, p); });
    opt(n, path, "forwarding", h.forwarding, [&](const auto& x, auto p) { return boolean(x, p); });
    opt(n, path, "arp_ttl", h.arp_ttl, [&](const auto& x, auto p) { return duration(x, p); });
    opt(n, path, "nic_mode", h.nic_mode, [&](const auto& x, auto p) {
        const auto s = scalar(x, p);
        if (s == "normal") return net::NicMode::Normal;
        if (s == "promiscuous") return net::NicMode::Promiscuous;
        abort(x, p, "nic_mode must be 'normal' or 'promiscuous'");
    });
    if (auto m = n["multicast"]; m.IsDefined() && !m.IsNull()) {
        guard([&] {
            expect_seq(m, sub(path, "multicast"));
            for (std::size_t i = 0; i < m.size(); ++i)
                guard([&] { h.multicast.push_back(mac(m[i], idx(sub(path, "multicast"), i))); });
        });
    }
    if (auto a = n["apps"]; a.IsDefined() && !a.IsNull()) {
        guard([&] {
            expect_seq(a, sub(path, "apps"));
            for (std::size_t i = 0; i < a.size(); ++i)
                guard([&] { h.apps.push_back(app(a[i], idx(sub(path, "apps"), i))); });
        });
    }
    if (h.arp_ttl.micros == 0) error(n["arp_ttl"], sub(path, "arp_ttl"), "arp_ttl must be positive");
    return h;
}

SwitchSpec Parser::switch_(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"name", "ports", "port_security"});
    SwitchSpec s;
    s.name = scalar(required(n, path, "name"), sub(path, "name"));
    s.ports = static_cast<int>(integer(required(n, path, "ports"), sub(path, "ports"), 2, 1024));
    if (auto ps = n["port_security"]; ps.IsDefined() && !ps.IsNull()) {
        const auto pp = sub(path, "port_security");
        guard([&] {
            expect_seq(ps, pp);
            for (std::size_t i = 0; i < ps.size(); ++i) {
                const auto ip_ = idx(pp, i);
                guard([&] {
                    const auto& e = ps[i];
                    expect_map(e, ip_);
                    check_keys(e, ip_, {"port", "max_macs", "action", "sticky"});
                    const int port = static_cast<int>(integer(required(e, ip_, "port"), sub(ip_, "port"), 0,
                                                              static_cast<std::uint64_t>(s.ports - 1)));
                    net::PortPolicy pol;
                    opt(e, ip_, "max_macs", pol.max_macs, [&](const auto& x, auto p) { return integer(x, p, 1, 4096); });
                    opt(e, ip_, "sticky", pol.sticky, [&](const auto& x, auto p) { return boolean(x, p); });
                    opt(e, ip_, "action", pol.action, [&](const auto& x, auto p) {
                        const auto a = scalar(x, p);
                        if (a == "shutdown") return net::ViolationAction::Shutdown;
                        if (a == "alert") return net::ViolationAction::Alert;
                        abort(x, p, "action must be 'shutdown' or 'alert'");
                    });
                    if (s.port_security.count(port)) abort(e, ip_, "duplicate policy for port " + std::to_string(port));
                    s.port_security[port] = pol;
                });
            }
        });
    }
    return s;
}

LinkDef Parser::link(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"a", "b", "latency"});
    LinkDef l;
    l.a = endpoint(required(n, path, "a"), sub(path, "a"));
    l.b = endpoint(required(n, path, "b"), sub(path, "b"));
    opt(n, path, "latency", l.latency, [&](const auto& x, auto p) { return duration(x, p); });
    return l;
}

gadget::AttackConfig Parser::attack(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    if (n.size() != 1) abort(n, path, "an attack entry has exactly one key: arp_poison, dns_spoof or udp_flood");
    const auto kind = n.begin()->first.as<std::string>();
    const YAML::Node body = n.begin()->second;
    const auto bp = sub(path, kind);
    if (kind == "arp_poison") {
        expect_map(body, bp);
        check_keys(body, bp, {"victim", "gateway", "period", "start", "stop", "rearp_on_stop"});
        gadget::ArpPoison a;
        a.victim_ip = ip(required(body, bp, "victim"), sub(bp, "victim"));
        a.gateway_ip = ip(required(body, bp, "gateway"), sub(bp, "gateway"));
        opt(body, bp, "period", a.period, [&](const auto& x, auto p) { return duration(x, p); });
        opt(body, bp, "start", a.start, [&](const auto& x, auto p) { return duration(x, p); });
        opt(body, bp, "stop", a.stop, [&](const auto& x, auto p) { return duration(x, p); });
        opt(body, bp, "rearp_on_stop", a.rearp_on_stop, [&](const auto& x, auto p) { return boolean(x, p); });
        if (a.period.micros == 0) abort(body, sub(bp, "period"), "period must be positive");
        return a;
    }
    if (kind == "dns_spoof") {
        expect_map(body, bp);
        check_keys(body, bp, {"names", "race_mode"});
        gadget::DnsSpoof d;
        auto names = required(body, bp, "names");
        expect_map(names, sub(bp, "names"));
        for (const auto& kv : names) {
            const auto name = kv.first.as<std::string>();
            guard([&] { d.names[name] = ip(kv.second, sub(sub(bp, "names"), name)); });
        }
        if (d.names.empty()) abort(names, sub(bp, "names"), "hostname map must not be empty");
        opt(body, bp, "race_mode", d.race_mode, [&](const auto& x, auto p) { return boolean(x, p); });
        return d;
    }
    if (kind == "udp_flood") {
        expect_map(body, bp);
        check_keys(body, bp, {"target", "rate", "ports", "payload_len", "start", "stop"});
        gadget::UdpFlood f;
        const auto t = required(body, bp, "target");
        if (!(t.IsScalar() && t.Scalar() == "random")) f.target = ip(t, sub(bp, "target"));
        f.rate = static_cast<std::uint32_t>(integer(required(body, bp, "rate"), sub(bp, "rate"), 1, 1'000'000));
        if (auto pr = body["ports"]; pr.IsDefined()) {
            guard([&] {
                if (!pr.IsSequence() || pr.size() != 2) abort(pr, sub(bp, "ports"), "ports must be [lo, hi]");
                f.port_lo = static_cast<std::uint16_t>(integer(pr[0], idx(sub(bp, "ports"), 0), 1, 65535));
                f.port_hi = static_cast<std::uint16_t>(integer(pr[1], idx(sub(bp, "ports"), 1), 1, 65535));
                if (f.port_lo > f.port_hi) abort(pr, sub(bp, "ports"), "port range is empty (lo > hi)");
            });
        }
        opt(body, bp, "payload_len", f.payload_len,
            [&](const auto& x, auto p) { return integer(x, p, 0, net::kMaxUdpPayload); });
        opt(body, bp, "start", f.start, [&](const auto& x, auto p) { return duration(x, p); });
        opt(body, bp, "stop", f.stop, [&](const auto& x, auto p) { return duration(x, p); });
        return f;
    }
    abort(n.begin()->first, bp, "unknown attack '" + kind + "' (expected arp_poison, dns_spoof, udp_flood)");
}

GadgetSpec Parser::gadget(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"name", "splice", "mode", "mac", "ip", "prefix", "capture_interval", "attacks"});
    GadgetSpec g;
    g.config.name = scalar(required(n, path, "name"), sub(path, "name"));
    guard([&] {
        auto sp = required(n, path, "splice");
        const auto spp = sub(path, "splice");
        expect_map(sp, spp);
        check_keys(sp, spp, {"host", "switch", "port"});
        g.splice.host = scalar(required(sp, spp, "host"), sub(spp, "host"));
        g.splice.switch_name = scalar(required(sp, spp, "switch"), sub(spp, "switch"));
        g.splice.port = static_cast<int>(integer(required(sp, spp, "port"), sub(spp, "port"), 0, 1023));
    });
    opt(n, path, "mode", g.config.mode, [&](const auto& x, auto p) {
        const auto s = scalar(x, p);
        if (s == "passive") return gadget::Mode::Passive;
        if (s == "active") return gadget::Mode::Active;
        abort(x, p, "mode must be 'passive' or 'active'");
    });
    opt(n, path, "mac", g.config.own_mac, [&](const auto& x, auto p) { return mac(x, p); });
    opt(n, path, "ip", g.config.own_ip, [&](const auto& x, auto p) { return ip(x, p); });
    opt(n, path, "prefix", g.config.prefix, [&](const auto& x, auto p) { return static_cast<std::uint8_t>(integer(x, p, 1, 32)); });
    opt(n, path, "capture_interval", g.config.capture_interval, [&](const auto& x, auto p) { return duration(x, p); });
    if (g.config.capture_interval.micros == 0) error(n["capture_interval"], sub(path, "capture_interval"), "must be positive");
    if (auto a = n["attacks"]; a.IsDefined() && !a.IsNull()) {
        guard([&] {
            expect_seq(a, sub(path, "attacks"));
            for (std::size_t i = 0; i < a.size(); ++i)
                guard([&] { g.config.attacks.push_back(attack(a[i], idx(sub(path, "attacks"), i))); });
        });
    }
    return g;
}

ExfilSpec Parser::exfil(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"gadget", "channel", "sink", "interval", "recipient", "size_cap", "token", "presented_token",
                         "retry", "outages"});
    ExfilSpec e;
    opt(n, path, "gadget", e.gadget, [&](const auto& x, auto p) { return scalar(x, p); });
    e.sink = scalar(required(n, path, "sink"), sub(path, "sink"));
    guard([&] {
        const auto c = scalar(required(n, path, "channel"), sub(path, "channel"));
        if (c == "email")
            e.channel = ChannelKind::Email;
        else if (c == "cloud")
            e.channel = ChannelKind::Cloud;
        else
            abort(n["channel"], sub(path, "channel"), "channel must be 'email' or 'cloud'");
    });
    opt(n, path, "interval", e.scheduler.interval, [&](const auto& x, auto p) { return duration(x, p); });
    if (e.scheduler.interval.micros == 0) error(n["interval"], sub(path, "interval"), "interval must be positive");
    opt(n, path, "recipient", e.recipient, [&](const auto& x, auto p) { return scalar(x, p); });
    opt(n, path, "size_cap", e.size_cap, [&](const auto& x, auto p) { return integer(x, p, 1, 1ull << 40); });
    opt(n, path, "token", e.token, [&](const auto& x, auto p) { return scalar(x, p); });
    opt(n, path, "presented_token", e.presented_token, [&](const auto& x, auto p) { return scalar(x, p); });
    if (auto r = n["retry"]; r.IsDefined() && !r.IsNull()) {
        const auto rp = sub(path, "retry");
        guard([&] {
            expect_map(r, rp);
            check_keys(r, rp, {"max_attempts", "backoff"});
            opt(r, rp, "max_attempts", e.scheduler.retry.max_attempts,
                [&](const auto& x, auto p) { return static_cast<int>(integer(x, p, 1, 1000)); });
            opt(r, rp, "backoff", e.scheduler.retry.backoff, [&](const auto& x, auto p) { return duration(x, p); });
        });
    }
    if (auto o = n["outages"]; o.IsDefined() && !o.IsNull()) {
        const auto op = sub(path, "outages");
        guard([&] {
            expect_seq(o, op);
            for (std::size_t i = 0; i < o.size(); ++i) {
                guard([&] {
                    const auto ep = idx(op, i);
                    expect_map(o[i], ep);
                    check_keys(o[i], ep, {"from", "to"});
                    exfil::Outage w{duration(required(o[i], ep, "from"), sub(ep, "from")),
                                    duration(required(o[i], ep, "to"), sub(ep, "to"))};
                    if (!(w.from < w.to)) abort(o[i], ep, "outage must satisfy from < to");
                    e.scheduler.outages.push_back(w);
                });
            }
        });
    }
    return e;
}

DetectorSpec Parser::detectors(const YAML::Node& n, const std::string& path) {
    DetectorSpec d;
    expect_seq(n, path);
    for (std::size_t i = 0; i < n.size(); ++i) {
        const auto ep = idx(path, i);
        guard([&] {
            const auto& e = n[i];
            expect_map(e, ep);
            const auto kind = scalar(required(e, ep, "kind"), sub(ep, "kind"));
            if (kind == "arp_watch") {
                check_keys(e, ep, {"kind", "learning", "storm_window", "storm_threshold"});
                detect::ArpWatchConfig c;
                opt(e, ep, "learning", c.learning, [&](const auto& x, auto p) { return duration(x, p); });
                opt(e, ep, "storm_window", c.storm_window, [&](const auto& x, auto p) { return duration(x, p); });
                opt(e, ep, "storm_threshold", c.storm_threshold, [&](const auto& x, auto p) { return integer(x, p, 1, 1u << 30); });
                d.arp_watch = c;
            } else if (kind == "beacon") {
                check_keys(e, ep, {"kind", "min_events", "jitter_tol"});
                detect::BeaconConfig c;
                opt(e, ep, "min_events", c.min_events, [&](const auto& x, auto p) { return integer(x, p, 4, 1u << 30); });
                opt(e, ep, "jitter_tol", c.jitter_tol, [&](const auto& x, auto p) { return real(x, p, 0.0, 1.0); });
                d.beacon = c;
            } else if (kind == "udp_storm") {
                check_keys(e, ep, {"kind", "window", "pps", "distinct_ports"});
                detect::StormConfig c;
                opt(e, ep, "window", c.window, [&](const auto& x, auto p) { return duration(x, p); });
                opt(e, ep, "pps", c.pps_threshold, [&](const auto& x, auto p) { return real(x, p, 0.0, 1e9); });
                opt(e, ep, "distinct_ports", c.distinct_port_threshold,
                    [&](const auto& x, auto p) { return integer(x, p, 1, 65536); });
                if (c.window.micros == 0) abort(e, sub(ep, "window"), "window must be positive");
                d.udp_storm = c;
            } else if (kind == "carve") {
                check_keys(e, ep, {"kind"});
                d.carve = true;
            } else {
                abort(e["kind"], sub(ep, "kind"), "unknown detector '" + kind + "' (expected arp_watch, beacon, udp_storm, carve)");
            }
        });
    }
    return d;
}

TrafficSpec Parser::traffic(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"host", "at", "action", "name", "path", "port", "dst", "payload", "repeat", "poisson"});
    TrafficSpec t;
    t.host = scalar(required(n, path, "host"), sub(path, "host"));
    opt(n, path, "at", t.at, [&](const auto& x, auto p) { return duration(x, p); });
    const auto action = scalar(required(n, path, "action"), sub(path, "action"));
    if (action == "dns_lookup") {
        t.action = net::DnsLookup{scalar(required(n, path, "name"), sub(path, "name"))};
    } else if (action == "http_get") {
        net::HttpGet g;
        g.host = scalar(required(n, path, "name"), sub(path, "name"));
        opt(n, path, "path", g.path, [&](const auto& x, auto p) { return scalar(x, p); });
        opt(n, path, "port", g.port, [&](const auto& x, auto p) { return static_cast<std::uint16_t>(integer(x, p, 1, 65535)); });
        t.action = g;
    } else if (action == "udp_send") {
        net::UdpSend u;
        u.dst = ip(required(n, path, "dst"), sub(path, "dst"));
        opt(n, path, "port", u.port, [&](const auto& x, auto p) { return static_cast<std::uint16_t>(integer(x, p, 1, 65535)); });
        opt(n, path, "payload", u.payload, [&](const auto& x, auto p) { return to_bytes(scalar(x, p)); });
        if (u.payload.size() > net::kMaxUdpPayload) abort(n["payload"], sub(path, "payload"), "payload exceeds one UDP datagram");
        t.action = u;
    } else {
        abort(n["action"], sub(path, "action"), "unknown action '" + action + "' (expected dns_lookup, http_get, udp_send)");
    }
    if (auto r = n["repeat"]; r.IsDefined() && !r.IsNull()) {
        const auto rp = sub(path, "repeat");
        guard([&] {
            expect_map(r, rp);
            check_keys(r, rp, {"every", "count"});
            RepeatSpec rs;
            rs.every = duration(required(r, rp, "every"), sub(rp, "every"));
            rs.count = integer(required(r, rp, "count"), sub(rp, "count"), 1, 1'000'000);
            if (rs.every.micros == 0) abort(r, sub(rp, "every"), "every must be positive");
            t.repeat = rs;
        });
    }
    if (auto q = n["poisson"]; q.IsDefined() && !q.IsNull()) {
        const auto qp = sub(path, "poisson");
        guard([&] {
            expect_map(q, qp);
            check_keys(q, qp, {"mean", "until"});
            PoissonSpec ps;
            ps.mean = duration(required(q, qp, "mean"), sub(qp, "mean"));
            ps.until = duration(required(q, qp, "until"), sub(qp, "until"));
            if (ps.mean.micros == 0) abort(q, sub(qp, "mean"), "mean must be positive");
            t.poisson = ps;
        });
    }
    if (t.repeat && t.poisson) error(n, path, "'repeat' and 'poisson' are mutually exclusive");
    return t;
}

Expectations Parser::expect(const YAML::Node& n, const std::string& path) {
    expect_map(n, path);
    check_keys(n, path, {"deliveries", "beacon_period", "storm_alerts", "storm_peak_pps", "arp_alerts", "binding_change",
                         "duplicate_claim", "spoof_hits_min", "port_violations", "port_shutdown", "promiscuous",
                         "normal_verdicts", "carved_images", "fetch", "resolves"});
    Expectations e;
    auto count = [&](const auto& x, auto p) { return static_cast<std::size_t>(integer(x, p, 0, 1ull << 40)); };
    auto flag = [&](const auto& x, auto p) { return boolean(x, p); };
    opt(n, path, "deliveries", e.deliveries, count);
    opt(n, path, "beacon_period", e.beacon_period, [&](const auto& x, auto p) { return duration(x, p); });
    opt(n, path, "storm_alerts", e.storm_alerts, count);
    opt(n, path, "storm_peak_pps", e.storm_peak_pps, [&](const auto& x, auto p) { return real(x, p, 0, 1e12); });
    opt(n, path, "arp_alerts", e.arp_alerts, count);
    opt(n, path, "binding_change", e.binding_change, flag);
    opt(n, path, "duplicate_claim", e.duplicate_claim, flag);
    opt(n, path, "spoof_hits_min", e.spoof_hits_min, count);
    opt(n, path, "port_violations", e.port_violations, count);
    opt(n, path, "port_shutdown", e.port_shutdown, flag);
    opt(n, path, "normal_verdicts", e.normal_verdicts, count);
    opt(n, path, "carved_images", e.carved_images, count);
    opt(n, path, "promiscuous", e.promiscuous, [&](const auto& x, auto p) {
        expect_seq(x, p);
        std::vector<Ipv4Addr> v;
        for (std::size_t i = 0; i < x.size(); ++i) v.push_back(ip(x[i], idx(p, i)));
        return v;
    });
    opt(n, path, "fetch", e.fetch, [&](const auto& x, auto p) {
        expect_map(x, p);
        check_keys(x, p, {"host", "path", "body_file"});
        FetchExpectation f;
        f.host = scalar(required(x, p, "host"), sub(p, "host"));
        f.path = x["path"].IsDefined() ? scalar(x["path"], sub(p, "path")) : "/";
        f.body = file(required(x, p, "body_file"), sub(p, "body_file"));
        return f;
    });
    opt(n, path, "resolves", e.resolves, [&](const auto& x, auto p) {
        expect_map(x, p);
        check_keys(x, p, {"host", "name", "ip"});
        return ResolveExpectation{scalar(required(x, p, "host"), sub(p, "host")),
                                  scalar(required(x, p, "name"), sub(p, "name")),
                                  ip(required(x, p, "ip"), sub(p, "ip"))};
    });
    return e;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioError({Diagnostic{e.mark.line + 1, e.mark.column + 1, "", "YAML syntax error: " + e.msg}});
    }
    Parser p(base_dir);
    Scenario s;
    p.guard([&] {
        p.expect_map(root, "");
        p.check_keys(root, "", {"name", "seed", "duration", "hosts", "switches", "links", "gadgets", "exfil",
                                "detectors", "traffic", "expect"});
        s.name = p.scalar(p.required(root, "", "name"), "name");
    });
    if (!root.IsMap()) throw ScenarioError(p.diags);
    p.guard([&] { s.seed = p.integer(p.required(root, "", "seed"), "seed", 0, ~std::uint64_t{0}); });
    p.guard([&] {
        s.duration = p.duration(p.required(root, "", "duration"), "duration");
        if (s.duration.micros == 0) p.abort(root["duration"], "duration", "duration must be positive");
    });
    s.hosts = p.list<HostSpec>(root, "hosts", [&](const auto& n, auto path) { return p.host(n, path); });
    s.switches = p.list<SwitchSpec>(root, "switches", [&](const auto& n, auto path) { return p.switch_(n, path); });
    s.links = p.list<LinkDef>(root, "links", [&](const auto& n, auto path) { return p.link(n, path); });
    s.gadgets = p.list<GadgetSpec>(root, "gadgets", [&](const auto& n, auto path) { return p.gadget(n, path); });
    s.traffic = p.list<TrafficSpec>(root, "traffic", [&](const auto& n, auto path) { return p.traffic(n, path); });
    if (auto e = root["exfil"]; e.IsDefined() && !e.IsNull()) p.guard([&] { s.exfil = p.exfil(e, "exfil"); });
    if (auto d = root["detectors"]; d.IsDefined() && !d.IsNull())
        p.guard([&] { s.detectors = p.detectors(d, "detectors"); });
    if (auto x = root["expect"]; x.IsDefined() && !x.IsNull()) p.guard([&] { s.expect = p.expect(x, "expect"); });

    if (!p.diags.empty()) throw ScenarioError(p.diags);
    if (auto more = validate(s); !more.empty()) throw ScenarioError(std::move(more));
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open scenario '" + path + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return parse_scenario(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace sbcsim::scenario
