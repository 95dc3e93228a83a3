#include <set>

#include "sbcsim/scenario/scenario.hpp"

namespace sbcsim::scenario {

namespace {

struct Collector {
    std::vector<Diagnostic> diags;
    void error(std::string path, std::string msg) {
        Diagnostic d;
        d.path = std::move(path);
        d.message = std::move(msg);
        diags.push_back(std::move(d));
    }
};

std::string idx(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

bool has_sink(const HostSpec& h, std::uint16_t port) {
    for (const auto& a : h.apps)
        if (const auto* s = std::get_if<SinkSpec>(&a); s && s->port == port) return true;
    return false;
}

}  // namespace

std::vector<Diagnostic> validate(const Scenario& s) {
    Collector c;
    std::map<std::string, std::string> kinds;  // node name -> "host" / "switch" / "gadget"
    auto claim_name = [&](const std::string& name, const std::string& kind, const std::string& path) {
        if (name.empty()) {
            c.error(path, "name must not be empty");
            return;
        }
        if (!kinds.emplace(name, kind).second) c.error(path, "duplicate node name '" + name + "'");
    };

    std::set<Ipv4Addr> ips;
    std::set<MacAddr> macs;
    std::map<std::string, const HostSpec*> hosts;
    for (std::size_t i = 0; i < s.hosts.size(); ++i) {
        const auto& h = s.hosts[i];
        const auto p = idx("hosts", i);
        claim_name(h.name, "host", p + ".name");
        hosts[h.name] = &h;
        if (!ips.insert(h.ip).second) c.error(p + ".ip", "duplicate IP address " + h.ip.to_string());
        if (!macs.insert(h.mac).second) c.error(p + ".mac", "duplicate MAC address " + h.mac.to_string());
        if (h.mac.is_group()) c.error(p + ".mac", "host MAC must be unicast");
        if (h.gateway && !net::Subnet{h.ip, h.prefix}.contains(*h.gateway))
            c.error(p + ".gateway", "gateway is not on the host's subnet");
    }
    std::map<std::string, const SwitchSpec*> switches;
    for (std::size_t i = 0; i < s.switches.size(); ++i) {
        claim_name(s.switches[i].name, "switch", idx("switches", i) + ".name");
        switches[s.switches[i].name] = &s.switches[i];
    }
    for (std::size_t i = 0; i < s.gadgets.size(); ++i) {
        const auto& g = s.gadgets[i].config;
        const auto p = idx("gadgets", i);
        claim_name(g.name, "gadget", p + ".name");
        if (g.mode == gadget::Mode::Active) {
            if (!g.own_ip) c.error(p + ".ip", "an active gadget needs its own IP address");
            else if (!ips.insert(*g.own_ip).second) c.error(p + ".ip", "duplicate IP address " + g.own_ip->to_string());
            if (g.own_mac == MacAddr{}) c.error(p + ".mac", "an active gadget needs its own MAC address");
            else if (!macs.insert(g.own_mac).second) c.error(p + ".mac", "duplicate MAC address " + g.own_mac.to_string());
        } else if (!g.attacks.empty()) {
            c.error(p + ".attacks", "attacks require mode: active");
        }
        for (std::size_t k = 0; k < g.attacks.size(); ++k) {
            const auto ap = idx(p + ".attacks", k);
            std::visit(
                [&](const auto& a) {
                    using T = std::decay_t<decltype(a)>;
                    if constexpr (!std::is_same_v<T, gadget::DnsSpoof>)
                        if (a.stop && !(a.start < *a.stop)) c.error(ap, "stop must come after start");
                },
                g.attacks[k]);
        }
    }

    // Links: endpoints must exist, ports in range and used once.
    std::set<std::pair<std::string, int>> used;
    auto check_end = [&](const Endpoint& e, const std::string& path) {
        auto it = kinds.find(e.node);
        if (it == kinds.end()) {
            c.error(path, "unknown node '" + e.node + "'");
            return;
        }
        if (it->second == "gadget") {
            c.error(path, "gadgets are placed with 'splice', not linked directly");
            return;
        }
        const int ports = it->second == "host" ? 1 : switches[e.node]->ports;
        if (e.port < 0 || e.port >= ports)
            c.error(path, "node '" + e.node + "' has no port " + std::to_string(e.port));
        else if (!used.emplace(e.node, e.port).second)
            c.error(path, "port " + std::to_string(e.port) + " of '" + e.node + "' is linked twice");
    };
    for (std::size_t i = 0; i < s.links.size(); ++i) {
        check_end(s.links[i].a, idx("links", i) + ".a");
        check_end(s.links[i].b, idx("links", i) + ".b");
    }

    std::set<std::pair<std::string, int>> spliced;
    for (std::size_t i = 0; i < s.gadgets.size(); ++i) {
        const auto& sp = s.gadgets[i].splice;
        const auto p = idx("gadgets", i) + ".splice";
        const Endpoint host{sp.host, 0}, sw{sp.switch_name, sp.port};
        bool found = false;
        for (const auto& l : s.links)
            if ((l.a == host && l.b == sw) || (l.a == sw && l.b == host)) found = true;
        if (!found)
            c.error(p, "no link between host '" + sp.host + "' and " + sp.switch_name + ":" + std::to_string(sp.port));
        else if (!spliced.emplace(sp.switch_name, sp.port).second)
            c.error(p, "link already spliced by another gadget");
    }

    if (s.exfil) {
        const auto& e = *s.exfil;
        const GadgetSpec* g = nullptr;
        if (e.gadget.empty()) {
            if (s.gadgets.size() == 1) g = &s.gadgets[0];
            else c.error("exfil.gadget", "required when the scenario has more than one gadget");
        } else {
            for (const auto& x : s.gadgets)
                if (x.config.name == e.gadget) g = &x;
            if (!g) c.error("exfil.gadget", "unknown gadget '" + e.gadget + "'");
        }
        if (g && g->config.mode != gadget::Mode::Active) c.error("exfil.gadget", "exfiltration requires mode: active");
        const std::uint16_t port = e.channel == ChannelKind::Email ? 25 : 443;
        auto h = hosts.find(e.sink);
        if (h == hosts.end())
            c.error("exfil.sink", "unknown host '" + e.sink + "'");
        else if (!has_sink(*h->second, port))
            c.error("exfil.sink", "host '" + e.sink + "' has no exfil-sink app on port " + std::to_string(port));
    }

    for (std::size_t i = 0; i < s.traffic.size(); ++i) {
        const auto& t = s.traffic[i];
        const auto p = idx("traffic", i);
        auto h = hosts.find(t.host);
        if (h == hosts.end()) {
            c.error(p + ".host", "unknown host '" + t.host + "'");
            continue;
        }
        if (t.at > s.duration) c.error(p + ".at", "starts after the end of the run");
        if (const auto* g = std::get_if<net::HttpGet>(&t.action);
            g && !Ipv4Addr::parse(g->host) && !h->second->dns_server)
            c.error(p, "http_get by name needs a dns_server on host '" + t.host + "'");
        if (std::holds_alternative<net::DnsLookup>(t.action) && !h->second->dns_server)
            c.error(p, "dns_lookup needs a dns_server on host '" + t.host + "'");
    }

    if (s.expect.fetch && !hosts.count(s.expect.fetch->host))
        c.error("expect.fetch.host", "unknown host '" + s.expect.fetch->host + "'");
    if (s.expect.resolves && !hosts.count(s.expect.resolves->host))
        c.error("expect.resolves.host", "unknown host '" + s.expect.resolves->host + "'");
    return c.diags;
}

}  // namespace sbcsim::scenario
