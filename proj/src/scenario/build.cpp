#include <cmath>

#include "sbcsim/scenario/scenario.hpp"

namespace sbcsim::scenario {

std::vector<SimTime> expand_times(const TrafficSpec& t, std::uint64_t seed, std::size_t index) {
    std::vector<SimTime> out;
    if (t.repeat) {
        for (std::size_t k = 0; k < t.repeat->count; ++k)
            out.push_back(t.at + SimTime::from_micros(k * t.repeat->every.micros));
    } else if (t.poisson) {
        Rng rng(Rng::derive(seed, "traffic:" + t.host + ":" + std::to_string(index)));
        const double mean = static_cast<double>(t.poisson->mean.micros);
        for (SimTime at = t.at; at <= t.poisson->until;) {
            out.push_back(at);
            // At least 1 µs apart so arrivals stay strictly ordered.
            const auto gap = static_cast<std::uint64_t>(std::llround(rng.exponential(mean)));
            at += SimTime::from_micros(gap == 0 ? 1 : gap);
        }
    } else {
        out.push_back(t.at);
    }
    return out;
}

namespace {

std::unique_ptr<net::HostApp> make_app(const AppSpec& spec, World& w, const std::string& host) {
    return std::visit(
        [&](const auto& a) -> std::unique_ptr<net::HostApp> {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, DnsServerSpec>) {
                return std::make_unique<net::DnsServerApp>(a.zone);
            } else if constexpr (std::is_same_v<T, HttpServerSpec>) {
                return std::make_unique<net::HttpServerApp>(a.port, a.pages);
            } else if constexpr (std::is_same_v<T, EchoSpec>) {
                return std::make_unique<net::EchoServerApp>(a.port);
            } else if constexpr (std::is_same_v<T, SinkSpec>) {
                return std::make_unique<net::SinkServerApp>(a.port);
            } else {
                auto app = std::make_unique<detect::PromiscSweepApp>(a.config);
                w.sweeps[host] = app.get();
                return app;
            }
        },
        spec);
}

std::optional<gadget::ExfilSetup> make_exfil(const Scenario& s, const GadgetSpec& g) {
    if (!s.exfil) return std::nullopt;
    const auto& e = *s.exfil;
    if (!e.gadget.empty() && e.gadget != g.config.name) return std::nullopt;
    std::unique_ptr<exfil::Channel> channel;
    if (e.channel == ChannelKind::Email)
        channel = std::make_unique<exfil::EmailChannel>(e.recipient, e.size_cap);
    else
        channel = std::make_unique<exfil::CloudChannel>(e.token, e.presented_token.value_or(e.token));
    gadget::ExfilSetup setup;
    for (const auto& h : s.hosts)
        if (h.name == e.sink) setup.sink_ip = h.ip;
    setup.scheduler = std::make_unique<exfil::ExfilScheduler>(e.scheduler, std::move(channel));
    return setup;
}

}  // namespace

World build_world(const Scenario& s) {
    if (auto diags = validate(s); !diags.empty()) throw ScenarioError(std::move(diags));
    World w;
    w.sim = std::make_unique<net::Simulator>(s.seed);
    std::map<std::string, std::size_t> index;

    for (const auto& h : s.hosts) {
        net::HostConfig cfg;
        cfg.name = h.name;
        cfg.stack.mac = h.mac;
        cfg.stack.ip = h.ip;
        cfg.stack.prefix = h.prefix;
        cfg.stack.gateway = h.gateway;
        cfg.stack.arp_ttl = h.arp_ttl;
        cfg.stack.forwarding = h.forwarding;
        cfg.nic_mode = h.nic_mode;
        cfg.multicast = h.multicast;
        cfg.dns_server = h.dns_server;
        auto host = std::make_unique<net::Host>(std::move(cfg));
        for (const auto& app : h.apps) host->add_app(make_app(app, w, h.name));
        w.hosts[h.name] = host.get();
        index[h.name] = w.sim->add_node(std::move(host));
    }
    for (const auto& sw : s.switches) {
        auto node = std::make_unique<net::Switch>(sw.name, sw.ports);
        for (const auto& [port, policy] : sw.port_security) node->core().set_policy(port, policy);
        w.switches[sw.name] = node.get();
        index[sw.name] = w.sim->add_node(std::move(node));
    }
    for (const auto& g : s.gadgets) {
        auto node = std::make_unique<gadget::Gadget>(g.config, make_exfil(s, g));
        w.gadgets[g.config.name] = node.get();
        index[g.config.name] = w.sim->add_node(std::move(node));
    }

    for (const auto& l : s.links) {
        const GadgetSpec* splice = nullptr;
        const Endpoint* host_end = nullptr;
        const Endpoint* sw_end = nullptr;
        for (const auto& g : s.gadgets) {
            const Endpoint h{g.splice.host, 0}, sw{g.splice.switch_name, g.splice.port};
            if (l.a == h && l.b == sw) splice = &g, host_end = &l.a, sw_end = &l.b;
            if (l.b == h && l.a == sw) splice = &g, host_end = &l.b, sw_end = &l.a;
        }
        if (!splice) {
            w.sim->connect(net::LinkSpec{index.at(l.a.node), l.a.port, index.at(l.b.node), l.b.port, l.latency});
            continue;
        }
        // The gadget sits inline; the two halves add up to the original latency.
        const auto gi = index.at(splice->config.name);
        const auto first = SimTime::from_micros(l.latency.micros / 2);
        w.sim->connect(net::LinkSpec{index.at(host_end->node), host_end->port, gi, gadget::kVictimPort, first});
        w.sim->connect(
            net::LinkSpec{gi, gadget::kNetworkPort, index.at(sw_end->node), sw_end->port, l.latency - first});
    }

    for (std::size_t i = 0; i < s.traffic.size(); ++i) {
        const auto& t = s.traffic[i];
        for (auto at : expand_times(t, s.seed, i)) w.hosts.at(t.host)->schedule(at, t.action);
    }
    return w;
}

RunResult run_simulation(const Scenario& s) {
    RunResult r;
    r.world = build_world(s);
    r.world.sim->run(s.duration);
    r.trace = r.world.sim->take_trace();
    return r;
}

}  // namespace sbcsim::scenario
