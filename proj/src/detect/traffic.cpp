#include <algorithm>
#include <deque>
#include <set>

#include "sbcsim/detect/detect.hpp"

namespace sbcsim::detect {

using namespace net;

namespace {

struct Packet {
    FlowKey key;
    Transport transport;
    std::size_t payload;
    const TcpSegment* tcp;
};

std::optional<Packet> classify(const Observation& o) {
    const auto* ip = o.frame->frame.ipv4();
    if (!ip) return std::nullopt;
    if (const auto* u = ip->udp()) return Packet{{ip->src, ip->dst, u->src_port, u->dst_port}, Transport::Udp, u->payload.size(), nullptr};
    if (const auto* t = ip->tcp()) return Packet{{ip->src, ip->dst, t->src_port, t->dst_port}, Transport::Tcp, t->payload.size(), t};
    return std::nullopt;
}

std::uint64_t median(std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

std::vector<FlowRecord> derive_flows(const std::vector<Observation>& obs, SimDuration udp_idle) {
    std::vector<FlowRecord> flows;
    std::map<FlowKey, std::size_t> open;
    std::map<FlowKey, SimTime> last_udp;
    std::set<FlowKey> seen;
    for (const auto& o : obs) {
        auto p = classify(o);
        if (!p) continue;
        bool start = false;
        if (p->transport == Transport::Tcp) {
            const bool syn = p->tcp->has(tcp_flags::SYN) && !p->tcp->has(tcp_flags::ACK);
            start = syn || (!open.count(p->key) && !seen.count(p->key.reversed()));
        } else {
            auto it = last_udp.find(p->key);
            start = it == last_udp.end() || o.time - it->second > udp_idle;
            last_udp[p->key] = o.time;
        }
        seen.insert(p->key);
        if (start) {
            open[p->key] = flows.size();
            flows.push_back(FlowRecord{p->key, p->transport, o.time, 0, 0});
        }
        auto it = open.find(p->key);
        if (it == open.end()) continue;
        auto& f = flows[it->second];
        f.bytes += p->payload;
        ++f.packets;
    }
    return flows;
}

std::vector<Beacon> beacon_detect(const std::vector<FlowRecord>& flows, const BeaconConfig& cfg) {
    const std::size_t min_events = std::max<std::size_t>(cfg.min_events, 4);
    std::map<std::pair<Ipv4Addr, Ipv4Addr>, std::vector<std::uint64_t>> starts;
    for (const auto& f : flows) starts[{f.key.src_ip, f.key.dst_ip}].push_back(f.start.micros);

    std::vector<Beacon> out;
    for (auto& [pair, ts] : starts) {
        if (ts.size() < min_events) continue;
        std::sort(ts.begin(), ts.end());
        std::vector<std::uint64_t> deltas;
        for (std::size_t i = 1; i < ts.size(); ++i) deltas.push_back(ts[i] - ts[i - 1]);
        const std::uint64_t med = median(deltas);
        if (med == 0) continue;
        std::vector<std::uint64_t> dev;
        std::size_t within = 0;
        for (auto d : deltas) {
            const std::uint64_t diff = d > med ? d - med : med - d;
            dev.push_back(diff);
            if (static_cast<double>(diff) <= cfg.jitter_tol * static_cast<double>(med)) ++within;
        }
        const double rel = static_cast<double>(median(dev)) / static_cast<double>(med);
        if (rel > cfg.jitter_tol) continue;
        out.push_back(Beacon{pair.first, pair.second, SimTime::from_micros(med),
                             static_cast<double>(within) / static_cast<double>(deltas.size()), ts.size(), rel});
    }
    return out;
}

std::vector<StormAlert> udp_storm_detect(const std::vector<Observation>& obs, const StormConfig& cfg) {
    struct Item {
        SimTime time;
        Ipv4Addr src;
        std::uint16_t port;
    };
    std::vector<StormAlert> alerts;
    std::set<FlowKey> seen;
    std::deque<Item> window;
    std::map<std::uint16_t, std::size_t> ports;
    std::map<Ipv4Addr, std::uint64_t> sources;
    bool open = false;
    const double w = cfg.window.seconds();

    auto close = [&] {
        if (!open) return;
        std::vector<std::pair<Ipv4Addr, std::uint64_t>> top(sources.begin(), sources.end());
        std::stable_sort(top.begin(), top.end(), [](auto& a, auto& b) { return a.second > b.second; });
        if (top.size() > 5) top.resize(5);
        alerts.back().top_sources = std::move(top);
        open = false;
    };

    for (const auto& o : obs) {
        auto p = classify(o);
        if (!p || p->transport != Transport::Udp) continue;
        const bool solicited = seen.count(p->key.reversed()) > 0;
        seen.insert(p->key);
        if (solicited) continue;

        const SimTime t = o.time;
        window.push_back(Item{t, p->key.src_ip, p->key.dst_port});
        ++ports[p->key.dst_port];
        while (window.front().time + cfg.window <= t) {
            if (--ports[window.front().port] == 0) ports.erase(window.front().port);
            window.pop_front();
        }
        const double pps = static_cast<double>(window.size()) / w;
        const bool alarm = pps >= cfg.pps_threshold && ports.size() >= cfg.distinct_port_threshold;
        if (!alarm) {
            close();
            continue;
        }
        if (!open && !alerts.empty() && t < alerts.back().last_seen + cfg.window) {
            // Re-trigger within a window of the last alert continues that episode.
            open = true;
            ++sources[p->key.src_ip];
            ++alerts.back().packets;
        } else if (!open) {
            open = true;
            sources.clear();
            alerts.push_back(StormAlert{t, t, 0, 0, {}, 0});
            for (const auto& it : window) ++sources[it.src];
            alerts.back().packets = window.size();
        } else {
            ++sources[p->key.src_ip];
            ++alerts.back().packets;
        }
        auto& a = alerts.back();
        a.last_seen = t;
        if (pps > a.peak_pps) {
            a.peak_pps = pps;
            a.peak_distinct_ports = ports.size();
        }
    }
    close();
    return alerts;
}

}  // namespace sbcsim::detect
