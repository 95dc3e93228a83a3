#include <algorithm>
#include <deque>
#include <set>

#include "sbcsim/detect/detect.hpp"

namespace sbcsim::detect {

using namespace net;

namespace {
template <typename T>
void add_unique(std::vector<T>& v, const T& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}
}  // namespace

std::vector<ArpAlert> arp_watch(const std::vector<Observation>& obs, const ArpWatchConfig& cfg) {
    std::vector<ArpAlert> alerts;
    std::map<Ipv4Addr, MacAddr> baseline;
    std::map<MacAddr, std::vector<Ipv4Addr>> claims;
    std::set<std::pair<Ipv4Addr, Ipv4Addr>> outstanding;  // (asker, asked-for)
    std::map<MacAddr, std::deque<SimTime>> unsolicited;
    std::map<Ipv4Addr, std::size_t> change_alert;
    std::map<MacAddr, std::size_t> dup_alert;
    std::map<MacAddr, std::size_t> storm_alert;

    for (const auto& o : obs) {
        const auto* arp = o.frame->frame.arp();
        if (!arp) continue;
        const SimTime t = o.time;
        if (arp->op == ArpOp::Request) {
            outstanding.emplace(arp->sender_ip, arp->target_ip);
            continue;
        }
        if (arp->sender_ip.is_unspecified()) continue;
        const bool learning = t < cfg.learning;
        const bool solicited = outstanding.erase({arp->target_ip, arp->sender_ip}) > 0;

        auto [bit, fresh] = baseline.try_emplace(arp->sender_ip, arp->sender_mac);
        if (learning) {
            bit->second = arp->sender_mac;
        } else if (!fresh && bit->second != arp->sender_mac) {
            auto [ait, created] = change_alert.try_emplace(arp->sender_ip, alerts.size());
            if (created) alerts.push_back(ArpAlert{ArpAlertKind::BindingChange, arp->sender_ip, {bit->second}, {}, t, t, 0});
            auto& a = alerts[ait->second];
            add_unique(a.macs, arp->sender_mac);
            a.last_seen = t;
            ++a.count;
        }

        auto& ips = claims[arp->sender_mac];
        add_unique(ips, arp->sender_ip);
        if (ips.size() >= 2 && !learning) {
            auto [dit, created] = dup_alert.try_emplace(arp->sender_mac, alerts.size());
            if (created) alerts.push_back(ArpAlert{ArpAlertKind::DuplicateClaim, ips.front(), {arp->sender_mac}, {}, t, t, 0});
            auto& a = alerts[dit->second];
            a.ips = ips;
            a.last_seen = t;
            ++a.count;
        }

        if (!solicited) {
            auto& q = unsolicited[arp->sender_mac];
            q.push_back(t);
            while (!q.empty() && q.front() + cfg.storm_window <= t) q.pop_front();
            if (q.size() >= cfg.storm_threshold && !learning) {
                auto sit = storm_alert.find(arp->sender_mac);
                if (sit == storm_alert.end() || alerts[sit->second].last_seen + cfg.storm_window <= t) {
                    storm_alert[arp->sender_mac] = alerts.size();
                    alerts.push_back(ArpAlert{ArpAlertKind::GratuitousStorm, arp->sender_ip, {arp->sender_mac}, {},
                                              q.front(), t, 0});
                }
                auto& a = alerts[storm_alert[arp->sender_mac]];
                a.last_seen = t;
                a.count = std::max<std::uint64_t>(a.count, q.size());
            }
        }
    }
    return alerts;
}

}  // namespace sbcsim::detect
