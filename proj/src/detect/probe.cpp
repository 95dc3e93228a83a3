#include <cmath>

#include "sbcsim/detect/detect.hpp"

namespace sbcsim::detect {

using namespace net;

void PromiscSweepApp::start(Host& host, StepContext& ctx) {
    verdicts_.clear();
    slots_.assign(cfg_.targets.size(), Slot{});
    const auto spacing = SimTime::from_micros(static_cast<std::uint64_t>(std::llround(1e6 / cfg_.rate)));
    for (std::size_t i = 0; i < cfg_.targets.size(); ++i) {
        const Ipv4Addr target = cfg_.targets[i];
        index_[target] = i;
        const SimTime slot = cfg_.start + SimTime::from_micros(spacing.micros * i);
        verdicts_.push_back(ProbeVerdict{target, Verdict::NoResponse, slot + cfg_.liveness_lead, nullptr, nullptr});

        host.timers().schedule(ctx, slot, [&host, target](StepContext& c) { host.stack().send_arp_request(c, target); });
        host.timers().schedule(ctx, slot + cfg_.liveness_lead, [this, &host, i, target](StepContext& c) {
            const auto& sc = host.stack().config();
            ArpPacket req{ArpOp::Request, sc.mac, sc.ip, MacAddr::zero(), target};
            auto frame = WireFrame::make(make_arp_frame(sc.mac, cfg_.probe_mac, req));
            verdicts_[i].probe = frame;
            verdicts_[i].probed_at = c.now();
            slots_[i].probe_sent = true;
            host.transmit(c, frame);
        });
        host.timers().schedule(ctx, slot + cfg_.liveness_lead + cfg_.timeout, [this, i](StepContext& c) {
            auto& s = slots_[i];
            if (s.settled) return;
            s.settled = true;
            verdicts_[i].verdict = s.alive ? Verdict::Normal : Verdict::NoResponse;
            if (++settled_ == slots_.size()) completed_at_ = c.now();
        });
    }
    host.stack().add_arp_listener(
        [this](StepContext& c, const ArpPacket& arp, const FrameRef& frame) { on_arp(c, arp, frame); });
}

void PromiscSweepApp::on_arp(StepContext& ctx, const ArpPacket& arp, const FrameRef& frame) {
    if (arp.op != ArpOp::Reply) return;
    auto it = index_.find(arp.sender_ip);
    if (it == index_.end()) return;
    auto& s = slots_[it->second];
    if (s.settled) return;
    if (!s.probe_sent) {
        s.alive = true;
        return;
    }
    // Only a NIC accepting the fake destination could have seen the probe.
    s.alive = true;
    s.settled = true;
    verdicts_[it->second].verdict = Verdict::Promiscuous;
    verdicts_[it->second].reply = frame;
    if (++settled_ == slots_.size()) completed_at_ = ctx.now();
}

}  // namespace sbcsim::detect
