#include "sbcsim/net/switch.hpp"

namespace sbcsim::net {

namespace {
const std::optional<PortPolicy> kNoPolicy;
}

void SwitchCore::set_policy(int port, PortPolicy p) {
    if (p.max_macs < 1) throw std::invalid_argument("port policy max_macs must be at least 1");
    policies_[port] = p;
}

const std::optional<PortPolicy>& SwitchCore::policy(int port) const {
    auto it = policies_.find(port);
    return it == policies_.end() ? kNoPolicy : it->second;
}

PortVerdict SwitchCore::port_security_check(const EthernetFrame& frame, int in_port) {
    const auto& pol = policy(in_port);
    if (!pol) return {};
    auto& allowed = secured_[in_port];
    if (!pol->sticky) {
        // Without stickiness the allowance tracks MACs currently learned on the port.
        allowed.clear();
        for (const auto& [mac, e] : fdb_)
            if (e.port == in_port) allowed.insert(mac);
    }
    if (allowed.contains(frame.src)) return {};
    if (allowed.size() < pol->max_macs) {
        allowed.insert(frame.src);
        return {};
    }
    return PortVerdict{false, pol->action};
}

SwitchStep SwitchCore::step(const EthernetFrame& frame, int in_port, SimTime now) {
    SwitchStep out;
    if (shutdown_.at(static_cast<std::size_t>(in_port))) {
        out.dropped = "port-shutdown";
        return out;
    }
    const auto verdict = port_security_check(frame, in_port);
    if (!verdict.permit) {
        PortViolation v{now, in_port, frame.src, verdict.action};
        violations_.push_back(v);
        out.violation = v;
        if (verdict.action == ViolationAction::Shutdown) {
            shutdown_[static_cast<std::size_t>(in_port)] = true;
            out.dropped = "port-security-shutdown";
            return out;
        }
    }

    if (!frame.src.is_group()) fdb_[frame.src] = FdbEntry{in_port, now};

    if (!frame.dst.is_group()) {
        if (auto it = fdb_.find(frame.dst); it != fdb_.end()) {
            const int p = it->second.port;
            if (p != in_port && !shutdown_[static_cast<std::size_t>(p)]) out.out_ports.push_back(p);
            return out;
        }
    }
    for (int p = 0; p < ports_; ++p)
        if (p != in_port && !shutdown_[static_cast<std::size_t>(p)]) out.out_ports.push_back(p);
    return out;
}

void Switch::on_frame(StepContext& ctx, int port, const FrameRef& frame) {
    auto step = core_.step(frame->frame, port, ctx.now());
    if (step.violation) {
        const auto& v = *step.violation;
        ctx.observe(port, frame,
                    std::string("port-security violation mac=") + v.mac.to_string() +
                        (v.action == ViolationAction::Shutdown ? " action=shutdown" : " action=alert"));
    }
    if (step.dropped) {
        ctx.drop(port, frame, *step.dropped);
        if (*step.dropped == "port-security-shutdown") ctx.link_down(port);
        return;
    }
    for (int p : step.out_ports) ctx.forward(p, frame);
}

}  // namespace sbcsim::net
