#include "sbcsim/net/sim.hpp"

#include <stdexcept>

namespace sbcsim::net {

std::size_t Simulator::add_node(std::unique_ptr<Node> node) {
    if (find(node->name())) throw std::invalid_argument("duplicate node name '" + node->name() + "'");
    NodeSlot slot;
    slot.ports.resize(static_cast<std::size_t>(node->port_count()));
    slot.rng = Rng(Rng::derive(seed_, node->name()));
    slot.node = std::move(node);
    nodes_.push_back(std::move(slot));
    return nodes_.size() - 1;
}

void Simulator::connect(const LinkSpec& link) {
    auto attach = [&](std::size_t n, int p, bool side_a) {
        auto& slot = nodes_.at(n);
        if (p < 0 || static_cast<std::size_t>(p) >= slot.ports.size())
            throw std::invalid_argument("node '" + slot.node->name() + "' has no port " + std::to_string(p));
        if (slot.ports[p]) throw std::invalid_argument("port " + std::to_string(p) + " of '" + slot.node->name() +
                                                       "' is already linked");
        slot.ports[p] = Attachment{links_.size(), side_a};
    };
    attach(link.a_node, link.a_port, true);
    attach(link.b_node, link.b_port, false);
    links_.push_back(Link{link, true});
}

std::optional<std::size_t> Simulator::find(const std::string& name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].node->name() == name) return i;
    return std::nullopt;
}

void Simulator::push(SimTime t, Payload p) { queue_.push(Event{t, next_seq_++, std::move(p)}); }

void Simulator::record(SimTime t, EventKind kind, std::size_t node, int port, FrameRef frame, std::string note) {
    trace_.events.push_back(
        TraceEvent{t, trace_seq_++, kind, nodes_[node].node->name(), port, std::move(frame), std::move(note)});
}

void Simulator::apply(std::size_t n, StepContext& ctx) {
    const SimTime now = ctx.now();
    for (auto& a : ctx.take_actions()) {
        switch (a.type) {
            case Action::Type::Emit:
            case Action::Type::Forward: {
                const bool origin = a.type == Action::Type::Emit;
                record(now, EventKind::Emit, n, a.port, a.frame, std::string(origin ? kNoteOrigin : kNoteForward));
                const auto& att = nodes_[n].ports.at(static_cast<std::size_t>(a.port));
                if (!att) {
                    record(now, EventKind::Drop, n, a.port, a.frame, "no-link");
                    break;
                }
                const auto& link = links_[att->link];
                if (!link.up) {
                    record(now, EventKind::Drop, n, a.port, a.frame, "link-down");
                    break;
                }
                const auto peer = att->side_a ? link.spec.b_node : link.spec.a_node;
                const auto peer_port = att->side_a ? link.spec.b_port : link.spec.a_port;
                push(now + link.spec.latency, Arrival{att->link, peer, peer_port, std::move(a.frame)});
                break;
            }
            case Action::Type::Drop:
                record(now, EventKind::Drop, n, a.port, std::move(a.frame), std::move(a.note));
                break;
            case Action::Type::Observe:
                record(now, EventKind::AppObserve, n, a.port, std::move(a.frame), std::move(a.note));
                break;
            case Action::Type::Timer:
                push(a.at < now ? now : a.at, TimerFire{n, a.token});
                break;
            case Action::Type::LinkDown: {
                const auto& att = nodes_[n].ports.at(static_cast<std::size_t>(a.port));
                if (!att) break;
                auto& link = links_[att->link];
                if (!link.up) break;
                link.up = false;
                const auto peer = att->side_a ? link.spec.b_node : link.spec.a_node;
                const auto peer_port = att->side_a ? link.spec.b_port : link.spec.a_port;
                push(now, LinkDownNotice{peer, peer_port});
                break;
            }
        }
    }
}

void Simulator::run(SimTime end) {
    if (!started_) {
        started_ = true;
        for (std::size_t i = 0; i < nodes_.size(); ++i) push(SimTime{0}, Start{i});
    }
    while (!queue_.empty() && queue_.top().time <= end) {
        Event ev = queue_.top();
        queue_.pop();
        std::visit(
            [&](auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, Arrival>) {
                    if (!links_[p.link].up) {
                        record(ev.time, EventKind::Drop, p.node, p.port, std::move(p.frame), "link-down");
                        return;
                    }
                    record(ev.time, EventKind::Deliver, p.node, p.port, p.frame, {});
                    StepContext ctx(ev.time, nodes_[p.node].rng);
                    nodes_[p.node].node->on_frame(ctx, p.port, p.frame);
                    apply(p.node, ctx);
                } else if constexpr (std::is_same_v<T, TimerFire>) {
                    StepContext ctx(ev.time, nodes_[p.node].rng);
                    nodes_[p.node].node->on_timer(ctx, p.token);
                    apply(p.node, ctx);
                } else if constexpr (std::is_same_v<T, LinkDownNotice>) {
                    StepContext ctx(ev.time, nodes_[p.node].rng);
                    nodes_[p.node].node->on_link_down(ctx, p.port);
                    apply(p.node, ctx);
                } else {
                    StepContext ctx(ev.time, nodes_[p.node].rng);
                    nodes_[p.node].node->on_start(ctx);
                    apply(p.node, ctx);
                }
            },
            ev.payload);
    }
    for (auto& slot : nodes_) slot.node->on_finish(end);
}

}  // namespace sbcsim::net
