#include "sbcsim/net/host.hpp"

#include <algorithm>
#include <string_view>

namespace sbcsim::net {

namespace {
constexpr SimDuration kDnsTimeout = 2_s;
constexpr std::string_view kHeaderEnd = "\r\n\r\n";

std::optional<std::size_t> find_header_end(const Bytes& raw) {
    auto it = std::search(raw.begin(), raw.end(), kHeaderEnd.begin(), kHeaderEnd.end());
    if (it == raw.end()) return std::nullopt;
    return static_cast<std::size_t>(it - raw.begin());
}
}  // namespace

Host::Host(HostConfig cfg)
    : Node(cfg.name),
      cfg_(std::move(cfg)),
      stack_(cfg_.stack, timers_, [this](StepContext& ctx, FrameRef f) { transmit(ctx, std::move(f)); }) {}

bool Host::addressed_to_me(const MacAddr& dst) const {
    if (dst == cfg_.stack.mac || dst.is_broadcast()) return true;
    return std::find(cfg_.multicast.begin(), cfg_.multicast.end(), dst) != cfg_.multicast.end();
}

bool Host::nic_accepts(const MacAddr& dst) const {
    return cfg_.nic_mode == NicMode::Promiscuous || addressed_to_me(dst);
}

void Host::on_start(StepContext& ctx) {
    for (const auto& [ip, mac] : cfg_.arp_preload) stack_.arp().learn(ip, mac, ctx.now());
    for (auto& app : apps_) app->start(*this, ctx);
    for (auto& [at, action] : script_)
        timers_.schedule(ctx, at, [this, a = action](StepContext& c) { run_action(c, a); });
}

void Host::on_frame(StepContext& ctx, int port, const FrameRef& frame) {
    const auto& dst = frame->frame.dst;
    if (!nic_accepts(dst)) {
        ctx.drop(port, frame, "nic-filter");
        return;
    }
    ctx.observe(port, frame, describe(frame->frame));
    stack_.receive(ctx, port, frame, addressed_to_me(dst));
}

void Host::resolve(StepContext& ctx, const std::string& name,
                   std::function<void(StepContext&, std::optional<Ipv4Addr>)> done) {
    if (auto literal = Ipv4Addr::parse(name)) {
        done(ctx, literal);
        return;
    }
    const auto started = ctx.now();
    if (!cfg_.dns_server) {
        lookups.push_back({started, started, name, std::nullopt});
        done(ctx, std::nullopt);
        return;
    }
    DnsMessage q;
    q.id = static_cast<std::uint16_t>(ctx.rng().next());
    q.qname = name;
    const auto port = stack_.ephemeral_port();
    const std::size_t slot = lookups.size();
    lookups.push_back({started, started, name, std::nullopt});
    auto settled = std::make_shared<bool>(false);
    auto cb = std::make_shared<decltype(done)>(std::move(done));

    // First response with a matching id wins; the port closes behind it.
    stack_.bind_udp(port, [this, id = q.id, port, slot, settled, cb](StepContext& c, const Ipv4Packet&,
                                                                   const UdpDatagram& udp) {
        DnsMessage resp;
        try {
            resp = decode_dns(udp.payload);
        } catch (const DnsError&) {
            return;
        }
        if (!resp.is_response || resp.id != id || *settled) return;
        *settled = true;
        stack_.unbind_udp(port);
        std::optional<Ipv4Addr> answer;
        if (!resp.answers.empty()) answer = resp.answers.front().address;
        lookups[slot].finished = c.now();
        lookups[slot].answer = answer;
        (*cb)(c, answer);
    });
    timers_.schedule(ctx, ctx.now() + kDnsTimeout, [this, port, slot, settled, cb](StepContext& c) {
        if (*settled) return;
        *settled = true;
        stack_.unbind_udp(port);
        lookups[slot].finished = c.now();
        (*cb)(c, std::nullopt);
    });
    stack_.send_udp(ctx, *cfg_.dns_server, port, kDnsPort, encode_dns(q));
}

void Host::run_action(StepContext& ctx, const TrafficAction& action) {
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, DnsLookup>) {
                resolve(ctx, a.name, [](StepContext&, std::optional<Ipv4Addr>) {});
            } else if constexpr (std::is_same_v<T, HttpGet>) {
                const std::size_t slot = fetches.size();
                HttpFetchRecord rec;
                rec.started = rec.finished = ctx.now();
                rec.host = a.host;
                rec.path = a.path;
                fetches.push_back(std::move(rec));
                resolve(ctx, a.host, [this, slot, a](StepContext& c, std::optional<Ipv4Addr> ip) {
                    auto& rec = fetches[slot];
                    rec.server = ip;
                    if (!ip) {
                        rec.finished = c.now();
                        return;
                    }
                    stack_.tcp_request(c, *ip, a.port, http_request(a.host, a.path), false,
                                       [this, slot](StepContext& c2, bool ok, const Bytes& raw) {
                                           auto& r = fetches[slot];
                                           r.finished = c2.now();
                                           if (!ok) return;
                                           if (auto parsed = parse_http_response(raw)) {
                                               r.ok = true;
                                               r.status = parsed->first;
                                               r.body = std::move(parsed->second);
                                           }
                                       });
                });
            } else {
                const auto sport = stack_.ephemeral_port();
                stack_.bind_udp(sport, [this](StepContext& c, const Ipv4Packet& ip, const UdpDatagram& udp) {
                    udp_received.push_back(UdpRecord{c.now(), ip.src, udp.src_port, udp.dst_port, udp.payload});
                });
                stack_.send_udp(ctx, a.dst, sport, a.port, a.payload);
            }
        },
        action);
}

void DnsServerApp::start(Host& host, StepContext&) {
    host.stack().bind_udp(kDnsPort, [this, &host](StepContext& ctx, const Ipv4Packet& ip, const UdpDatagram& udp) {
        DnsMessage q;
        try {
            q = decode_dns(udp.payload);
        } catch (const DnsError&) {
            return;
        }
        if (q.is_response) return;
        std::vector<DnsAnswer> answers;
        for (const auto& [name, addr] : zone_)
            if (dns_name_equal(name, q.qname)) answers.push_back(DnsAnswer{q.qname, addr, 300});
        ++answered_;
        host.stack().send_udp(ctx, ip.src, kDnsPort, udp.src_port, encode_dns(make_dns_response(q, answers)));
    });
}

void HttpServerApp::start(Host& host, StepContext&) {
    host.stack().listen_tcp(port_, [this](StepContext&, Ipv4Addr, const Bytes& req, bool) -> std::optional<Bytes> {
        if (!find_header_end(req)) return std::nullopt;
        // "GET <path> HTTP/1.0"
        std::string line(req.begin(), std::find(req.begin(), req.end(), '\r'));
        std::string path = "/";
        if (auto sp1 = line.find(' '); sp1 != std::string::npos) {
            auto sp2 = line.find(' ', sp1 + 1);
            path = line.substr(sp1 + 1, sp2 == std::string::npos ? std::string::npos : sp2 - sp1 - 1);
        }
        ++served_;
        auto it = pages_.find(path);
        if (it == pages_.end()) return http_response(404, to_bytes("not found"));
        return http_response(200, it->second);
    });
}

void EchoServerApp::start(Host& host, StepContext&) {
    host.stack().bind_udp(port_, [&host, port = port_](StepContext& ctx, const Ipv4Packet& ip,
                                                       const UdpDatagram& udp) {
        host.stack().send_udp(ctx, ip.src, port, udp.src_port, udp.payload);
    });
}

void SinkServerApp::start(Host& host, StepContext&) {
    host.stack().listen_tcp(port_, [&host](StepContext& ctx, Ipv4Addr peer, const Bytes& data,
                                           bool peer_closed) -> std::optional<Bytes> {
        if (!peer_closed) return std::nullopt;
        host.sink_messages.push_back(SinkMessage{ctx.now(), peer, data});
        return Bytes{};
    });
}

Bytes http_request(const std::string& host, const std::string& path) {
    return to_bytes("GET " + path + " HTTP/1.0\r\nHost: " + host + "\r\n\r\n");
}

Bytes http_response(int status, const Bytes& body) {
    std::string head = "HTTP/1.0 " + std::to_string(status) + (status == 200 ? " OK" : " Not Found") +
                       "\r\nContent-Length: " + std::to_string(body.size()) + "\r\n\r\n";
    Bytes out = to_bytes(head);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

std::optional<std::pair<int, Bytes>> parse_http_response(const Bytes& raw) {
    auto end = find_header_end(raw);
    if (!end) return std::nullopt;
    std::string head(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(*end));
    if (head.rfind("HTTP/", 0) != 0) return std::nullopt;
    auto sp = head.find(' ');
    if (sp == std::string::npos) return std::nullopt;
    int status = std::atoi(head.c_str() + sp + 1);
    Bytes body(raw.begin() + static_cast<std::ptrdiff_t>(*end + kHeaderEnd.size()), raw.end());
    return std::make_pair(status, std::move(body));
}

}  // namespace sbcsim::net
