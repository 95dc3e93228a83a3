#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "sbcsim/net/dns.hpp"
#include "sbcsim/net/host.hpp"
#include "sbcsim/net/switch.hpp"

using namespace sbcsim;
using namespace sbcsim::net;
using namespace sbcsim::time_literals;

namespace {

MacAddr mac(std::uint8_t last) { return MacAddr{{0x02, 0, 0, 0, 0, last}}; }
Ipv4Addr ip(std::uint8_t last) { return Ipv4Addr{{10, 0, 0, last}}; }

// Reference frames produced by scapy 2.5 (Ether()/IP()/UDP() and a TCP SYN), so the
// checksums below come from an independent implementation.
constexpr const char* kScapyUdp =
    "02000000000102000000000208004500002500000000401166c60a0000020a0000019c4000070011e25070696e672d30303031";
constexpr const char* kScapyTcpSyn =
    "02000000002002000000000508004500002800000000400666b80a0000050a000014c0000050fffffff0000000005002ffffdb880000";

}  // namespace

TEST_CASE("internet checksum matches the RFC 1071 worked example") {
    const Bytes data = from_hex("0001f203f4f5f6f7");
    // Ones'-complement sum is 0xddf2; the checksum is its complement.
    CHECK(internet_checksum(data) == static_cast<std::uint16_t>(~0xddf2));
}

TEST_CASE("UDP frame encoding reproduces an independently built frame") {
    const auto f = make_udp_frame(mac(2), mac(1), ip(2), ip(1), UdpDatagram{40000, 7, to_bytes("ping-0001")});
    CHECK(to_hex(encode_frame(f)) == kScapyUdp);
    CHECK(decode_frame(from_hex(kScapyUdp)) == f);
}

TEST_CASE("TCP SYN encoding reproduces an independently built frame") {
    TcpSegment syn;
    syn.src_port = 49152;
    syn.dst_port = 80;
    syn.seq = 0xfffffff0u;
    syn.flags = tcp_flags::SYN;
    const auto f = make_tcp_frame(mac(5), mac(0x20), ip(5), ip(20), syn);
    CHECK(to_hex(encode_frame(f)) == kScapyTcpSyn);
    CHECK(decode_frame(from_hex(kScapyTcpSyn)) == f);
}

TEST_CASE("ARP frames round-trip") {
    ArpPacket a{ArpOp::Reply, mac(1), ip(1), mac(10), ip(10)};
    const auto f = make_arp_frame(mac(1), mac(10), a);
    const auto bytes = encode_frame(f);
    CHECK(bytes.size() == kEthernetHeaderLen + kArpLen);
    CHECK(decode_frame(bytes) == f);
}

TEST_CASE("decoder rejects truncation and bad checksums") {
    const Bytes good = from_hex(kScapyUdp);
    for (std::size_t n = 0; n < good.size(); ++n) {
        Bytes cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(n));
        CHECK_THROWS_AS(decode_frame(cut), DecodeError);
    }
    Bytes bad = good;
    bad[bad.size() - 1] ^= 0x01;  // payload change invalidates the UDP checksum
    CHECK_THROWS_AS(decode_frame(bad), DecodeError);
}

TEST_CASE("decoder is strict: anything accepted re-encodes byte-identically") {
    Rng rng(42);
    const std::vector<Bytes> seeds = {from_hex(kScapyUdp), from_hex(kScapyTcpSyn),
                                      encode_frame(make_arp_frame(mac(1), mac(2), ArpPacket{}))};
    std::size_t accepted = 0;
    for (int i = 0; i < 20000; ++i) {
        Bytes b = seeds[rng.uniform(0, seeds.size() - 1)];
        const auto flips = rng.uniform(1, 3);
        for (std::uint64_t k = 0; k < flips; ++k) b[rng.uniform(0, b.size() - 1)] = static_cast<std::uint8_t>(rng.next());
        if (rng.uniform(0, 3) == 0) b.resize(rng.uniform(0, b.size()));
        try {
            const auto f = decode_frame(b);
            ++accepted;
            REQUIRE(encode_frame(f) == b);
        } catch (const DecodeError&) {
        }
    }
    CHECK(accepted > 0);
}

TEST_CASE("DNS messages round-trip and compression pointers decode") {
    DnsMessage q;
    q.id = 0x1234;
    q.qname = "www.example.com";
    CHECK(decode_dns(encode_dns(q)) == q);
    auto r = make_dns_response(q, {DnsAnswer{"www.example.com", ip(80), 300}});
    CHECK(decode_dns(encode_dns(r)) == r);

    // Header, question, then an answer whose name is a pointer to offset 12.
    Bytes wire = from_hex("12348180000100010000000003777777076578616d706c6503636f6d0000010001");
    const Bytes answer = from_hex("c00c000100010000012c00040a000050");
    wire.insert(wire.end(), answer.begin(), answer.end());
    const auto d = decode_dns(wire);
    REQUIRE(d.answers.size() == 1);
    CHECK(d.answers[0].name == "www.example.com");
    CHECK(d.answers[0].address == ip(80));
    CHECK(dns_name_equal("WWW.Example.com.", "www.example.com"));
}

TEST_CASE("ARP cache agrees with a brute-force expiry oracle") {
    Rng rng(7);
    const SimDuration ttl = 5_s;
    ArpCache cache(ttl);
    std::map<Ipv4Addr, std::pair<MacAddr, SimTime>> oracle;
    SimTime now;
    for (int i = 0; i < 5000; ++i) {
        now += SimTime::from_micros(rng.uniform(0, 400'000));
        const auto a = ip(static_cast<std::uint8_t>(rng.uniform(1, 8)));
        if (rng.uniform(0, 1)) {
            const auto m = mac(static_cast<std::uint8_t>(rng.uniform(1, 4)));
            cache.learn(a, m, now);
            oracle[a] = {m, now};
        }
        std::optional<MacAddr> want;
        if (auto it = oracle.find(a); it != oracle.end() && now - it->second.second < ttl) want = it->second.first;
        REQUIRE(cache.lookup(a, now) == want);
    }
}

TEST_CASE("switch forwarding agrees with a brute-force learning-bridge oracle") {
    Rng rng(99);
    const int ports = 6;
    SwitchCore sw(ports);
    std::map<MacAddr, int> table;
    const std::vector<MacAddr> macs = {mac(1), mac(2), mac(3), mac(4), mac(5), MacAddr::broadcast(),
                                       MacAddr{{0x01, 0x00, 0x5e, 0, 0, 1}}};
    for (int i = 0; i < 5000; ++i) {
        EthernetFrame f;
        f.src = macs[rng.uniform(0, 4)];
        f.dst = macs[rng.uniform(0, macs.size() - 1)];
        const int in = static_cast<int>(rng.uniform(0, ports - 1));
        const auto step = sw.step(f, in, SimTime::from_micros(static_cast<std::uint64_t>(i)));
        table[f.src] = in;
        std::vector<int> want;
        auto it = table.find(f.dst);
        if (!f.dst.is_group() && it != table.end()) {
            if (it->second != in) want.push_back(it->second);
        } else {
            for (int p = 0; p < ports; ++p)
                if (p != in) want.push_back(p);
        }
        REQUIRE(step.out_ports == want);
    }
}

TEST_CASE("sticky port security admits the first MAC and shuts on the second") {
    SwitchCore sw(4);
    sw.set_policy(1, PortPolicy{1, ViolationAction::Shutdown, true});
    EthernetFrame f;
    f.dst = MacAddr::broadcast();
    f.src = mac(1);
    CHECK_FALSE(sw.step(f, 1, 1_s).violation);
    CHECK_FALSE(sw.step(f, 1, 2_s).violation);
    f.src = mac(2);
    auto s = sw.step(f, 1, 3_s);
    REQUIRE(s.violation);
    CHECK(s.violation->mac == mac(2));
    CHECK(sw.is_shutdown(1));
    f.src = mac(1);
    CHECK(sw.step(f, 1, 4_s).dropped == std::optional<std::string>("port-shutdown"));
    CHECK(sw.violations().size() == 1);

    SwitchCore alert(2);
    alert.set_policy(0, PortPolicy{1, ViolationAction::Alert, true});
    f.src = mac(1);
    alert.step(f, 0, 1_s);
    f.src = mac(2);
    auto a = alert.step(f, 0, 2_s);
    CHECK(a.violation);
    CHECK_FALSE(a.dropped);
    CHECK_FALSE(alert.is_shutdown(0));
}

TEST_CASE("parse_duration accepts the documented units") {
    CHECK(parse_duration("250ms") == 250_ms);
    CHECK(parse_duration("1.5s") == 1500_ms);
    CHECK(parse_duration("100us") == 100_us);
    CHECK(parse_duration("2m") == 120_s);
    CHECK(parse_duration("3") == 3_s);
    CHECK_THROWS_AS(parse_duration("fast"), std::invalid_argument);
    CHECK_THROWS_AS(parse_duration("-1s"), std::invalid_argument);
}

TEST_CASE("derived RNG streams are reproducible and label-specific") {
    CHECK(Rng::derive(1, "a") == Rng::derive(1, "a"));
    CHECK(Rng::derive(1, "a") != Rng::derive(1, "b"));
    CHECK(Rng::derive(1, "a") != Rng::derive(3, "a"));
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.uniform(10, 20);
        REQUIRE(v >= 10);
        REQUIRE(v <= 20);
        const double u = r.unit();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

namespace {

// Sends one frame at a scheduled time and records every arrival.
class Probe : public Node {
public:
    Probe(std::string name, std::vector<SimTime> sends) : Node(std::move(name)), sends_(std::move(sends)) {}
    int port_count() const override { return 1; }
    void on_start(StepContext& ctx) override {
        for (std::size_t i = 0; i < sends_.size(); ++i) ctx.set_timer(sends_[i], i);
    }
    void on_timer(StepContext& ctx, std::uint64_t token) override {
        EthernetFrame f;
        f.src = mac(static_cast<std::uint8_t>(0x10 + token));
        f.dst = MacAddr::broadcast();
        f.ethertype = 0x88b5;
        f.payload = Bytes(46, static_cast<std::uint8_t>(token));
        ctx.emit(0, f);
    }
    void on_frame(StepContext& ctx, int, const FrameRef&) override { arrivals.push_back(ctx.now()); }
    std::vector<SimTime> arrivals;

private:
    std::vector<SimTime> sends_;
};

}  // namespace

TEST_CASE("frames cross a switch in two link latencies and events at the end are processed") {
    Simulator sim(1);
    auto a = sim.add_node(std::make_unique<Probe>("a", std::vector<SimTime>{1_s, 2_s}));
    auto b = sim.add_node(std::make_unique<Probe>("b", std::vector<SimTime>{}));
    auto sw = sim.add_node(std::make_unique<Switch>("sw", 2));
    sim.connect(LinkSpec{a, 0, sw, 0, 100_us});
    sim.connect(LinkSpec{sw, 1, b, 0, 100_us});
    sim.run(2_s + 200_us);
    auto* pb = sim.get<Probe>("b");
    REQUIRE(pb->arrivals.size() == 2);
    CHECK(pb->arrivals[0] == 1_s + 200_us);
    CHECK(pb->arrivals[1] == 2_s + 200_us);

    const auto& ev = sim.trace().events;
    for (std::size_t i = 1; i < ev.size(); ++i) {
        REQUIRE(ev[i - 1].time <= ev[i].time);
        REQUIRE(ev[i - 1].seq < ev[i].seq);
    }
    CHECK(sim.trace().originated().size() == 2);
}

TEST_CASE("simulations with the same seed produce identical traces") {
    auto once = [](std::uint64_t seed) {
        Simulator sim(seed);
        HostConfig hc;
        hc.name = "client";
        hc.stack.mac = mac(10);
        hc.stack.ip = ip(10);
        hc.dns_server = ip(53);
        auto client = std::make_unique<Host>(hc);
        client->schedule(1_s, DnsLookup{"www.example.com"});
        client->schedule(2_s, HttpGet{"www.example.com", "/", 80});
        HostConfig sc;
        sc.name = "server";
        sc.stack.mac = mac(53);
        sc.stack.ip = ip(53);
        auto server = std::make_unique<Host>(sc);
        server->add_app(std::make_unique<DnsServerApp>(std::map<std::string, Ipv4Addr>{{"www.example.com", ip(53)}}));
        server->add_app(
            std::make_unique<HttpServerApp>(80, std::map<std::string, Bytes>{{"/", to_bytes("hello world")}}));
        auto c = sim.add_node(std::move(client));
        auto s = sim.add_node(std::move(server));
        sim.connect(LinkSpec{c, 0, s, 0, 100_us});
        sim.run(10_s);
        auto* h = sim.get<Host>("client");
        REQUIRE(h->lookups.size() == 2);
        CHECK(h->lookups[0].answer == ip(53));
        REQUIRE(h->fetches.size() == 1);
        CHECK(h->fetches[0].ok);
        CHECK(h->fetches[0].body == to_bytes("hello world"));
        return sim.trace().serialize("t", seed);
    };
    CHECK(once(1) == once(1));
    CHECK(once(1) != once(2));  // DNS ids are drawn from the node's stream
}

TEST_CASE("HTTP helpers frame responses") {
    auto r = http_response(200, to_bytes("abc"));
    auto p = parse_http_response(r);
    REQUIRE(p);
    CHECK(p->first == 200);
    CHECK(p->second == to_bytes("abc"));
    CHECK_FALSE(parse_http_response(to_bytes("HTTP/1.0 200 OK\r\n")));
}
