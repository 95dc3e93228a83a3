#include <doctest.h>

#include <cmath>

#include "sbcsim/gadget/gadget.hpp"
#include "sbcsim/net/dns.hpp"
#include "sbcsim/net/host.hpp"
#include "sbcsim/net/switch.hpp"

using namespace sbcsim;
using namespace sbcsim::gadget;
using namespace sbcsim::net;
using namespace sbcsim::time_literals;

namespace {

MacAddr mac(std::uint8_t last) { return MacAddr{{0x02, 0, 0, 0, 0, last}}; }
Ipv4Addr ip(std::uint8_t last) { return Ipv4Addr{{10, 0, 0, last}}; }

}  // namespace

TEST_CASE("capture windows agree with floor(t / interval) and include empty windows") {
    Rng rng(12);
    const SimDuration interval = 7_s;
    CaptureEngine eng(interval);
    std::vector<SimTime> times;
    SimTime t;
    for (int i = 0; i < 400; ++i) {
        // Occasional long silences leave whole windows empty.
        t += SimTime::from_micros(rng.uniform(0, 1) ? rng.uniform(0, 500'000) : rng.uniform(0, 20'000'000));
        times.push_back(t);
        eng.record(t, Direction::FromVictim, Bytes{static_cast<std::uint8_t>(i)});
    }
    std::vector<CaptureFile> files = eng.advance_to(t);
    for (auto& f : eng.finish()) files.push_back(std::move(f));

    const std::size_t windows = t.micros / interval.micros + 1;
    REQUIRE(files.size() == windows);
    std::vector<std::size_t> per(windows, 0);
    for (auto x : times) ++per[x.micros / interval.micros];
    for (std::size_t k = 0; k < windows; ++k) {
        CHECK(files[k].index == k + 1);
        CHECK(files[k].name == capture_name(k + 1));
        CHECK(files[k].window_start == SimTime::from_micros(k * interval.micros));
        REQUIRE(files[k].records.size() == per[k]);
        for (const auto& r : files[k].records) CHECK(r.time.micros / interval.micros == k);
    }
    CHECK(eng.total_records() == times.size());
}

TEST_CASE("advance_to hands over each closed file exactly once") {
    CaptureEngine eng(60_s);
    CHECK(eng.advance_to(59_s).empty());
    auto a = eng.advance_to(60_s);
    REQUIRE(a.size() == 1);
    CHECK(a[0].name == "capture-0001");
    eng.record(60_s, Direction::FromNetwork, Bytes{1});
    CHECK(eng.advance_to(60_s).empty());
    auto b = eng.advance_to(180_s);
    REQUIRE(b.size() == 2);
    CHECK(b[0].records.size() == 1);
    CHECK(b[1].records.empty());
    CHECK(eng.finish().empty());
}

TEST_CASE("capture files serialize as pcap") {
    CaptureFile f;
    f.records.push_back(CaptureRecord{1500_ms, Direction::FromVictim, Bytes(60, 7)});
    const auto recs = pcap::read_pcap(f.serialize());
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].ts_sec == 1);
    CHECK(recs[0].ts_usec == 500000);
}

TEST_CASE("flood tick k lands at start + floor(k * 1e6 / rate) microseconds") {
    UdpFlood f;
    f.start = 5_s;
    f.rate = 300;
    CHECK(flood_tick_time(f, 0) == 5_s);
    CHECK(flood_tick_time(f, 1) == 5_s + 3333_us);
    CHECK(flood_tick_time(f, 2) == 5_s + 6666_us);
    CHECK(flood_tick_time(f, 300) == 6_s);
}

TEST_CASE("poison frames claim the other party's IP with the gadget MAC") {
    ArpPoison p;
    p.victim_ip = ip(10);
    p.gateway_ip = ip(1);
    const auto f = arp_poison_frames(p, mac(0xc8), mac(10), mac(1));
    REQUIRE(f.size() == 2);
    CHECK(f[0].dst == mac(10));
    CHECK(f[0].arp()->sender_ip == ip(1));
    CHECK(f[0].arp()->sender_mac == mac(0xc8));
    CHECK(f[1].dst == mac(1));
    CHECK(f[1].arp()->sender_ip == ip(10));
    CHECK(f[1].arp()->op == ArpOp::Reply);
}

TEST_CASE("spoofed DNS answers impersonate the queried server") {
    DnsSpoof cfg;
    cfg.names["www.example.com"] = ip(66);
    DnsMessage q;
    q.id = 77;
    q.qname = "WWW.example.com";
    const auto query = make_udp_frame(mac(10), mac(53), ip(10), ip(53), UdpDatagram{50000, 53, encode_dns(q)});
    const auto r = dns_spoof_response(cfg, query);
    REQUIRE(r);
    CHECK(r->src == mac(53));
    CHECK(r->dst == mac(10));
    CHECK(r->ipv4()->src == ip(53));
    CHECK(r->ipv4()->udp()->dst_port == 50000);
    const auto d = decode_dns(r->ipv4()->udp()->payload);
    CHECK(d.id == 77);
    CHECK(d.is_response);
    REQUIRE(d.answers.size() == 1);
    CHECK(d.answers[0].address == ip(66));

    q.qname = "other.example.com";
    const auto other = make_udp_frame(mac(10), mac(53), ip(10), ip(53), UdpDatagram{50000, 53, encode_dns(q)});
    CHECK_FALSE(dns_spoof_response(cfg, other));
}

namespace {

struct Bench {
    Simulator sim{17};
    Gadget* gadget = nullptr;
    Host* victim = nullptr;
    Host* server = nullptr;
};

// victim -- gadget -- switch -- server
std::unique_ptr<Bench> bench(GadgetConfig gc) {
    auto b = std::make_unique<Bench>();
    HostConfig v;
    v.name = "victim";
    v.stack.mac = mac(10);
    v.stack.ip = ip(10);
    HostConfig s;
    s.name = "server";
    s.stack.mac = mac(80);
    s.stack.ip = ip(80);
    auto vi = b->sim.add_node(std::make_unique<Host>(v));
    auto si = b->sim.add_node(std::make_unique<Host>(s));
    auto gi = b->sim.add_node(std::make_unique<Gadget>(std::move(gc)));
    auto sw = b->sim.add_node(std::make_unique<Switch>("sw", 2));
    b->sim.connect(LinkSpec{vi, 0, gi, kVictimPort, 50_us});
    b->sim.connect(LinkSpec{gi, kNetworkPort, sw, 0, 50_us});
    b->sim.connect(LinkSpec{si, 0, sw, 1, 100_us});
    b->gadget = b->sim.get<Gadget>("g");
    b->victim = b->sim.get<Host>("victim");
    b->server = b->sim.get<Host>("server");
    b->server->add_app(std::make_unique<EchoServerApp>(7));
    return b;
}

}  // namespace

TEST_CASE("a passive gadget forwards and captures every frame unchanged") {
    GadgetConfig gc;
    gc.name = "g";
    auto b = bench(gc);
    b->victim->schedule(1_s, UdpSend{ip(80), 7, to_bytes("hi")});
    b->sim.run(5_s);
    REQUIRE(b->victim->udp_received.size() == 1);
    CHECK(b->victim->udp_received[0].payload == to_bytes("hi"));
    const auto& st = b->gadget->stats();
    // Two ARP exchanges (the server does not learn from requests), datagram, echo.
    CHECK(st.frames_captured == 6);
    CHECK(st.frames_forwarded == st.frames_captured);
    CHECK(b->gadget->capture().total_records() == 6);
    for (const auto* ev : b->sim.trace().originated()) CHECK(ev->node != "g");
}

TEST_CASE("flood destination ports pass a chi-square uniformity test") {
    GadgetConfig gc;
    gc.name = "g";
    gc.mode = Mode::Active;
    gc.own_mac = mac(0xc8);
    gc.own_ip = ip(200);
    UdpFlood f;
    f.target = ip(80);
    f.rate = 1000;
    f.port_lo = 1000;
    f.port_hi = 2999;
    f.start = 2_s;
    f.stop = 22_s;
    gc.attacks.push_back(f);
    auto b = bench(gc);
    b->sim.run(30_s);
    const auto& ports = b->gadget->stats().flood_ports;
    REQUIRE(ports.size() == 20000);
    constexpr int kBins = 20;
    std::vector<double> counts(kBins, 0);
    for (auto p : ports) {
        REQUIRE(p >= 1000);
        REQUIRE(p <= 2999);
        counts[(p - 1000) / 100] += 1;
    }
    double chi2 = 0;
    const double expected = static_cast<double>(ports.size()) / kBins;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    // 19 degrees of freedom; 43.82 is the 0.999 quantile.
    CHECK(chi2 < 43.82);
}
