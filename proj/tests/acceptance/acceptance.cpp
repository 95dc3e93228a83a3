// End-to-end acceptance checks. One PASS/FAIL line per criterion; exit 1 on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "sbcsim/scenario/run.hpp"

using namespace sbcsim;
using namespace sbcsim::scenario;

namespace {

const std::string kDir = SBCSIM_SCENARIO_DIR;

Scenario load(const std::string& name) { return load_scenario(kDir + "/" + name + ".yaml"); }

Bytes read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return Bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Ipv4Addr ip(const char* s) { return *Ipv4Addr::parse(s); }

struct Failure {
    std::string why;
};

void require(bool ok, const std::string& why) {
    if (!ok) throw Failure{why};
}

// Returns a one-line detail on success; throws Failure otherwise.
using Criterion = std::function<std::string()>;

std::string exfil_email() {
    const auto s = load("exfil-email");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = execute(s);
    const double wall = seconds_since(t0);
    const auto* sched = r.run.world.gadgets.at("implant")->scheduler();
    require(sched != nullptr, "no exfil scheduler");
    const auto names = sched->delivered_names();
    require(names.size() == 10, "deliveries " + std::to_string(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i)
        require(names[i] == gadget::capture_name(i + 1), "out of order at " + names[i]);
    require(r.analysis.beacons.has_value(), "beacon detector not enabled");
    double best = 1e9;
    for (const auto& b : *r.analysis.beacons)
        if (b.src == ip("10.0.0.200") && b.dst == ip("10.0.0.66"))
            best = std::min(best, std::abs(b.period.seconds() - 60.0) / 60.0);
    require(best <= 0.01, "beacon period error " + std::to_string(best));
    require(wall < 1.0, "runtime " + std::to_string(wall) + " s");
    std::ostringstream os;
    os << "10 deliveries in order, period error " << best << ", " << wall << " s";
    return os.str();
}

std::string storm() {
    auto s = load("storm-5x");
    s.detectors.udp_storm = detect::StormConfig{};
    s.detectors.udp_storm->pps_threshold = 400;
    const auto t0 = std::chrono::steady_clock::now();
    const auto five = execute(s);
    const double wall = seconds_since(t0);
    const auto& a = *five.analysis.storms;
    require(a.size() == 1, "storm alerts " + std::to_string(a.size()));
    require(a[0].peak_pps == 500.0, "peak " + std::to_string(a[0].peak_pps));
    require(wall < 1.0, "runtime " + std::to_string(wall) + " s");

    auto one = load("storm-1x");
    one.detectors.udp_storm = s.detectors.udp_storm;
    const auto single = execute(one);
    require(single.analysis.storms->empty(), "single gadget alerted");
    std::ostringstream os;
    os << "1 alert at 500 pps, single gadget 0 alerts, " << wall << " s";
    return os.str();
}

std::string dns_redirect() {
    const Bytes counterfeit = read_file(kDir + "/fixtures/counterfeit.html");
    const auto attacker = ip("10.0.0.66");
    std::size_t hit = 0, control_hit = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto s = load("dns-redirect");
        s.seed = seed;
        const auto r = execute(s);
        const auto* victim = r.run.world.hosts.at("victim");
        bool ok = !victim->lookups.empty() && !victim->fetches.empty();
        for (const auto& l : victim->lookups) ok = ok && l.answer == attacker;
        for (const auto& f : victim->fetches) ok = ok && f.ok && f.body == counterfeit;
        hit += ok;

        auto c = load("dns-control");
        c.seed = seed;
        const auto rc = execute(c);
        for (const auto& l : rc.run.world.hosts.at("victim")->lookups) control_hit += l.answer == attacker;
    }
    require(hit == 20, "redirected " + std::to_string(hit) + "/20");
    require(control_hit == 0, "control redirected " + std::to_string(control_hit));
    return "20/20 redirected with counterfeit page, 0 without";
}

std::vector<std::pair<SimTime, Bytes>> observed(const net::EventTrace& t, const std::string& node) {
    std::vector<std::pair<SimTime, Bytes>> out;
    for (const auto& e : t.events) {
        if (e.kind != net::EventKind::AppObserve || e.node != node) continue;
        Bytes b(e.note.begin(), e.note.end());
        if (e.frame) b.insert(b.end(), e.frame->bytes.begin(), e.frame->bytes.end());
        out.emplace_back(e.time, std::move(b));
    }
    return out;
}

std::string passive() {
    const auto with = execute(load("passive-intercept"));
    const auto without = execute(load("passive-control"));
    const auto a = observed(with.run.trace, "victim");
    const auto b = observed(without.run.trace, "victim");
    require(!a.empty(), "victim observed nothing");
    require(a == b, "victim transcripts differ");

    std::size_t delivered = 0;
    for (const auto& e : with.run.trace.events)
        delivered += e.kind == net::EventKind::Deliver && e.node == "implant";
    const auto& cap = with.run.world.gadgets.at("implant")->capture();
    require(cap.total_records() == delivered,
            "captured " + std::to_string(cap.total_records()) + " vs delivered " + std::to_string(delivered));

    std::size_t records = 0;
    for (const auto& f : cap.closed()) {
        const auto back = pcap::read_pcap(f.serialize());
        require(back.size() == f.records.size(), f.name + " record count");
        for (std::size_t i = 0; i < back.size(); ++i) {
            require(back[i].data == f.records[i].bytes, f.name + " bytes");
            require(pcap::record_time(back[i]) == f.records[i].time, f.name + " time");
        }
        records += back.size();
    }
    require(records == delivered, "pcap records " + std::to_string(records));
    std::ostringstream os;
    os << a.size() << " identical victim observations, " << delivered << " frames captured and round-tripped";
    return os.str();
}

std::string carving() {
    const Bytes jpg = read_file(kDir + "/fixtures/planted.jpg");
    const Bytes png = read_file(kDir + "/fixtures/planted.png");
    require(jpg.size() == 4096 && png.size() == 8192, "fixture sizes");
    const auto s = load("image-carve");
    const auto r = execute(s);
    // Everything the gadget captured, in capture order.
    std::vector<detect::Observation> captured;
    for (const auto& f : r.run.world.gadgets.at("implant")->capture().closed())
        for (const auto& rec : f.records)
            captured.push_back(detect::Observation{rec.time, net::WireFrame::make(net::decode_frame(rec.bytes))});
    require(!captured.empty(), "nothing captured");
    DetectorSpec d;
    d.carve = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto obs = captured;
        std::mt19937_64 rng(seed);
        std::shuffle(obs.begin(), obs.end(), rng);
        const auto a = analyze(obs, d);
        std::size_t j = 0, p = 0;
        for (const auto& im : *a.images) {
            j += im.image.bytes == jpg;
            p += im.image.bytes == png;
        }
        require(j == 1 && p == 1, "seed " + std::to_string(seed) + ": jpeg " + std::to_string(j) + " png " +
                                      std::to_string(p));
    }
    return "4 KiB JPEG and 8 KiB PNG byte-identical over 20 shuffles";
}

std::string probe() {
    const auto promisc = ip("10.0.0.108");
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto s = load("probe-sweep");
        s.seed = seed;
        for (auto& h : s.hosts)
            for (auto& app : h.apps)
                if (auto* sw = std::get_if<SweepSpec>(&app)) {
                    std::mt19937_64 rng(seed);
                    std::shuffle(sw->config.targets.begin(), sw->config.targets.end(), rng);
                }
        // Reassign switch ports among the attached hosts.
        std::vector<int> ports;
        for (const auto& l : s.links) ports.push_back(l.b.port);
        std::mt19937_64 rng(seed + 1000);
        std::shuffle(ports.begin(), ports.end(), rng);
        for (std::size_t i = 0; i < s.links.size(); ++i) s.links[i].b.port = ports[i];
        const auto r = execute(s);
        const auto& v = r.run.world.sweeps.at("auditor")->verdicts();
        require(v.size() == 14, "verdicts " + std::to_string(v.size()));
        std::size_t p = 0, n = 0;
        for (const auto& x : v) {
            if (x.verdict == detect::Verdict::Promiscuous) {
                ++p;
                require(x.target_ip == promisc, "wrong host flagged");
            }
            n += x.verdict == detect::Verdict::Normal;
        }
        require(p == 1 && n == 13, "seed " + std::to_string(seed) + ": " + std::to_string(p) + " promiscuous, " +
                                       std::to_string(n) + " normal");
    }
    return "1 promiscuous, 13 normal over 50 shuffles";
}

std::string arp_mitm() {
    const auto s = load("arp-mitm");
    const auto r = execute(s);
    const auto gadget_mac = r.run.world.gadgets.at("implant")->config().own_mac;
    SimTime start = SimTime::from_seconds(0);
    for (const auto& a : s.gadgets[0].config.attacks)
        if (const auto* p = std::get_if<gadget::ArpPoison>(&a)) start = p->start;
    bool change = false, dup = false;
    for (const auto& a : *r.analysis.arp) {
        if (a.kind == detect::ArpAlertKind::BindingChange && a.first_seen >= start &&
            a.first_seen <= start + SimTime::from_seconds(1))
            change = true;
        if (a.kind == detect::ArpAlertKind::DuplicateClaim &&
            std::find(a.macs.begin(), a.macs.end(), gadget_mac) != a.macs.end())
            dup = true;
    }
    require(change, "no binding change within 1 s of the attack");
    require(dup, "no duplicate claim for the gadget MAC");
    const auto clean = execute(load("arp-clean"));
    require(clean.analysis.arp->empty(), "clean run alerted " + std::to_string(clean.analysis.arp->size()));
    return "binding change within 1 s, duplicate claim, clean run silent";
}

std::size_t violations(const RunOutcome& r) {
    std::size_t n = 0;
    for (const auto& [name, sw] : r.run.world.switches) n += sw->core().violations().size();
    return n;
}

std::string port_security() {
    const auto passive = execute(load("port-security-passive"));
    require(violations(passive) == 0, "passive gadget violations " + std::to_string(violations(passive)));

    auto s = load("port-security-active");
    const auto r = execute(s);
    const auto& core = r.run.world.switches.at("sw1")->core();
    require(core.is_shutdown(0), "port 0 not shut down");
    require(!core.violations().empty(), "no violation");
    const SimTime shut = core.violations().front().time;

    // Re-run to one ARP ttl past the shutdown and inspect the victim's cache then.
    const auto* victim_spec = &s.hosts[0];
    for (const auto& h : s.hosts)
        if (h.name == "victim") victim_spec = &h;
    const auto gw_ip = *victim_spec->gateway;
    MacAddr gw_mac;
    for (const auto& h : s.hosts)
        if (h.ip == gw_ip) gw_mac = h.mac;
    s.duration = shut + victim_spec->arp_ttl;
    const auto cut = run_simulation(s);
    const auto bound = cut.world.hosts.at("victim")->stack().arp().lookup(gw_ip, s.duration);
    require(bound.has_value(), "victim has no gateway binding");
    require(*bound == gw_mac, "victim still bound to " + bound->to_string());
    std::ostringstream os;
    os << "passive 0 violations, shutdown at " << format_duration(shut) << ", gateway binding restored";
    return os.str();
}

std::string determinism() {
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(kDir))
        if (e.path().extension() == ".yaml") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto s = load_scenario(f);
        const auto a = run_simulation(s).trace.serialize(s.name, s.seed);
        const auto b = run_simulation(s).trace.serialize(s.name, s.seed);
        require(a == b, f + " traces differ");
    }
    const auto s = load("storm-5x");
    const auto base = run_simulation(s);
    const auto p0 = base.world.gadgets.at("implant1")->stats().flood_ports;
    require(!p0.empty(), "no storm ports");
    for (int bit = 0; bit < 64; ++bit) {
        auto t = s;
        t.seed ^= std::uint64_t{1} << bit;
        const auto flipped = run_simulation(t);
        require(flipped.world.gadgets.at("implant1")->stats().flood_ports != p0,
                "storm ports unchanged by flipping seed bit " + std::to_string(bit));
    }
    return std::to_string(files.size()) + " scenarios byte-identical, every seed bit flip changes storm ports";
}

std::string pcap_format() {
    const std::string fx = FIXTURE_DIR;
    require(pcap::write_pcap({}) == read_file(fx + "/golden_empty.pcap"), "empty file differs");
    pcap::PcapRecord r;
    r.ts_sec = 1;
    r.ts_usec = 500000;
    r.data = {0x02, 0, 0, 0, 0, 0x02, 0x02, 0, 0, 0, 0, 0x01, 0x88, 0xb5};
    for (std::uint8_t i = 0; i < 46; ++i) r.data.push_back(i);
    require(pcap::write_pcap({r}) == read_file(fx + "/golden_one.pcap"), "one-record file differs");
    const auto le = pcap::read_pcap(read_file(fx + "/golden_one.pcap"));
    const auto be = pcap::read_pcap(read_file(fx + "/golden_one_swapped.pcap"));
    require(le == be && le.size() == 1 && le[0] == r, "byte orders disagree");
    return "golden files match, both byte orders parse identically";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, Criterion>> criteria = {
        {"exfil-email deliveries and beacon period", exfil_email},
        {"udp storm aggregate and alerting", storm},
        {"dns redirect", dns_redirect},
        {"passive transparency and capture", passive},
        {"image carving under shuffled reassembly", carving},
        {"promiscuous probe", probe},
        {"arp mitm detection", arp_mitm},
        {"port security", port_security},
        {"determinism", determinism},
        {"pcap format", pcap_format},
    };
    const auto t0 = std::chrono::steady_clock::now();
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, fn] = criteria[i];
        std::string line;
        bool ok = false;
        try {
            line = fn();
            ok = true;
        } catch (const Failure& f) {
            line = f.why;
        } catch (const std::exception& e) {
            line = std::string("error: ") + e.what();
        }
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << name << ": " << line << "\n";
    }
    const double wall = seconds_since(t0);
    std::cout << (wall < 60.0 ? "PASS" : "FAIL") << " suite time " << wall << " s\n";
    if (wall >= 60.0) ++failed;
    return failed == 0 ? 0 : 1;
}
