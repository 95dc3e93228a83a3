#include "sbcsim/scenario/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace sbcsim::scenario {

using nlohmann::json;

Analysis analyze(const std::vector<detect::Observation>& obs, const DetectorSpec& d) {
    Analysis a;
    if (d.arp_watch) a.arp = detect::arp_watch(obs, *d.arp_watch);
    if (d.beacon) a.beacons = detect::beacon_detect(detect::derive_flows(obs), *d.beacon);
    if (d.udp_storm) a.storms = detect::udp_storm_detect(obs, *d.udp_storm);
    if (d.carve) {
        std::vector<streams::FrameSample> samples;
        samples.reserve(obs.size());
        for (const auto& o : obs) samples.push_back({o.time, ByteView(o.frame->bytes)});
        a.images = streams::carve_flows(streams::extract_tcp_flows(samples));
    }
    return a;
}

namespace {

std::string ts(SimTime t) { return format_duration(t); }

json macs_json(const std::vector<MacAddr>& v) {
    json out = json::array();
    for (const auto& m : v) out.push_back(m.to_string());
    return out;
}

json ips_json(const std::vector<Ipv4Addr>& v) {
    json out = json::array();
    for (const auto& m : v) out.push_back(m.to_string());
    return out;
}

}  // namespace

json to_json(const Analysis& a) {
    json out = json::object();
    if (a.arp) {
        json list = json::array();
        for (const auto& al : *a.arp)
            list.push_back({{"kind", std::string(detect::to_string(al.kind))},
                            {"ip", al.ip.to_string()},
                            {"macs", macs_json(al.macs)},
                            {"ips", ips_json(al.ips)},
                            {"first_seen", ts(al.first_seen)},
                            {"last_seen", ts(al.last_seen)},
                            {"count", al.count}});
        out["arp_watch"] = list;
    }
    if (a.beacons) {
        json list = json::array();
        for (const auto& b : *a.beacons)
            list.push_back({{"src", b.src.to_string()},
                            {"dst", b.dst.to_string()},
                            {"period_s", b.period.seconds()},
                            {"confidence", b.confidence},
                            {"events", b.events},
                            {"relative_mad", b.relative_mad}});
        out["beacon"] = list;
    }
    if (a.storms) {
        json list = json::array();
        for (const auto& s : *a.storms) {
            json top = json::array();
            for (const auto& [ip, n] : s.top_sources) top.push_back({{"ip", ip.to_string()}, {"packets", n}});
            list.push_back({{"first_seen", ts(s.first_seen)},
                            {"last_seen", ts(s.last_seen)},
                            {"peak_pps", s.peak_pps},
                            {"peak_distinct_ports", s.peak_distinct_ports},
                            {"packets", s.packets},
                            {"top_sources", top}});
        }
        out["udp_storm"] = list;
    }
    if (a.images) {
        json list = json::array();
        for (const auto& im : *a.images)
            list.push_back({{"file", im.file_name()},
                            {"flow", im.key.to_string()},
                            {"offset", im.image.offset},
                            {"size", im.image.bytes.size()}});
        out["carve"] = list;
    }
    return out;
}

bool RunOutcome::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

namespace {

template <typename T>
std::string str(const T& v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

const gadget::Gadget* exfil_gadget(const Scenario& s, const World& w) {
    if (!s.exfil) return nullptr;
    for (const auto& [name, g] : w.gadgets)
        if (g->scheduler()) return g;
    return nullptr;
}

}  // namespace

std::vector<Check> check_expectations(const Scenario& s, const RunResult& run, const Analysis& a) {
    std::vector<Check> out;
    const auto& e = s.expect;
    const auto& w = run.world;
    auto add = [&](std::string name, bool pass, std::string detail) {
        out.push_back(Check{std::move(name), pass, std::move(detail)});
    };
    auto count_check = [&](const std::string& name, std::size_t want, std::size_t got) {
        add(name, want == got, "expected " + std::to_string(want) + ", got " + std::to_string(got));
    };
    auto missing = [&](const std::string& name, const std::string& what) { add(name, false, what + " not enabled"); };

    if (e.deliveries) {
        std::vector<std::string> names;
        if (const auto* g = exfil_gadget(s, w)) names = g->scheduler()->delivered_names();
        bool ordered = true;
        for (std::size_t i = 0; i < names.size(); ++i) ordered = ordered && names[i] == gadget::capture_name(i + 1);
        add("deliveries", names.size() == *e.deliveries && ordered,
            "expected " + std::to_string(*e.deliveries) + " in order, got " + std::to_string(names.size()) +
                (ordered ? "" : " (out of order)"));
    }
    if (e.beacon_period) {
        if (!a.beacons) {
            missing("beacon_period", "beacon detector");
        } else {
            const double want = e.beacon_period->seconds();
            std::optional<double> best;
            for (const auto& b : *a.beacons) {
                const double err = std::abs(b.period.seconds() - want) / want;
                if (!best || err < *best) best = err;
            }
            add("beacon_period", best && *best <= 0.01,
                best ? "relative error " + str(*best) : std::string("no beacon found"));
        }
    }
    if (e.storm_alerts) {
        if (!a.storms) missing("storm_alerts", "udp_storm detector");
        else count_check("storm_alerts", *e.storm_alerts, a.storms->size());
    }
    if (e.storm_peak_pps) {
        double peak = 0;
        if (a.storms)
            for (const auto& st : *a.storms) peak = std::max(peak, st.peak_pps);
        add("storm_peak_pps", a.storms && std::abs(peak - *e.storm_peak_pps) < 1e-9,
            "expected " + str(*e.storm_peak_pps) + ", got " + str(peak));
    }
    auto arp_has = [&](detect::ArpAlertKind k) {
        return a.arp && std::any_of(a.arp->begin(), a.arp->end(), [k](const auto& x) { return x.kind == k; });
    };
    if (e.arp_alerts) {
        if (!a.arp) missing("arp_alerts", "arp_watch detector");
        else count_check("arp_alerts", *e.arp_alerts, a.arp->size());
    }
    if (e.binding_change) {
        const bool got = arp_has(detect::ArpAlertKind::BindingChange);
        add("binding_change", a.arp && got == *e.binding_change, got ? "present" : "absent");
    }
    if (e.duplicate_claim) {
        const bool got = arp_has(detect::ArpAlertKind::DuplicateClaim);
        add("duplicate_claim", a.arp && got == *e.duplicate_claim, got ? "present" : "absent");
    }
    if (e.spoof_hits_min) {
        std::size_t hits = 0;
        for (const auto& [n, g] : w.gadgets) hits += g->stats().spoof_hits.size();
        add("spoof_hits_min", hits >= *e.spoof_hits_min,
            "expected at least " + std::to_string(*e.spoof_hits_min) + ", got " + std::to_string(hits));
    }
    if (e.port_violations) {
        std::size_t v = 0;
        for (const auto& [n, sw] : w.switches) v += sw->core().violations().size();
        count_check("port_violations", *e.port_violations, v);
    }
    if (e.port_shutdown) {
        bool any = false;
        for (const auto& [n, sw] : w.switches)
            for (int p = 0; p < sw->core().port_count(); ++p) any = any || sw->core().is_shutdown(p);
        add("port_shutdown", any == *e.port_shutdown, any ? "a port is shut down" : "no port shut down");
    }
    if (e.promiscuous || e.normal_verdicts) {
        std::vector<Ipv4Addr> promisc;
        std::size_t normal = 0;
        for (const auto& [n, sw] : w.sweeps)
            for (const auto& v : sw->verdicts()) {
                if (v.verdict == detect::Verdict::Promiscuous) promisc.push_back(v.target_ip);
                if (v.verdict == detect::Verdict::Normal) ++normal;
            }
        if (e.promiscuous) {
            auto want = *e.promiscuous;
            std::sort(want.begin(), want.end());
            std::sort(promisc.begin(), promisc.end());
            std::string got;
            for (const auto& ip : promisc) got += (got.empty() ? "" : ",") + ip.to_string();
            add("promiscuous", want == promisc, "got [" + got + "]");
        }
        if (e.normal_verdicts) count_check("normal_verdicts", *e.normal_verdicts, normal);
    }
    if (e.carved_images) {
        if (!a.images) missing("carved_images", "carve detector");
        else count_check("carved_images", *e.carved_images, a.images->size());
    }
    if (e.fetch) {
        const auto* h = w.hosts.at(e.fetch->host);
        const net::HttpFetchRecord* last = nullptr;
        for (const auto& f : h->fetches)
            if (f.path == e.fetch->path) last = &f;
        const bool ok = last && last->ok && last->status == 200 && last->body == e.fetch->body;
        add("fetch", ok,
            !last ? "no fetch of " + e.fetch->path
                  : "status " + std::to_string(last->status) + ", " + std::to_string(last->body.size()) + " bytes" +
                        (ok ? " (match)" : " (mismatch)"));
    }
    if (e.resolves) {
        const auto* h = w.hosts.at(e.resolves->host);
        std::size_t total = 0, hit = 0;
        for (const auto& l : h->lookups) {
            if (!net::dns_name_equal(l.name, e.resolves->name)) continue;
            ++total;
            if (l.answer == e.resolves->ip) ++hit;
        }
        add("resolves", total > 0 && hit == total,
            std::to_string(hit) + "/" + std::to_string(total) + " lookups answered " + e.resolves->ip.to_string());
    }
    return out;
}

RunOutcome execute(const Scenario& s) {
    RunOutcome r;
    r.run = run_simulation(s);
    r.wire = detect::observations_from_trace(r.run.trace);
    r.analysis = analyze(r.wire, s.detectors);
    r.checks = check_expectations(s, r.run, r.analysis);
    return r;
}

std::vector<pcap::PcapRecord> wire_records(const net::EventTrace& trace) {
    std::vector<pcap::PcapRecord> out;
    for (const auto* ev : trace.originated()) out.push_back(pcap::make_record(ev->time, ev->frame->bytes));
    return out;
}

json report_json(const Scenario& s, const RunOutcome& r) {
    const auto& w = r.run.world;
    json j;
    j["scenario"] = s.name;
    j["seed"] = s.seed;
    j["duration"] = ts(s.duration);
    j["events"] = r.run.trace.events.size();
    j["wire_frames"] = r.wire.size();

    json hosts = json::object();
    for (const auto& [name, h] : w.hosts) {
        json lookups = json::array();
        for (const auto& l : h->lookups)
            lookups.push_back({{"at", ts(l.started)},
                               {"name", l.name},
                               {"answer", l.answer ? json(l.answer->to_string()) : json(nullptr)}});
        json fetches = json::array();
        for (const auto& f : h->fetches)
            fetches.push_back({{"at", ts(f.started)},
                               {"host", f.host},
                               {"path", f.path},
                               {"server", f.server ? json(f.server->to_string()) : json(nullptr)},
                               {"ok", f.ok},
                               {"status", f.status},
                               {"bytes", f.body.size()}});
        json entry = {{"lookups", lookups}, {"fetches", fetches}, {"sink_messages", h->sink_messages.size()}};
        if (auto it = w.sweeps.find(name); it != w.sweeps.end()) {
            json verdicts = json::array();
            for (const auto& v : it->second->verdicts())
                verdicts.push_back({{"target", v.target_ip.to_string()},
                                    {"verdict", std::string(detect::to_string(v.verdict))},
                                    {"probed_at", ts(v.probed_at)}});
            entry["probe_verdicts"] = verdicts;
        }
        hosts[name] = entry;
    }
    j["hosts"] = hosts;

    json switches = json::object();
    for (const auto& [name, sw] : w.switches) {
        json viol = json::array();
        for (const auto& v : sw->core().violations())
            viol.push_back({{"at", ts(v.time)},
                            {"port", v.port},
                            {"mac", v.mac.to_string()},
                            {"action", v.action == net::ViolationAction::Shutdown ? "shutdown" : "alert"}});
        json shut = json::array();
        for (int p = 0; p < sw->core().port_count(); ++p)
            if (sw->core().is_shutdown(p)) shut.push_back(p);
        switches[name] = {{"violations", viol}, {"shutdown_ports", shut}};
    }
    j["switches"] = switches;

    json gadgets = json::object();
    for (const auto& [name, g] : w.gadgets) {
        const auto& st = g->stats();
        json gj = {{"mode", g->config().mode == gadget::Mode::Active ? "active" : "passive"},
                   {"frames_captured", st.frames_captured},
                   {"frames_forwarded", st.frames_forwarded},
                   {"frames_relayed", st.frames_relayed},
                   {"frames_consumed", st.frames_consumed},
                   {"capture_files", g->capture().closed().size()},
                   {"capture_records", g->capture().total_records()},
                   {"poison_replies", st.poison_replies},
                   {"first_poison", st.first_poison ? json(ts(*st.first_poison)) : json(nullptr)},
                   {"flood_sent", st.flood_sent},
                   {"spoof_hits", st.spoof_hits.size()},
                   {"halted", g->halted()}};
        if (const auto* sched = g->scheduler()) {
            json log = json::array();
            for (const auto& l : sched->log())
                log.push_back({{"file", l.name},
                               {"at", ts(l.time)},
                               {"outcome", std::string(exfil::to_string(l.result.outcome))},
                               {"attempts", l.result.attempts}});
            json transfers = json::array();
            for (const auto& t : st.transfers)
                transfers.push_back(
                    {{"at", ts(t.time)}, {"files", t.files}, {"bytes", t.bytes}, {"completed", t.completed}});
            gj["exfil"] = {{"channel", sched->channel().kind()},
                           {"delivered", sched->delivered_names()},
                           {"pending", sched->pending()},
                           {"log", log},
                           {"transfers", transfers}};
        }
        gadgets[name] = gj;
    }
    j["gadgets"] = gadgets;
    j["detectors"] = to_json(r.analysis);

    json checks = json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = checks;
    j["passed"] = r.all_pass();
    return j;
}

std::string report_text(const Scenario& s, const RunOutcome& r) {
    std::ostringstream os;
    const auto& w = r.run.world;
    os << "scenario " << s.name << "  seed " << s.seed << "  duration " << ts(s.duration) << "\n";
    os << "events " << r.run.trace.events.size() << "  wire frames " << r.wire.size() << "\n";
    for (const auto& [name, g] : w.gadgets) {
        const auto& st = g->stats();
        os << "gadget " << name << ": captured " << st.frames_captured << " frames into "
           << g->capture().closed().size() << " files";
        if (st.poison_replies) os << ", " << st.poison_replies << " poison replies";
        if (st.flood_sent) os << ", " << st.flood_sent << " flood datagrams";
        if (!st.spoof_hits.empty()) os << ", " << st.spoof_hits.size() << " spoofed answers";
        if (const auto* sched = g->scheduler())
            os << ", " << sched->delivered_names().size() << " files exfiltrated via " << sched->channel().kind();
        os << "\n";
    }
    for (const auto& [name, sw] : w.switches)
        if (!sw->core().violations().empty())
            os << "switch " << name << ": " << sw->core().violations().size() << " port-security violations\n";
    for (const auto& [name, sw] : w.sweeps)
        for (const auto& v : sw->verdicts())
            os << "probe " << v.target_ip.to_string() << " " << detect::to_string(v.verdict) << "\n";
    const auto& a = r.analysis;
    if (a.arp)
        for (const auto& al : *a.arp)
            os << "arp_watch " << detect::to_string(al.kind) << " " << al.ip.to_string() << " at "
               << ts(al.first_seen) << " (" << al.count << ")\n";
    if (a.beacons)
        for (const auto& b : *a.beacons)
            os << "beacon " << b.src.to_string() << " -> " << b.dst.to_string() << " every " << ts(b.period)
               << " confidence " << b.confidence << " over " << b.events << " flows\n";
    if (a.storms)
        for (const auto& st : *a.storms)
            os << "udp_storm " << ts(st.first_seen) << ".." << ts(st.last_seen) << " peak " << st.peak_pps
               << " pps, " << st.peak_distinct_ports << " ports\n";
    if (a.images)
        for (const auto& im : *a.images) os << "carved " << im.file_name() << " " << im.image.bytes.size() << " B\n";
    for (const auto& c : r.checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    return os.str();
}

namespace {

void write_file(const std::filesystem::path& p, const void* data, std::size_t n) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!os) throw IoError("write to '" + p.string() + "' failed");
}
void write_file(const std::filesystem::path& p, const Bytes& b) { write_file(p, b.data(), b.size()); }
void write_file(const std::filesystem::path& p, const std::string& s) { write_file(p, s.data(), s.size()); }

void make_dir(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
}

}  // namespace

void write_artifacts(const Scenario& s, const RunOutcome& r, const std::filesystem::path& dir, double wall_seconds) {
    make_dir(dir);
    write_file(dir / "trace.jsonl", r.run.trace.serialize(s.name, s.seed));
    try {
        write_file(dir / "wire.pcap", pcap::write_pcap(wire_records(r.run.trace)));
    } catch (const pcap::PcapError& e) {
        throw IoError(e.what());
    }

    for (const auto& [name, g] : r.run.world.gadgets) {
        const auto cdir = dir / "captures" / name;
        make_dir(cdir);
        for (const auto& f : g->capture().closed()) write_file(cdir / (f.name + ".pcap"), f.serialize());
        const auto* sched = g->scheduler();
        if (!sched) continue;
        if (const auto* email = dynamic_cast<const exfil::EmailChannel*>(&sched->channel())) {
            make_dir(dir / "outbox");
            for (const auto& m : email->outbox()) {
                char suffix[32];
                std::snprintf(suffix, sizeof suffix, ".%zu-of-%zu.eml", m.index, m.count);
                write_file(dir / "outbox" / (m.file + suffix), m.render(email->recipient()));
            }
        } else if (const auto* cloud = dynamic_cast<const exfil::CloudChannel*>(&sched->channel())) {
            make_dir(dir / "cloudstore");
            for (const auto& [key, bytes] : cloud->store()) write_file(dir / "cloudstore" / (key + ".pcap"), bytes);
        }
    }
    if (r.analysis.images) {
        make_dir(dir / "images");
        for (const auto& im : *r.analysis.images) write_file(dir / "images" / im.file_name(), im.image.bytes);
    }

    auto report = report_json(s, r);
    report["run_metadata"] = {{"wall_seconds", wall_seconds}};
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "report.txt", report_text(s, r));
}

}  // namespace sbcsim::scenario
