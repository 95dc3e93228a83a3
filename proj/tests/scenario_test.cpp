#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "sbcsim/scenario/run.hpp"

using namespace sbcsim;
using namespace sbcsim::scenario;
using namespace sbcsim::time_literals;

namespace {

const std::string kBase = R"(name: t
seed: 1
duration: 10s
hosts:
  - name: a
    mac: "02:00:00:00:00:01"
    ip: 10.0.0.1
  - name: b
    mac: "02:00:00:00:00:02"
    ip: 10.0.0.2
switches:
  - name: sw
    ports: 4
links:
  - {a: a, b: "sw:0"}
  - {a: b, b: "sw:1"}
)";

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ScenarioError& e) {
        return e.diagnostics();
    }
    return {};
}

bool mentions(const std::vector<Diagnostic>& d, const std::string& needle) {
    for (const auto& x : d)
        if (x.to_string().find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("minimal scenario parses") {
    const auto s = parse_scenario(kBase);
    CHECK(s.hosts.size() == 2);
    CHECK(s.duration == 10_s);
    CHECK(s.links.size() == 2);
}

TEST_CASE("unknown keys are reported with their line") {
    const auto d = diagnostics_of(kBase + "colour: blue\n");
    REQUIRE(d.size() == 1);
    CHECK(d[0].line == 17);
    CHECK(mentions(d, "colour"));
}

TEST_CASE("bad values are rejected field by field") {
    std::string text = kBase;
    text.replace(text.find("10.0.0.2"), 8, "10.0.0.300");
    text.replace(text.find("ports: 4"), 8, "ports: 0");
    const auto d = diagnostics_of(text);
    CHECK(d.size() == 2);
    CHECK(mentions(d, "10.0.0.300"));
    CHECK(mentions(d, "ports"));
}

TEST_CASE("missing required keys and malformed YAML") {
    std::string text = kBase;
    text.erase(text.find("seed: 1\n"), 8);
    CHECK(mentions(diagnostics_of(text), "seed"));
    const auto d = diagnostics_of("name: [unterminated\n");
    REQUIRE(d.size() == 1);
    CHECK(d[0].line >= 1);
}

TEST_CASE("cross references are validated") {
    SUBCASE("splice must match a link") {
        const auto d = diagnostics_of(kBase + R"(gadgets:
  - name: g
    splice: {host: a, switch: sw, port: 1}
)");
        CHECK(mentions(d, "splice"));
    }
    SUBCASE("active gadgets need an address") {
        const auto d = diagnostics_of(kBase + R"(gadgets:
  - name: g
    splice: {host: a, switch: sw, port: 0}
    mode: active
)");
        CHECK(mentions(d, "ip"));
    }
    SUBCASE("duplicate addresses and dangling links") {
        std::string text = kBase;
        text.replace(text.find("10.0.0.2"), 8, "10.0.0.1");
        text += "  - {a: ghost, b: \"sw:2\"}\n";
        const auto d = diagnostics_of(text);
        CHECK(d.size() >= 2);
        CHECK(mentions(d, "10.0.0.1"));
        CHECK(mentions(d, "ghost"));
    }
}

TEST_CASE("repeat and poisson traffic expand deterministically") {
    TrafficSpec t;
    t.host = "a";
    t.at = 2_s;
    t.repeat = RepeatSpec{3_s, 4};
    CHECK(expand_times(t, 1, 0) == std::vector<SimTime>{2_s, 5_s, 8_s, 11_s});

    TrafficSpec p;
    p.host = "a";
    p.at = 0_s;
    p.poisson = PoissonSpec{1_s, 1000_s};
    const auto x = expand_times(p, 9, 0);
    CHECK(x == expand_times(p, 9, 0));
    CHECK(x != expand_times(p, 10, 0));
    CHECK(std::is_sorted(x.begin(), x.end()));
    CHECK(x.back() <= 1000_s);
    // Mean gap of an exponential with mean 1 s over ~1000 arrivals.
    const double mean = x.back().seconds() / static_cast<double>(x.size() - 1);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("bundled scenarios validate and report deterministically") {
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(SBCSIM_SCENARIO_DIR)) {
        if (e.path().extension() != ".yaml") continue;
        ++n;
        CAPTURE(e.path().string());
        const auto s = load_scenario(e.path().string());
        CHECK(validate(s).empty());
        CHECK_FALSE(s.expect.empty());
    }
    CHECK(n >= 14);

    const auto s = load_scenario(std::string(SBCSIM_SCENARIO_DIR) + "/arp-mitm.yaml");
    const auto a = execute(s);
    const auto b = execute(s);
    CHECK(a.all_pass());
    CHECK(report_json(s, a).dump() == report_json(s, b).dump());
}

TEST_CASE("offline analysis of a stored trace or pcap matches the in-run findings") {
    for (const char* name : {"arp-mitm", "exfil-email", "storm-5x"}) {
        CAPTURE(name);
        const auto s = load_scenario(std::string(SBCSIM_SCENARIO_DIR) + "/" + name + ".yaml");
        const auto r = execute(s);
        const auto live = to_json(r.analysis).dump();

        std::istringstream is(r.run.trace.serialize(s.name, s.seed));
        const auto loaded = net::EventTrace::read(is);
        CHECK(loaded.seed == s.seed);
        CHECK(to_json(analyze(detect::observations_from_trace(loaded.trace), s.detectors)).dump() == live);

        const auto recs = pcap::read_pcap(pcap::write_pcap(wire_records(r.run.trace)));
        CHECK(to_json(analyze(detect::observations_from_pcap(recs), s.detectors)).dump() == live);
    }
}
