#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sbcsim/scenario/run.hpp"

namespace fs = std::filesystem;
using namespace sbcsim;
using namespace sbcsim::scenario;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kIo = 2, kCheckFailed = 3 };

#ifndef SBCSIM_SCENARIO_DIR
#define SBCSIM_SCENARIO_DIR "scenarios"
#endif

fs::path scenario_dir() {
    if (const char* env = std::getenv("SBCSIM_SCENARIOS")) return env;
    return SBCSIM_SCENARIO_DIR;
}

// A path to a YAML file, or the name of a bundled scenario.
fs::path resolve(const std::string& arg) {
    if (fs::exists(arg)) return arg;
    auto bundled = scenario_dir() / (arg + ".yaml");
    if (fs::exists(bundled)) return bundled;
    return arg;
}

struct Loaded {
    std::optional<Scenario> scenario;
    int code = kOk;
};

Loaded load(const fs::path& path) {
    Loaded l;
    if (!fs::exists(path)) {
        std::cerr << "error: scenario file '" << path.string() << "' not found\n";
        l.code = kIo;
        return l;
    }
    try {
        l.scenario = load_scenario(path.string());
    } catch (const ScenarioError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << path.string() << ": " << d.to_string() << "\n";
        l.code = kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        l.code = kIo;
    }
    return l;
}

// Creates `dir` and proves it writable, so I/O problems surface before simulating.
bool prepare_out(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    const auto probe = dir / ".write-test";
    {
        std::ofstream os(probe);
        if (ec || !os || !(os << "x")) {
            std::cerr << "error: output directory '" << dir.string() << "' is not writable\n";
            return false;
        }
    }
    fs::remove(probe, ec);
    return true;
}

int run_one(const fs::path& path, const fs::path& out, std::optional<std::uint64_t> seed, bool check, bool quiet) {
    auto l = load(path);
    if (!l.scenario) return l.code;
    if (!prepare_out(out)) return kIo;
    auto& s = *l.scenario;
    if (seed) s.seed = *seed;
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome r;
    try {
        r = execute(s);
    } catch (const ScenarioError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << path.string() << ": " << d.to_string() << "\n";
        return kInvalid;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    try {
        write_artifacts(s, r, out, wall);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    }
    if (!quiet) std::cout << report_text(s, r);
    if (check && !r.all_pass()) return kCheckFailed;
    return kOk;
}

bool is_pcap(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    unsigned char m[4] = {};
    is.read(reinterpret_cast<char*>(m), 4);
    const std::uint32_t le = m[0] | (m[1] << 8) | (m[2] << 16) | (static_cast<std::uint32_t>(m[3]) << 24);
    return le == pcap::kMagic || le == pcap::kMagicSwapped || le == 0x0A0D0D0A || le == 0xA1B23C4D ||
           le == 0x4D3CB2A1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic switched-Ethernet simulator for inline capture gadgets and their detection"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
    std::string run_scenario;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool check = false;
    std::string batch_dir;
    run->add_option("scenario", run_scenario, "Scenario file or bundled scenario name");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_flag("--check", check, "Exit 3 when an expectation fails");
    run->add_option("--batch", batch_dir, "Run every *.yaml in this directory into <out>/<name>/");

    // analyze
    auto* an = app.add_subcommand("analyze", "Run detectors over a trace or pcap");
    std::string input;
    bool use_arp = false, use_beacon = false, use_storm = false, use_carve = false, as_json = false;
    detect::ArpWatchConfig arp_cfg;
    detect::BeaconConfig beacon_cfg;
    detect::StormConfig storm_cfg;
    std::string learning, window, images_dir;
    an->add_option("input", input, "trace.jsonl or pcap file")->required();
    an->add_flag("--arp-watch", use_arp, "ARP binding watcher");
    an->add_flag("--beacon", use_beacon, "Periodic flow detector");
    an->add_flag("--udp-storm", use_storm, "UDP flood detector");
    an->add_flag("--carve", use_carve, "Carve JPEG/PNG from TCP streams");
    an->add_option("--learning", learning, "arp_watch learning period (e.g. 60s)");
    an->add_option("--storm-threshold", arp_cfg.storm_threshold, "Gratuitous replies per window per MAC");
    an->add_option("--min-events", beacon_cfg.min_events, "Minimum flows per beacon")->check(CLI::Range(4, 1 << 30));
    an->add_option("--jitter-tol", beacon_cfg.jitter_tol, "Relative jitter tolerance")->check(CLI::Range(0.0, 1.0));
    an->add_option("--window", window, "udp_storm window (e.g. 1s)");
    an->add_option("--pps", storm_cfg.pps_threshold, "udp_storm packets-per-second threshold");
    an->add_option("--distinct-ports", storm_cfg.distinct_port_threshold, "udp_storm distinct-port threshold");
    an->add_option("--images", images_dir, "Write carved images to this directory");
    an->add_flag("--json", as_json, "JSON output");

    // validate
    auto* val = app.add_subcommand("validate", "Check a scenario without running it");
    std::string val_scenario;
    val->add_option("scenario", val_scenario, "Scenario file or bundled scenario name")->required();

    // list-scenarios
    auto* list = app.add_subcommand("list-scenarios", "List bundled scenarios");
    std::string list_dir;
    list->add_option("--dir", list_dir, "Scenario directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalid;
    }

    if (*run) {
        if (batch_dir.empty() == run_scenario.empty()) {
            std::cerr << "error: give exactly one of <scenario> or --batch\n";
            return kInvalid;
        }
        if (run_scenario.size()) return run_one(resolve(run_scenario), out_dir, seed, check, false);
        std::vector<fs::path> files;
        std::error_code ec;
        for (const auto& e : fs::directory_iterator(batch_dir, ec))
            if (e.path().extension() == ".yaml") files.push_back(e.path());
        if (ec) {
            std::cerr << "error: cannot read '" << batch_dir << "': " << ec.message() << "\n";
            return kIo;
        }
        std::sort(files.begin(), files.end());
        int worst = kOk;
        for (const auto& f : files) {
            const int code = run_one(f, fs::path(out_dir) / f.stem(), seed, check, true);
            std::cout << f.stem().string() << ": "
                      << (code == kOk ? "ok" : code == kCheckFailed ? "check failed" : code == kIo ? "io error" : "invalid")
                      << "\n";
            worst = std::max(worst, code);
        }
        return worst;
    }

    if (*an) {
        DetectorSpec d;
        try {
            if (!learning.empty()) arp_cfg.learning = parse_duration(learning);
            if (!window.empty()) storm_cfg.window = parse_duration(window);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kInvalid;
        }
        if (storm_cfg.window.micros == 0) {
            std::cerr << "error: --window must be positive\n";
            return kInvalid;
        }
        if (!use_arp && !use_beacon && !use_storm && !use_carve) use_arp = use_beacon = use_storm = use_carve = true;
        if (use_arp) d.arp_watch = arp_cfg;
        if (use_beacon) d.beacon = beacon_cfg;
        if (use_storm) d.udp_storm = storm_cfg;
        d.carve = use_carve;

        std::vector<detect::Observation> obs;
        try {
            if (!fs::exists(input)) throw std::runtime_error("cannot open '" + input + "'");
            if (is_pcap(input)) {
                obs = detect::observations_from_pcap(pcap::read_pcap_file(input));
            } else {
                std::ifstream is(input);
                if (!is) throw std::runtime_error("cannot open '" + input + "'");
                obs = detect::observations_from_trace(net::EventTrace::read(is).trace);
            }
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return kIo;
        }
        const auto a = analyze(obs, d);
        if (as_json) {
            std::cout << to_json(a).dump(2) << "\n";
        } else {
            Scenario s;
            s.name = fs::path(input).filename().string();
            RunOutcome r;
            r.wire = obs;
            r.analysis = a;
            // Reuse the detector section of the report text.
            const auto text = report_text(s, r);
            std::cout << "frames " << obs.size() << "\n" << text.substr(text.find('\n', text.find('\n') + 1) + 1);
        }
        if (!images_dir.empty() && a.images) {
            std::error_code ec;
            fs::create_directories(images_dir, ec);
            for (const auto& im : *a.images) {
                std::ofstream os(fs::path(images_dir) / im.file_name(), std::ios::binary);
                os.write(reinterpret_cast<const char*>(im.image.bytes.data()),
                         static_cast<std::streamsize>(im.image.bytes.size()));
                if (!os) {
                    std::cerr << "error: cannot write into '" << images_dir << "'\n";
                    return kIo;
                }
            }
        }
        return kOk;
    }

    if (*val) {
        const auto path = resolve(val_scenario);
        auto l = load(path);
        if (!l.scenario) return l.code;
        std::cout << path.string() << ": ok (" << l.scenario->name << ")\n";
        return kOk;
    }

    if (*list) {
        const fs::path dir = list_dir.empty() ? scenario_dir() : fs::path(list_dir);
        std::vector<fs::path> files;
        std::error_code ec;
        for (const auto& e : fs::directory_iterator(dir, ec))
            if (e.path().extension() == ".yaml") files.push_back(e.path());
        if (ec) {
            std::cerr << "error: cannot read '" << dir.string() << "': " << ec.message() << "\n";
            return kIo;
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            try {
                const auto s = load_scenario(f.string());
                std::cout << f.stem().string() << "\tduration " << format_duration(s.duration) << "\tseed " << s.seed
                          << "\n";
            } catch (const std::exception&) {
                std::cout << f.stem().string() << "\t(invalid)\n";
            }
        }
        return kOk;
    }
    return kOk;
}
