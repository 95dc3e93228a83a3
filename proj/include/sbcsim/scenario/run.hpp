#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sbcsim/scenario/scenario.hpp"

namespace sbcsim::scenario {

/// Detector outputs; a field is set when its detector was enabled.
struct Analysis {
    std::optional<std::vector<detect::ArpAlert>> arp;
    std::optional<std::vector<detect::Beacon>> beacons;
    std::optional<std::vector<detect::StormAlert>> storms;
    std::optional<std::vector<streams::FlowImage>> images;
};

Analysis analyze(const std::vector<detect::Observation>& obs, const DetectorSpec& detectors);
nlohmann::json to_json(const Analysis& a);

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct RunOutcome {
    RunResult run;
    std::vector<detect::Observation> wire;  // originated view
    Analysis analysis;
    std::vector<Check> checks;

    bool all_pass() const;
};

/// Runs the scenario, its detectors and its expectations; no file I/O.
RunOutcome execute(const Scenario& s);

std::vector<Check> check_expectations(const Scenario& s, const RunResult& run, const Analysis& a);

/// Deterministic report body (no wall-clock fields).
nlohmann::json report_json(const Scenario& s, const RunOutcome& r);
std::string report_text(const Scenario& s, const RunOutcome& r);

/// Originated frames as pcap records.
std::vector<pcap::PcapRecord> wire_records(const net::EventTrace& trace);

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Writes trace.jsonl, wire.pcap, captures/, images/, outbox/, cloudstore/ and
/// report.{txt,json} under `dir`. Throws IoError.
void write_artifacts(const Scenario& s, const RunOutcome& r, const std::filesystem::path& dir,
                     double wall_seconds);

}  // namespace sbcsim::scenario
