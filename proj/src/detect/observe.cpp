#include "sbcsim/detect/detect.hpp"

namespace sbcsim::detect {

std::vector<Observation> observations_from_trace(const net::EventTrace& trace) {
    std::vector<Observation> out;
    for (const auto* e : trace.originated()) out.push_back(Observation{e->time, e->frame});
    return out;
}

std::vector<Observation> observations_from_pcap(const std::vector<pcap::PcapRecord>& records) {
    std::vector<Observation> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        try {
            out.push_back(Observation{pcap::record_time(r), net::WireFrame::from_bytes(r.data)});
        } catch (const net::DecodeError&) {
        }
    }
    return out;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Promiscuous: return "Promiscuous";
        case Verdict::Normal: return "Normal";
        case Verdict::NoResponse: return "NoResponse";
    }
    return "?";
}

std::string_view to_string(ArpAlertKind k) {
    switch (k) {
        case ArpAlertKind::BindingChange: return "BindingChange";
        case ArpAlertKind::DuplicateClaim: return "DuplicateClaim";
        case ArpAlertKind::GratuitousStorm: return "GratuitousStorm";
    }
    return "?";
}

}  // namespace sbcsim::detect
