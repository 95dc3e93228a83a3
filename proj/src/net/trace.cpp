#include "sbcsim/net/trace.hpp"

#include <istream>
#include <map>
#include <json.hpp>
#include <ostream>
#include <sstream>

namespace sbcsim::net {

using nlohmann::json;

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::Emit: return "emit";
        case EventKind::Deliver: return "deliver";
        case EventKind::Drop: return "drop";
        case EventKind::AppObserve: return "observe";
    }
    return "?";
}

namespace {

EventKind parse_kind(const std::string& s) {
    if (s == "emit") return EventKind::Emit;
    if (s == "deliver") return EventKind::Deliver;
    if (s == "drop") return EventKind::Drop;
    if (s == "observe") return EventKind::AppObserve;
    throw TraceFormatError("unknown event kind '" + s + "'");
}

}  // namespace

void EventTrace::write(std::ostream& os, const std::string& scenario, std::uint64_t seed) const {
    json header = {{"format", "sbcsim-trace"}, {"version", kFormatVersion}, {"scenario", scenario},
                   {"seed", seed}, {"events", events.size()}};
    os << header.dump() << '\n';
    std::map<const WireFrame*, std::uint64_t> ids;
    for (const auto& e : events) {
        auto it = ids.find(e.frame.get());
        if (it == ids.end()) {
            it = ids.emplace(e.frame.get(), ids.size()).first;
            os << json{{"frame", it->second}, {"hex", to_hex(e.frame->bytes)}}.dump() << '\n';
        }
        json line = {{"t", e.time.micros}, {"seq", e.seq},  {"kind", to_string(e.kind)},
                     {"node", e.node},     {"port", e.port}, {"ref", it->second}};
        if (!e.note.empty()) line["note"] = e.note;
        os << line.dump() << '\n';
    }
}

std::string EventTrace::serialize(const std::string& scenario, std::uint64_t seed) const {
    std::ostringstream os;
    write(os, scenario, seed);
    return os.str();
}

EventTrace::Loaded EventTrace::read(std::istream& is) {
    Loaded out;
    std::string line;
    if (!std::getline(is, line)) throw TraceFormatError("empty trace file");
    try {
        auto header = json::parse(line);
        if (header.value("format", "") != "sbcsim-trace") throw TraceFormatError("not an sbcsim trace");
        if (header.value("version", 0) != kFormatVersion)
            throw TraceFormatError("unsupported trace version " + header["version"].dump());
        out.scenario = header.value("scenario", "");
        out.seed = header.value("seed", std::uint64_t{0});
        std::vector<FrameRef> frames;
        std::size_t lineno = 1;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto j = json::parse(line);
            if (j.contains("hex")) {
                if (j["frame"].get<std::size_t>() != frames.size())
                    throw TraceFormatError("frame ids out of order at line " + std::to_string(lineno));
                frames.push_back(WireFrame::from_bytes(from_hex(j["hex"].get<std::string>())));
                continue;
            }
            TraceEvent e;
            e.time = SimTime{j.at("t").get<std::uint64_t>()};
            e.seq = j.at("seq").get<std::uint64_t>();
            e.kind = parse_kind(j.at("kind").get<std::string>());
            e.node = j.at("node").get<std::string>();
            e.port = j.at("port").get<int>();
            auto ref = j.at("ref").get<std::size_t>();
            if (ref >= frames.size()) throw TraceFormatError("dangling frame ref at line " + std::to_string(lineno));
            e.frame = frames[ref];
            e.note = j.value("note", "");
            out.trace.events.push_back(std::move(e));
        }
    } catch (const json::exception& ex) {
        throw TraceFormatError(std::string("malformed trace: ") + ex.what());
    } catch (const DecodeError& ex) {
        throw TraceFormatError(std::string("undecodable frame in trace: ") + ex.what());
    }
    return out;
}

std::vector<const TraceEvent*> EventTrace::originated() const {
    std::vector<const TraceEvent*> out;
    for (const auto& e : events)
        if (e.kind == EventKind::Emit && e.note == kNoteOrigin) out.push_back(&e);
    return out;
}

}  // namespace sbcsim::net
