#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sbcsim/net/packet.hpp"
#include "sbcsim/net/time.hpp"

namespace sbcsim::net {

enum class EventKind { Emit, Deliver, Drop, AppObserve };

std::string_view to_string(EventKind k);

// Emit notes distinguish frames a node created from frames it relayed unchanged.
inline constexpr std::string_view kNoteOrigin = "origin";
inline constexpr std::string_view kNoteForward = "forward";

struct TraceEvent {
    SimTime time;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Emit;
    std::string node;
    int port = 0;
    FrameRef frame;
    std::string note;
};

/// Totally ordered record of a run, ordered by (time, seq).
class EventTrace {
public:
    static constexpr int kFormatVersion = 1;

    std::vector<TraceEvent> events;

    /// JSON-lines: a header line, then frame-table and event lines. Frames are
    /// written once and referenced by id.
    void write(std::ostream& os, const std::string& scenario, std::uint64_t seed) const;
    std::string serialize(const std::string& scenario, std::uint64_t seed) const;

    struct Loaded;
    static Loaded read(std::istream& is);

    /// Frames a node created, in emission order: the "everything on the wire once" view.
    std::vector<const TraceEvent*> originated() const;
};

struct EventTrace::Loaded {
    std::string scenario;
    std::uint64_t seed = 0;
    EventTrace trace;
};

class TraceFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sbcsim::net
