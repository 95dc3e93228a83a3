#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sbcsim/net/bytes.hpp"
#include "sbcsim/net/time.hpp"
#include "sbcsim/pcap/pcap.hpp"

namespace sbcsim::gadget {

enum class Direction { FromVictim, FromNetwork };

struct CaptureRecord {
    SimTime time;
    Direction direction = Direction::FromVictim;
    Bytes bytes;
};

struct CaptureFile {
    std::string name;
    std::size_t index = 0;  // 1-based
    SimTime window_start;
    std::vector<CaptureRecord> records;

    std::vector<pcap::PcapRecord> pcap_records(std::uint32_t offset_sec = 0) const;
    Bytes serialize(std::uint32_t offset_sec = 0) const;
};

/// "capture-0001", "capture-0002", ...
std::string capture_name(std::size_t index);

/// Time-window partition of captured records. File k+1 holds records with
/// t in [k*interval, (k+1)*interval); every window produces a file, empty or not.
class CaptureEngine {
public:
    explicit CaptureEngine(SimDuration interval = SimTime::from_seconds(60));

    void record(SimTime now, Direction dir, Bytes bytes);
    /// Closes every window that ends at or before `now`, then hands over all files
    /// closed since the previous call. A window starting at `now` is opened lazily
    /// by the next record.
    std::vector<CaptureFile> advance_to(SimTime now);
    /// Closes the open file, if any, and hands over everything not yet taken.
    std::vector<CaptureFile> finish();

    SimDuration interval() const { return interval_; }
    std::size_t next_index() const { return next_index_; }
    const std::vector<CaptureFile>& closed() const { return closed_; }
    std::size_t total_records() const { return total_records_; }

private:
    void open_window(std::size_t k);
    void close_through(std::size_t k);
    std::vector<CaptureFile> take_ready();

    SimDuration interval_;
    std::optional<CaptureFile> current_;
    std::size_t current_window_ = 0;
    std::size_t next_index_ = 1;
    std::vector<CaptureFile> closed_;
    std::size_t taken_ = 0;
    std::size_t total_records_ = 0;
};

}  // namespace sbcsim::gadget
