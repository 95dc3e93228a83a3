#include "sbcsim/gadget/capture.hpp"

#include <cstdio>
#include <stdexcept>

namespace sbcsim::gadget {

std::string capture_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "capture-%04zu", index);
    return buf;
}

std::vector<pcap::PcapRecord> CaptureFile::pcap_records(std::uint32_t offset_sec) const {
    std::vector<pcap::PcapRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(pcap::make_record(r.time, r.bytes, offset_sec));
    return out;
}

Bytes CaptureFile::serialize(std::uint32_t offset_sec) const { return pcap::write_pcap(pcap_records(offset_sec)); }

CaptureEngine::CaptureEngine(SimDuration interval) : interval_(interval) {
    if (interval.micros == 0) throw std::invalid_argument("capture interval must be positive");
    open_window(0);
}

void CaptureEngine::open_window(std::size_t k) {
    CaptureFile f;
    f.index = next_index_++;
    f.name = capture_name(f.index);
    f.window_start = SimTime::from_micros(k * interval_.micros);
    current_ = std::move(f);
    current_window_ = k;
}

void CaptureEngine::close_through(std::size_t k) {
    // Close windows [current_window_, k), creating empty ones as needed.
    while (current_window_ < k) {
        if (!current_) open_window(current_window_);
        closed_.push_back(std::move(*current_));
        current_.reset();
        ++current_window_;
    }
}

std::vector<CaptureFile> CaptureEngine::take_ready() {
    std::vector<CaptureFile> out(closed_.begin() + static_cast<std::ptrdiff_t>(taken_), closed_.end());
    taken_ = closed_.size();
    return out;
}

void CaptureEngine::record(SimTime now, Direction dir, Bytes bytes) {
    const std::size_t k = now.micros / interval_.micros;
    close_through(k);
    if (!current_) open_window(k);
    current_->records.push_back(CaptureRecord{now, dir, std::move(bytes)});
    ++total_records_;
}

std::vector<CaptureFile> CaptureEngine::advance_to(SimTime now) {
    close_through(now.micros / interval_.micros);
    return take_ready();
}

std::vector<CaptureFile> CaptureEngine::finish() {
    if (current_) {
        closed_.push_back(std::move(*current_));
        current_.reset();
        ++current_window_;
    }
    return take_ready();
}

}  // namespace sbcsim::gadget
