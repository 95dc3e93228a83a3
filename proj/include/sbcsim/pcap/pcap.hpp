#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sbcsim/net/bytes.hpp"
#include "sbcsim/net/time.hpp"

namespace sbcsim::pcap {


inline constexpr std::uint32_t kMagic = 0xA1B2C3D4;
inline constexpr std::uint32_t kMagicSwapped = 0xD4C3B2A1;
inline constexpr std::uint32_t kSnaplen = 65535;
inline constexpr std::uint32_t kLinktypeEthernet = 1;
inline constexpr std::size_t kGlobalHeaderLen = 24;
inline constexpr std::size_t kRecordHeaderLen = 16;

struct PcapRecord {
    std::uint32_t ts_sec = 0;
    std::uint32_t ts_usec = 0;
    Bytes data;

    bool operator==(const PcapRecord&) const = default;
};

class PcapError : public std::runtime_error {
public:
    enum class Kind { UnsupportedFormat, TruncatedCapture, WriteError };
    PcapError(Kind kind, const std::string& what, std::size_t index = 0)
        : std::runtime_error(what), kind_(kind), index_(index) {}
    Kind kind() const { return kind_; }
    /// Record index for TruncatedCapture.
    std::size_t index() const { return index_; }

private:
    Kind kind_;
    std::size_t index_;
};

/// Classic little-endian pcap, microsecond timestamps, linktype Ethernet.
Bytes write_pcap(const std::vector<PcapRecord>& records);
/// Accepts either byte order; rejects pcapng and nanosecond captures.
std::vector<PcapRecord> read_pcap(ByteView bytes);

/// Virtual epoch 0 maps to ts_sec = offset_sec.
PcapRecord make_record(SimTime t, Bytes data, std::uint32_t offset_sec = 0);
SimTime record_time(const PcapRecord& r, std::uint32_t offset_sec = 0);

void write_pcap_file(const std::string& path, const std::vector<PcapRecord>& records);
std::vector<PcapRecord> read_pcap_file(const std::string& path);

}  // namespace sbcsim::pcap
