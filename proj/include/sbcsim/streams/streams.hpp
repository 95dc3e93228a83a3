#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sbcsim/net/packet.hpp"
#include "sbcsim/net/time.hpp"

namespace sbcsim::streams {


/// Directional TCP flow identity.
struct FlowKey {
    net::Ipv4Addr src_ip;
    net::Ipv4Addr dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;

    FlowKey reversed() const { return {dst_ip, src_ip, dst_port, src_port}; }
    /// "10.0.0.20_80-10.0.0.5_49152", safe as a file name.
    std::string to_string() const;
    auto operator<=>(const FlowKey&) const = default;
};

struct TimedSegment {
    SimTime time;
    net::TcpSegment segment;
};

struct Gap {
    std::uint64_t offset = 0;
    std::uint64_t length = 0;
    bool operator==(const Gap&) const = default;
};

struct ContiguousStream {
    FlowKey key;
    std::uint32_t base_seq = 0;
    // Data contiguous from base_seq up to the first gap.
    Bytes bytes;
    std::vector<Gap> gaps;
    // Bytes received beyond the first gap (withheld from `bytes`).
    std::uint64_t withheld = 0;
};

class OverlapConflict : public std::runtime_error {
public:
    OverlapConflict(std::uint64_t offset, const std::string& what) : std::runtime_error(what), offset_(offset) {}
    /// Offset relative to the stream base.
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

/// Orders one flow's segments by sequence number (mod 2^32). The base is SYN+1
/// when a SYN is present, otherwise the circular minimum of the data sequence
/// numbers. Overlaps keep the earliest copy by (time, offset, payload).
ContiguousStream reassemble(const FlowKey& key, const std::vector<TimedSegment>& segments);

enum class ImageFormat { Jpeg, Png };

struct CarvedImage {
    ImageFormat format = ImageFormat::Jpeg;
    std::uint64_t offset = 0;
    Bytes bytes;
    std::string extension() const { return format == ImageFormat::Jpeg ? "jpg" : "png"; }
};

/// Left-to-right signature scan: JPEG from FF D8 FF to the first FF D9, PNG from
/// the signature through the end of the IEND chunk. Spans never overlap.
std::vector<CarvedImage> carve_images(ByteView stream);

struct FrameSample {
    SimTime time;
    ByteView bytes;
};

/// Groups the TCP segments found in decodable frames by directional flow key.
/// Undecodable frames are skipped.
std::map<FlowKey, std::vector<TimedSegment>> extract_tcp_flows(const std::vector<FrameSample>& frames);

struct FlowImage {
    FlowKey key;
    CarvedImage image;
    /// "{flowkey}-{offset}.{ext}"
    std::string file_name() const;
};

/// Reassembles every flow and carves images from its contiguous bytes. Flows whose
/// reassembly reports an OverlapConflict are skipped.
std::vector<FlowImage> carve_flows(const std::map<FlowKey, std::vector<TimedSegment>>& flows);

}  // namespace sbcsim::streams
