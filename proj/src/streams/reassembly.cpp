#include <algorithm>
#include <tuple>

#include "sbcsim/streams/streams.hpp"

namespace sbcsim::streams {

std::string FlowKey::to_string() const {
    return src_ip.to_string() + "_" + std::to_string(src_port) + "-" + dst_ip.to_string() + "_" +
           std::to_string(dst_port);
}

namespace {

// Start of the longest clockwise run: the element following the widest gap
// between consecutive sequence numbers on the 2^32 circle.
std::uint32_t circular_min(std::vector<std::uint32_t> seqs) {
    std::sort(seqs.begin(), seqs.end());
    seqs.erase(std::unique(seqs.begin(), seqs.end()), seqs.end());
    if (seqs.size() == 1) return seqs.front();
    std::size_t best = 0;
    std::uint32_t widest = 0;
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        const std::uint32_t next = seqs[(i + 1) % seqs.size()];
        const std::uint32_t gap = next - seqs[i];
        if (gap > widest) {
            widest = gap;
            best = (i + 1) % seqs.size();
        }
    }
    return seqs[best];
}

// Disjoint covered intervals keyed by start offset.
class IntervalMap {
public:
    void insert(std::uint64_t off, ByteView data) {
        std::uint64_t pos = off;
        const std::uint64_t end = off + data.size();
        auto it = map_.upper_bound(pos);
        if (it != map_.begin()) {
            auto prev = std::prev(it);
            if (prev->first + prev->second.size() > pos) pos = prev->first + prev->second.size();
        }
        while (pos < end) {
            const std::uint64_t stop = (it == map_.end()) ? end : std::min(end, it->first);
            if (stop > pos) {
                const auto* from = data.data() + (pos - off);
                map_.emplace(pos, Bytes(from, from + (stop - pos)));
            }
            if (it == map_.end() || it->first >= end) break;
            pos = it->first + it->second.size();
            ++it;
        }
    }
    const std::map<std::uint64_t, Bytes>& map() const { return map_; }

private:
    std::map<std::uint64_t, Bytes> map_;
};

}  // namespace

ContiguousStream reassemble(const FlowKey& key, const std::vector<TimedSegment>& segments) {
    ContiguousStream out;
    out.key = key;

    std::optional<std::uint32_t> syn;
    std::vector<std::uint32_t> data_seqs;
    for (const auto& s : segments) {
        if (s.segment.has(net::tcp_flags::SYN)) {
            const std::uint32_t isn = s.segment.seq;
            if (!syn) syn = isn;
        } else if (!s.segment.payload.empty()) {
            data_seqs.push_back(s.segment.seq);
        }
    }
    if (syn) {
        out.base_seq = *syn + 1;
    } else if (!data_seqs.empty()) {
        out.base_seq = circular_min(data_seqs);
    } else {
        return out;
    }

    struct Piece {
        SimTime time;
        std::uint64_t offset;
        const Bytes* payload;
    };
    std::vector<Piece> pieces;
    for (const auto& s : segments) {
        const auto& seg = s.segment;
        if (seg.payload.empty()) continue;
        // Data on a SYN starts one past the ISN.
        const std::uint32_t first = seg.seq + (seg.has(net::tcp_flags::SYN) ? 1u : 0u);
        pieces.push_back({s.time, static_cast<std::uint32_t>(first - out.base_seq), &seg.payload});
    }
    std::sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) {
        return std::tie(a.time, a.offset, *a.payload) < std::tie(b.time, b.offset, *b.payload);
    });

    std::map<std::uint64_t, const Bytes*> first_at;
    IntervalMap covered;
    for (const auto& p : pieces) {
        auto [it, fresh] = first_at.emplace(p.offset, p.payload);
        if (!fresh) {
            const Bytes& a = *it->second;
            const Bytes& b = *p.payload;
            const std::size_t n = std::min(a.size(), b.size());
            auto mismatch = std::mismatch(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), b.begin());
            if (mismatch.first != a.begin() + static_cast<std::ptrdiff_t>(n)) {
                const auto at = p.offset + static_cast<std::uint64_t>(mismatch.first - a.begin());
                throw OverlapConflict(at, "conflicting data at stream offset " + std::to_string(at) + " in flow " +
                                              key.to_string());
            }
        }
        covered.insert(p.offset, *p.payload);
    }

    std::uint64_t pos = 0;
    bool contiguous = true;
    for (const auto& [off, bytes] : covered.map()) {
        if (off > pos) {
            out.gaps.push_back({pos, off - pos});
            contiguous = false;
        }
        if (contiguous)
            out.bytes.insert(out.bytes.end(), bytes.begin(), bytes.end());
        else
            out.withheld += bytes.size();
        pos = off + bytes.size();
    }
    return out;
}

std::map<FlowKey, std::vector<TimedSegment>> extract_tcp_flows(const std::vector<FrameSample>& frames) {
    std::map<FlowKey, std::vector<TimedSegment>> flows;
    for (const auto& f : frames) {
        net::EthernetFrame frame;
        try {
            frame = net::decode_frame(f.bytes);
        } catch (const net::DecodeError&) {
            continue;
        }
        const auto* ip = frame.ipv4();
        if (!ip) continue;
        const auto* tcp = ip->tcp();
        if (!tcp) continue;
        flows[FlowKey{ip->src, ip->dst, tcp->src_port, tcp->dst_port}].push_back({f.time, *tcp});
    }
    return flows;
}

std::string FlowImage::file_name() const {
    return key.to_string() + "-" + std::to_string(image.offset) + "." + image.extension();
}

std::vector<FlowImage> carve_flows(const std::map<FlowKey, std::vector<TimedSegment>>& flows) {
    std::vector<FlowImage> out;
    for (const auto& [key, segs] : flows) {
        ContiguousStream stream;
        try {
            stream = reassemble(key, segs);
        } catch (const OverlapConflict&) {
            continue;
        }
        for (auto& img : carve_images(stream.bytes)) out.push_back(FlowImage{key, std::move(img)});
    }
    return out;
}

}  // namespace sbcsim::streams
