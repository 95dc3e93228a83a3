#include "sbcsim/pcap/pcap.hpp"

#include <fstream>
#include <iterator>

namespace sbcsim::pcap {

namespace {

void put_le32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_le16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint32_t get32(ByteView b, std::size_t at, bool big) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        const std::uint32_t byte = b[at + static_cast<std::size_t>(big ? i : 3 - i)];
        v = (v << 8) | byte;
    }
    return v;
}

constexpr std::uint32_t kMagicNanos = 0xA1B23C4D;
constexpr std::uint32_t kPcapngBlock = 0x0A0D0D0A;

}  // namespace

Bytes write_pcap(const std::vector<PcapRecord>& records) {
    Bytes out;
    std::size_t total = kGlobalHeaderLen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].data.size() > kSnaplen)
            throw PcapError(PcapError::Kind::WriteError,
                            "record " + std::to_string(i) + " exceeds snaplen (" +
                                std::to_string(records[i].data.size()) + " bytes)",
                            i);
        if (records[i].ts_usec >= 1'000'000)
            throw PcapError(PcapError::Kind::WriteError, "record " + std::to_string(i) + " has ts_usec >= 1e6", i);
        total += kRecordHeaderLen + records[i].data.size();
    }
    out.reserve(total);
    put_le32(out, kMagic);
    put_le16(out, 2);
    put_le16(out, 4);
    put_le32(out, 0);  // thiszone
    put_le32(out, 0);  // sigfigs
    put_le32(out, kSnaplen);
    put_le32(out, kLinktypeEthernet);
    for (const auto& r : records) {
        const auto len = static_cast<std::uint32_t>(r.data.size());
        put_le32(out, r.ts_sec);
        put_le32(out, r.ts_usec);
        put_le32(out, len);
        put_le32(out, len);
        out.insert(out.end(), r.data.begin(), r.data.end());
    }
    return out;
}

std::vector<PcapRecord> read_pcap(ByteView bytes) {
    using K = PcapError::Kind;
    if (bytes.size() < 4) throw PcapError(K::UnsupportedFormat, "file shorter than a pcap magic number");
    const std::uint32_t magic_le = get32(bytes, 0, false);
    bool big = false;
    if (magic_le == kMagic) {
        big = false;
    } else if (magic_le == kMagicSwapped) {
        big = true;
    } else if (magic_le == kPcapngBlock) {
        throw PcapError(K::UnsupportedFormat, "pcapng is not supported");
    } else if (magic_le == kMagicNanos || get32(bytes, 0, true) == kMagicNanos) {
        throw PcapError(K::UnsupportedFormat, "nanosecond-resolution pcap is not supported");
    } else {
        throw PcapError(K::UnsupportedFormat, "bad pcap magic");
    }
    if (bytes.size() < kGlobalHeaderLen) throw PcapError(K::UnsupportedFormat, "truncated pcap global header");

    std::vector<PcapRecord> records;
    std::size_t pos = kGlobalHeaderLen;
    while (pos < bytes.size()) {
        const std::size_t index = records.size();
        if (bytes.size() - pos < kRecordHeaderLen)
            throw PcapError(K::TruncatedCapture, "record " + std::to_string(index) + " header is truncated", index);
        PcapRecord r;
        r.ts_sec = get32(bytes, pos, big);
        r.ts_usec = get32(bytes, pos + 4, big);
        const std::uint32_t incl = get32(bytes, pos + 8, big);
        pos += kRecordHeaderLen;
        if (bytes.size() - pos < incl)
            throw PcapError(K::TruncatedCapture, "record " + std::to_string(index) + " data is truncated", index);
        r.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + incl));
        pos += incl;
        records.push_back(std::move(r));
    }
    return records;
}

PcapRecord make_record(SimTime t, Bytes data, std::uint32_t offset_sec) {
    PcapRecord r;
    r.ts_sec = static_cast<std::uint32_t>(t.micros / 1'000'000) + offset_sec;
    r.ts_usec = static_cast<std::uint32_t>(t.micros % 1'000'000);
    r.data = std::move(data);
    return r;
}

SimTime record_time(const PcapRecord& r, std::uint32_t offset_sec) {
    const std::uint64_t sec = r.ts_sec >= offset_sec ? r.ts_sec - offset_sec : 0;
    return SimTime::from_micros(sec * 1'000'000 + r.ts_usec);
}

void write_pcap_file(const std::string& path, const std::vector<PcapRecord>& records) {
    const Bytes bytes = write_pcap(records);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw PcapError(PcapError::Kind::WriteError, "cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw PcapError(PcapError::Kind::WriteError, "write to " + path + " failed");
}

std::vector<PcapRecord> read_pcap_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    Bytes bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return read_pcap(bytes);
}

}  // namespace sbcsim::pcap
