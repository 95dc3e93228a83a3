#include <doctest.h>

#include <fstream>
#include <iterator>

#include "sbcsim/net/rng.hpp"
#include "sbcsim/pcap/pcap.hpp"

using namespace sbcsim;
using namespace sbcsim::pcap;

namespace {

Bytes fixture(const std::string& name) {
    std::ifstream is(std::string(FIXTURE_DIR) + "/" + name, std::ios::binary);
    REQUIRE(is);
    return Bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

// The record stored in golden_one.pcap (written by scapy).
PcapRecord golden_record() {
    PcapRecord r;
    r.ts_sec = 1;
    r.ts_usec = 500000;
    r.data = from_hex("02000000000202000000000188b5");
    for (std::uint8_t i = 0; i < 46; ++i) r.data.push_back(i);
    return r;
}

}  // namespace

TEST_CASE("empty capture matches the golden file") {
    CHECK(write_pcap({}) == fixture("golden_empty.pcap"));
    CHECK(read_pcap(fixture("golden_empty.pcap")).empty());
}

TEST_CASE("one-record capture matches the golden file") {
    CHECK(write_pcap({golden_record()}) == fixture("golden_one.pcap"));
}

TEST_CASE("both byte orders parse to the same records") {
    const auto le = read_pcap(fixture("golden_one.pcap"));
    const auto be = read_pcap(fixture("golden_one_swapped.pcap"));
    REQUIRE(le.size() == 1);
    CHECK(le == be);
    CHECK(le[0] == golden_record());
}

TEST_CASE("pcapng and nanosecond captures are rejected as unsupported") {
    for (const char* f : {"sample.pcapng", "nanosecond.pcap"}) {
        try {
            read_pcap(fixture(f));
            FAIL("accepted " << f);
        } catch (const PcapError& e) {
            CHECK(e.kind() == PcapError::Kind::UnsupportedFormat);
        }
    }
}

TEST_CASE("a truncated record reports its index") {
    auto two = write_pcap({golden_record(), golden_record()});
    two.resize(two.size() - 5);
    try {
        read_pcap(two);
        FAIL("accepted truncated capture");
    } catch (const PcapError& e) {
        CHECK(e.kind() == PcapError::Kind::TruncatedCapture);
        CHECK(e.index() == 1);
    }
    Bytes header_only = fixture("golden_empty.pcap");
    header_only.resize(10);
    CHECK_THROWS_AS(read_pcap(header_only), PcapError);
}

TEST_CASE("random captures round-trip") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PcapRecord> recs;
        const auto n = rng.uniform(0, 20);
        for (std::uint64_t i = 0; i < n; ++i) {
            PcapRecord r;
            r.ts_sec = static_cast<std::uint32_t>(rng.uniform(0, 1u << 31));
            r.ts_usec = static_cast<std::uint32_t>(rng.uniform(0, 999999));
            r.data.resize(rng.uniform(0, 1514));
            for (auto& b : r.data) b = static_cast<std::uint8_t>(rng.next());
            recs.push_back(std::move(r));
        }
        REQUIRE(read_pcap(write_pcap(recs)) == recs);
    }
}

TEST_CASE("writer rejects records it cannot represent") {
    PcapRecord big;
    big.data.resize(kSnaplen + 1);
    CHECK_THROWS_AS(write_pcap({big}), PcapError);
    PcapRecord bad_us;
    bad_us.ts_usec = 1000000;
    CHECK_THROWS_AS(write_pcap({bad_us}), PcapError);
}

TEST_CASE("simulation time maps onto record timestamps") {
    const auto r = make_record(SimTime::from_micros(3'000'042), {}, 100);
    CHECK(r.ts_sec == 103);
    CHECK(r.ts_usec == 42);
    CHECK(record_time(r, 100) == SimTime::from_micros(3'000'042));
}
