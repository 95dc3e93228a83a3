#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "sbcsim/net/rng.hpp"
#include "sbcsim/streams/streams.hpp"

using namespace sbcsim;
using namespace sbcsim::net;
using namespace sbcsim::streams;

namespace {

Bytes fixture(const std::string& name) {
    std::ifstream is(std::string(FIXTURE_DIR) + "/" + name, std::ios::binary);
    REQUIRE(is);
    return Bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

const FlowKey kKey{Ipv4Addr{{10, 0, 0, 80}}, Ipv4Addr{{10, 0, 0, 10}}, 80, 49152};

TimedSegment seg(std::uint64_t t, std::uint32_t seq, Bytes payload, std::uint8_t flags = tcp_flags::ACK) {
    TcpSegment s;
    s.src_port = kKey.src_port;
    s.dst_port = kKey.dst_port;
    s.seq = seq;
    s.flags = flags;
    s.payload = std::move(payload);
    return {SimTime::from_micros(t), std::move(s)};
}

Bytes slice(const Bytes& b, std::size_t off, std::size_t len) {
    return Bytes(b.begin() + static_cast<std::ptrdiff_t>(off), b.begin() + static_cast<std::ptrdiff_t>(off + len));
}

}  // namespace

TEST_CASE("reassembly agrees with a brute-force coverage oracle") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = rng.uniform(1, 3000);
        Bytes data(n);
        for (auto& b : data) b = static_cast<std::uint8_t>(rng.next());
        // ISNs near the top of the sequence space exercise wraparound.
        const auto isn = static_cast<std::uint32_t>(rng.uniform(0, 1) ? rng.next() : 0xffffffffu - rng.uniform(0, 2000));

        std::vector<TimedSegment> segs{seg(0, isn, {}, tcp_flags::SYN)};
        std::vector<bool> covered(n, false);
        std::size_t off = 0;
        while (off < n) {
            const std::size_t len = std::min<std::size_t>(rng.uniform(1, 600), n - off);
            const bool dropped = rng.uniform(0, 9) == 0;
            if (!dropped) {
                segs.push_back(seg(rng.uniform(1, 1000), isn + 1 + static_cast<std::uint32_t>(off), slice(data, off, len)));
                std::fill(covered.begin() + static_cast<std::ptrdiff_t>(off),
                          covered.begin() + static_cast<std::ptrdiff_t>(off + len), true);
            }
            // Occasional overlapping retransmission with identical bytes.
            if (rng.uniform(0, 4) == 0) {
                const std::size_t ro = rng.uniform(0, n - 1);
                const std::size_t rl = std::min<std::size_t>(rng.uniform(1, 800), n - ro);
                segs.push_back(seg(rng.uniform(1, 1000), isn + 1 + static_cast<std::uint32_t>(ro), slice(data, ro, rl)));
                std::fill(covered.begin() + static_cast<std::ptrdiff_t>(ro),
                          covered.begin() + static_cast<std::ptrdiff_t>(ro + rl), true);
            }
            off += len;
        }
        for (std::size_t i = segs.size(); i > 1; --i) std::swap(segs[i - 1], segs[rng.uniform(0, i - 1)]);

        Bytes want_bytes;
        std::vector<Gap> want_gaps;
        std::uint64_t want_withheld = 0;
        bool contiguous = true;
        std::size_t last_end = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!covered[i]) continue;
            if (i > last_end) {
                want_gaps.push_back({last_end, i - last_end});
                contiguous = false;
            }
            if (contiguous) want_bytes.push_back(data[i]);
            else ++want_withheld;
            last_end = i + 1;
        }

        const auto got = reassemble(kKey, segs);
        REQUIRE(got.base_seq == isn + 1);
        REQUIRE(got.bytes == want_bytes);
        REQUIRE(got.gaps == want_gaps);
        REQUIRE(got.withheld == want_withheld);
    }
}

TEST_CASE("without a SYN the base is the circular minimum sequence number") {
    // "hello" spans 0xfffffffe..0x2, so "world" at 3 follows it across the wrap.
    const std::vector<TimedSegment> segs = {seg(2, 3, to_bytes("world")), seg(1, 0xfffffffe, to_bytes("hello"))};
    const auto s = reassemble(kKey, segs);
    CHECK(s.base_seq == 0xfffffffeu);
    CHECK(to_string(s.bytes) == "helloworld");
    CHECK(s.gaps.empty());
}

TEST_CASE("the first copy wins and conflicting copies at one offset are reported") {
    const std::vector<TimedSegment> ok = {seg(0, 99, {}, tcp_flags::SYN), seg(1, 100, to_bytes("abcdef")),
                                          seg(2, 102, to_bytes("cdXYZ"))};
    CHECK(to_string(reassemble(kKey, ok).bytes) == "abcdefZ");
    const std::vector<TimedSegment> bad = {seg(0, 99, {}, tcp_flags::SYN), seg(1, 100, to_bytes("abcdef")),
                                           seg(2, 100, to_bytes("abXdef"))};
    try {
        reassemble(kKey, bad);
        FAIL("conflict not reported");
    } catch (const OverlapConflict& e) {
        CHECK(e.offset() == 2);
    }
}

TEST_CASE("planted images are carved byte-identically from surrounding bytes") {
    const Bytes jpg = fixture("planted.jpg");
    const Bytes png = fixture("planted.png");
    REQUIRE(jpg.size() == 4096);
    REQUIRE(png.size() == 8192);
    Bytes stream = to_bytes("HTTP/1.0 200 OK\r\nContent-Length: 4096\r\n\r\n");
    stream.insert(stream.end(), jpg.begin(), jpg.end());
    const auto png_at = stream.size() + 100;
    stream.resize(png_at, 'A');
    stream.insert(stream.end(), png.begin(), png.end());
    stream.resize(stream.size() + 50, 'z');

    const auto images = carve_images(stream);
    REQUIRE(images.size() == 2);
    CHECK(images[0].format == ImageFormat::Jpeg);
    CHECK(images[0].bytes == jpg);
    CHECK(images[1].format == ImageFormat::Png);
    CHECK(images[1].offset == png_at);
    CHECK(images[1].bytes == png);

    // Carving a carved image yields the image itself.
    for (const auto& im : images) {
        const auto again = carve_images(im.bytes);
        REQUIRE(again.size() == 1);
        CHECK(again[0].offset == 0);
        CHECK(again[0].bytes == im.bytes);
    }
}

TEST_CASE("incomplete or corrupt images are not carved") {
    const Bytes jpg = fixture("planted.jpg");
    CHECK(carve_images(slice(jpg, 0, jpg.size() - 2)).empty());
    Bytes png = fixture("small.png");
    CHECK(carve_images(slice(png, 0, png.size() - 1)).empty());
    png[12] = '1';  // first chunk type is no longer letters
    CHECK(carve_images(png).empty());
    CHECK(carve_images(Bytes{}).empty());
}

TEST_CASE("images survive shuffled segment delivery through frame decoding") {
    const Bytes jpg = fixture("planted.jpg");
    const Bytes png = fixture("planted.png");
    Bytes body = jpg;
    body.insert(body.end(), png.begin(), png.end());
    const MacAddr a{{2, 0, 0, 0, 0, 0x50}}, b{{2, 0, 0, 0, 0, 0x0a}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        std::vector<Bytes> frames;
        const std::uint32_t isn = static_cast<std::uint32_t>(rng.next());
        TcpSegment syn;
        syn.src_port = 80;
        syn.dst_port = 49152;
        syn.seq = isn;
        syn.flags = tcp_flags::SYN | tcp_flags::ACK;
        frames.push_back(encode_frame(make_tcp_frame(a, b, kKey.src_ip, kKey.dst_ip, syn)));
        for (std::size_t off = 0; off < body.size(); off += kTcpMss) {
            TcpSegment s = syn;
            s.flags = tcp_flags::ACK;
            s.seq = isn + 1 + static_cast<std::uint32_t>(off);
            s.payload = slice(body, off, std::min(kTcpMss, body.size() - off));
            frames.push_back(encode_frame(make_tcp_frame(a, b, kKey.src_ip, kKey.dst_ip, s)));
        }
        for (std::size_t i = frames.size(); i > 1; --i) std::swap(frames[i - 1], frames[rng.uniform(0, i - 1)]);
        std::vector<FrameSample> samples;
        for (std::size_t i = 0; i < frames.size(); ++i) samples.push_back({SimTime::from_micros(i), frames[i]});
        const auto flows = extract_tcp_flows(samples);
        REQUIRE(flows.size() == 1);
        const auto images = carve_flows(flows);
        REQUIRE(images.size() == 2);
        CHECK(images[0].image.bytes == jpg);
        CHECK(images[1].image.bytes == png);
        CHECK(images[0].file_name() == kKey.to_string() + "-0.jpg");
    }
}
