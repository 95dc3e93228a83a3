#include "sbcsim/net/dns.hpp"

#include <cctype>

namespace sbcsim::net {

namespace {

void put_name(ByteWriter& w, std::string_view name) {
    if (!name.empty() && name.back() == '.') name.remove_suffix(1);
    while (!name.empty()) {
        auto dot = name.find('.');
        auto label = name.substr(0, dot);
        if (label.empty() || label.size() > 63) throw DnsError("invalid dns label in '" + std::string(name) + "'");
        w.u8(static_cast<std::uint8_t>(label.size()));
        w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
        if (dot == std::string_view::npos) break;
        name.remove_prefix(dot + 1);
    }
    w.u8(0);
}

std::string get_name(ByteView msg, ByteReader& r) {
    std::string name;
    std::size_t resume = 0;
    bool jumped = false;
    int hops = 0;
    for (;;) {
        const auto len = r.u8();
        if ((len & 0xc0) == 0xc0) {
            const auto ptr = static_cast<std::size_t>(((len & 0x3f) << 8) | r.u8());
            if (++hops > 16) throw DnsError("dns compression loop");
            if (!jumped) resume = r.position();
            jumped = true;
            r.seek(ptr);
            continue;
        }
        if (len & 0xc0) throw DnsError("unsupported dns label type");
        if (len == 0) break;
        auto label = r.take(len);
        if (!name.empty()) name.push_back('.');
        name.append(label.begin(), label.end());
        if (name.size() > 255) throw DnsError("dns name too long");
    }
    if (jumped) r.seek(resume);
    (void)msg;
    return name;
}

}  // namespace

Bytes encode_dns(const DnsMessage& msg) {
    Bytes out;
    ByteWriter w(out);
    w.u16(msg.id);
    // QR, RD, and (for responses) RA.
    w.u16(msg.is_response ? 0x8180 : 0x0100);
    w.u16(1);
    w.u16(static_cast<std::uint16_t>(msg.answers.size()));
    w.u16(0);
    w.u16(0);
    put_name(w, msg.qname);
    w.u16(msg.qtype);
    w.u16(1);  // IN
    for (const auto& a : msg.answers) {
        put_name(w, a.name);
        w.u16(kDnsTypeA);
        w.u16(1);
        w.u32(a.ttl);
        w.u16(4);
        w.raw(a.address.octets);
    }
    return out;
}

DnsMessage decode_dns(ByteView bytes) {
    try {
        ByteReader r(bytes);
        DnsMessage m;
        m.id = r.u16();
        const auto flags = r.u16();
        m.is_response = (flags & 0x8000) != 0;
        const auto qd = r.u16();
        const auto an = r.u16();
        r.u16();
        r.u16();
        if (qd != 1) throw DnsError("expected exactly one question, got " + std::to_string(qd));
        m.qname = get_name(bytes, r);
        m.qtype = r.u16();
        r.u16();
        for (unsigned i = 0; i < an; ++i) {
            DnsAnswer a;
            a.name = get_name(bytes, r);
            const auto type = r.u16();
            r.u16();
            a.ttl = r.u32();
            const auto rdlen = r.u16();
            auto rdata = r.take(rdlen);
            if (type != kDnsTypeA || rdlen != 4) continue;
            std::copy(rdata.begin(), rdata.end(), a.address.octets.begin());
            m.answers.push_back(std::move(a));
        }
        if (!m.is_response && !m.answers.empty()) throw DnsError("query carries answers");
        return m;
    } catch (const ShortRead&) {
        throw DnsError("dns message truncated");
    }
}

DnsMessage make_dns_response(const DnsMessage& query, std::vector<DnsAnswer> answers) {
    DnsMessage r;
    r.id = query.id;
    r.is_response = true;
    r.qname = query.qname;
    r.qtype = query.qtype;
    r.answers = std::move(answers);
    return r;
}

bool dns_name_equal(std::string_view a, std::string_view b) {
    if (!a.empty() && a.back() == '.') a.remove_suffix(1);
    if (!b.empty() && b.back() == '.') b.remove_suffix(1);
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

}  // namespace sbcsim::net
