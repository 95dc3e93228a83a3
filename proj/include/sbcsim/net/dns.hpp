#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sbcsim/net/addr.hpp"
#include "sbcsim/net/bytes.hpp"

namespace sbcsim::net {

inline constexpr std::uint16_t kDnsPort = 53;
inline constexpr std::uint16_t kDnsTypeA = 1;

struct DnsAnswer {
    std::string name;
    Ipv4Addr address;
    std::uint32_t ttl = 300;

    bool operator==(const DnsAnswer&) const = default;
};

// Single-question A-record subset of the DNS wire format.
struct DnsMessage {
    std::uint16_t id = 0;
    bool is_response = false;
    std::string qname;
    std::uint16_t qtype = kDnsTypeA;
    std::vector<DnsAnswer> answers;

    bool operator==(const DnsMessage&) const = default;
};

class DnsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Answers are written uncompressed; decoding also follows compression pointers.
Bytes encode_dns(const DnsMessage& msg);
DnsMessage decode_dns(ByteView bytes);

DnsMessage make_dns_response(const DnsMessage& query, std::vector<DnsAnswer> answers);

/// Case-insensitive comparison ignoring one trailing dot.
bool dns_name_equal(std::string_view a, std::string_view b);

}  // namespace sbcsim::net
