#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace sbcsim {

/// Virtual time in microseconds since scenario start.
struct SimTime {
    std::uint64_t micros = 0;

    static constexpr SimTime from_micros(std::uint64_t us) { return SimTime{us}; }
    static constexpr SimTime from_millis(std::uint64_t ms) { return SimTime{ms * 1000}; }
    static constexpr SimTime from_seconds(std::uint64_t s) { return SimTime{s * 1'000'000}; }

    constexpr double seconds() const { return static_cast<double>(micros) / 1e6; }

    constexpr auto operator<=>(const SimTime&) const = default;
    constexpr SimTime operator+(SimTime d) const { return SimTime{micros + d.micros}; }
    constexpr SimTime operator-(SimTime d) const { return SimTime{micros - d.micros}; }
    constexpr SimTime& operator+=(SimTime d) {
        micros += d.micros;
        return *this;
    }
};

// Deltas share the representation; the alias documents intent at call sites.
using SimDuration = SimTime;

namespace time_literals {
constexpr SimTime operator""_us(unsigned long long v) { return SimTime{v}; }
constexpr SimTime operator""_ms(unsigned long long v) { return SimTime{v * 1000}; }
constexpr SimTime operator""_s(unsigned long long v) { return SimTime{v * 1'000'000}; }
}  // namespace time_literals

// "250ms", "1.5s", "100us", "2m", or a bare number of seconds.
SimTime parse_duration(std::string_view text);
std::string format_duration(SimTime t);

}  // namespace sbcsim
