#include "sbcsim/net/time.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace sbcsim {

SimTime parse_duration(std::string_view text) {
    std::size_t split = 0;
    while (split < text.size() && (std::isdigit(static_cast<unsigned char>(text[split])) || text[split] == '.'))
        ++split;
    if (split == 0) throw std::invalid_argument("duration must start with a number: '" + std::string(text) + "'");
    std::string number(text.substr(0, split));
    std::string_view unit = text.substr(split);

    double scale = 1e6;
    if (unit.empty() || unit == "s")
        scale = 1e6;
    else if (unit == "ms")
        scale = 1e3;
    else if (unit == "us")
        scale = 1.0;
    else if (unit == "m" || unit == "min")
        scale = 60e6;
    else
        throw std::invalid_argument("unknown duration unit '" + std::string(unit) + "'");

    // Integer path avoids rounding for the common case.
    if (number.find('.') == std::string::npos) {
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(number.data(), number.data() + number.size(), v);
        if (ec != std::errc{} || p != number.data() + number.size())
            throw std::invalid_argument("bad duration '" + std::string(text) + "'");
        return SimTime{v * static_cast<std::uint64_t>(scale)};
    }
    double v = std::stod(number);
    return SimTime{static_cast<std::uint64_t>(std::llround(v * scale))};
}

std::string format_duration(SimTime t) {
    const auto us = t.micros;
    if (us % 1'000'000 == 0) return std::to_string(us / 1'000'000) + "s";
    if (us % 1000 == 0) return std::to_string(us / 1000) + "ms";
    return std::to_string(us) + "us";
}

}  // namespace sbcsim
