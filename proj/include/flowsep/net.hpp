#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace flowsep {

using CanId = std::uint32_t;

struct MacAddr {
    std::array<std::uint8_t, 6> bytes{};

    static MacAddr parse(std::string_view text);
    std::string to_string() const;
    bool is_multicast() const { return (bytes[0] & 0x01) != 0; }
    bool is_local() const { return (bytes[0] & 0x02) != 0; }

    auto operator<=>(const MacAddr&) const = default;
};

struct Ipv4Addr {
    std::uint32_t value = 0;

    static Ipv4Addr parse(std::string_view text);
    static constexpr Ipv4Addr from_octets(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
        return Ipv4Addr{(std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d};
    }
    std::uint8_t octet(int i) const { return static_cast<std::uint8_t>(value >> (24 - 8 * i)); }
    std::string to_string() const;
    bool is_multicast() const { return (value >> 28) == 0xE; }

    auto operator<=>(const Ipv4Addr&) const = default;
};

/// "0x1a2" style rendering used for CAN identifiers in every output format.
std::string format_can_id(CanId id);

/// Accepts "0x..." hex or plain decimal.
CanId parse_can_id(std::string_view text);

}  // namespace flowsep
