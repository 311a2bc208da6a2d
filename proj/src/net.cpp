#include "flowsep/net.hpp"

#include <charconv>
#include <cstdio>

#include "flowsep/error.hpp"

namespace flowsep {

namespace {

template <typename T>
bool parse_number(std::string_view text, T& out, int base) {
    if (text.empty()) return false;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out, base);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

MacAddr MacAddr::parse(std::string_view text) {
    MacAddr mac;
    std::size_t pos = 0;
    for (int i = 0; i < 6; ++i) {
        if (pos + 2 > text.size()) throw Error(ErrorCode::MalformedRecord, std::string(text), "bad MAC address");
        unsigned value = 0;
        if (!parse_number(text.substr(pos, 2), value, 16))
            throw Error(ErrorCode::MalformedRecord, std::string(text), "bad MAC address");
        mac.bytes[i] = static_cast<std::uint8_t>(value);
        pos += 2;
        if (i < 5) {
            if (pos >= text.size() || (text[pos] != ':' && text[pos] != '-'))
                throw Error(ErrorCode::MalformedRecord, std::string(text), "bad MAC address");
            ++pos;
        }
    }
    if (pos != text.size()) throw Error(ErrorCode::MalformedRecord, std::string(text), "bad MAC address");
    return mac;
}

std::string MacAddr::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2], bytes[3],
                  bytes[4], bytes[5]);
    return buf;
}

Ipv4Addr Ipv4Addr::parse(std::string_view text) {
    std::uint32_t value = 0;
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        auto end = text.find('.', pos);
        if (i == 3) end = text.size();
        if (end == std::string_view::npos) throw Error(ErrorCode::MalformedRecord, std::string(text), "bad IPv4 address");
        unsigned octet = 0;
        if (!parse_number(text.substr(pos, end - pos), octet, 10) || octet > 255)
            throw Error(ErrorCode::MalformedRecord, std::string(text), "bad IPv4 address");
        value = (value << 8) | octet;
        pos = end + 1;
    }
    return Ipv4Addr{value};
}

std::string Ipv4Addr::to_string() const {
    return std::to_string(octet(0)) + "." + std::to_string(octet(1)) + "." + std::to_string(octet(2)) + "." +
           std::to_string(octet(3));
}

std::string format_can_id(CanId id) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", id);
    return buf;
}

CanId parse_can_id(std::string_view text) {
    CanId id = 0;
    bool ok = false;
    if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X'))
        ok = parse_number(text.substr(2), id, 16);
    else
        ok = parse_number(text, id, 10);
    if (!ok) throw Error(ErrorCode::MalformedRecord, std::string(text), "bad CAN identifier");
    return id;
}

}  // namespace flowsep
