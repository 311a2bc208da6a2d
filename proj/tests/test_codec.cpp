#include "doctest.h"

#include <random>
#include <sstream>

#include <boost/crc.hpp>

#include "flowsep/codec.hpp"
#include "flowsep/error.hpp"

using namespace flowsep;
using namespace flowsep::codec;

namespace {

// Independent byte oracle ------------------------------------------------------

using Bytes = std::vector<std::uint8_t>;

void put16(Bytes& b, unsigned v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}
void put32(Bytes& b, std::uint32_t v) {
    put16(b, v >> 16);
    put16(b, v & 0xFFFF);
}

// RFC 1071, summed as 16-bit words with a deferred fold.
std::uint16_t inet_checksum(const Bytes& b, std::size_t from, std::size_t len, std::uint64_t extra = 0) {
    std::uint64_t sum = extra;
    for (std::size_t i = 0; i < len; i += 2) {
        const unsigned hi = b[from + i];
        const unsigned lo = i + 1 < len ? b[from + i + 1] : 0;
        sum += (hi << 8) | lo;
    }
    while (sum > 0xFFFF) sum = (sum >> 16) + (sum & 0xFFFF);
    return static_cast<std::uint16_t>(~sum & 0xFFFF);
}

void finish_frame(Bytes& b) {
    if (b.size() < 60) b.resize(60, 0);
    boost::crc_32_type crc;
    crc.process_bytes(b.data(), b.size());
    const auto v = crc.checksum();
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

Bytes oracle_l2(std::uint32_t id, bool ext, unsigned domain, unsigned prio, const Bytes& data,
                std::array<std::uint8_t, 6> src) {
    Bytes b{0x03, 0x00, static_cast<std::uint8_t>(id >> 24), static_cast<std::uint8_t>(id >> 16),
            static_cast<std::uint8_t>(id >> 8), static_cast<std::uint8_t>(id)};
    b.insert(b.end(), src.begin(), src.end());
    put16(b, 0x8100);
    put16(b, (prio << 13) | domain);
    put16(b, 0x88B5);
    put32(b, id | (ext ? 0x80000000u : 0));
    b.push_back(static_cast<std::uint8_t>(data.size()));
    b.insert(b.end(), data.begin(), data.end());
    finish_frame(b);
    return b;
}

struct SomeIpFields {
    std::array<std::uint8_t, 6> src_mac{};
    unsigned pcp = 0;
    unsigned vid = 0;
    unsigned tos = 0;
    std::uint32_t src_ip = 0;
    std::uint32_t dst_ip = 0;
    std::optional<std::array<std::uint8_t, 6>> dst_mac;  // default: RFC 1112 mapping
    unsigned sport = 0;
    unsigned dport = 30490;
    std::uint32_t message_id = 0;
    std::optional<std::uint32_t> someip_length;
    unsigned message_type = 2;
    Bytes data;
};

Bytes oracle_someip(const SomeIpFields& f) {
    Bytes b;
    if (f.dst_mac) {
        b.insert(b.end(), f.dst_mac->begin(), f.dst_mac->end());
    } else {
        b.insert(b.end(), {0x01, 0x00, 0x5E, static_cast<std::uint8_t>((f.dst_ip >> 16) & 0x7F),
                           static_cast<std::uint8_t>(f.dst_ip >> 8), static_cast<std::uint8_t>(f.dst_ip)});
    }
    b.insert(b.end(), f.src_mac.begin(), f.src_mac.end());
    put16(b, 0x8100);
    put16(b, (f.pcp << 13) | f.vid);
    put16(b, 0x0800);
    const unsigned payload = 1 + static_cast<unsigned>(f.data.size());
    const unsigned udp_len = 8 + 16 + payload;
    const std::size_t ip = b.size();
    b.insert(b.end(), {0x45, static_cast<std::uint8_t>(f.tos)});
    put16(b, 20 + udp_len);
    put16(b, 0);
    put16(b, 0x4000);
    b.insert(b.end(), {1, 17});
    put16(b, 0);
    put32(b, f.src_ip);
    put32(b, f.dst_ip);
    const auto ipsum = inet_checksum(b, ip, 20);
    b[ip + 10] = static_cast<std::uint8_t>(ipsum >> 8);
    b[ip + 11] = static_cast<std::uint8_t>(ipsum);
    const std::size_t udp = b.size();
    put16(b, f.sport);
    put16(b, f.dport);
    put16(b, udp_len);
    put16(b, 0);
    put32(b, f.message_id);
    put32(b, f.someip_length.value_or(8 + payload));
    put32(b, 0);
    b.insert(b.end(), {1, 1, static_cast<std::uint8_t>(f.message_type), 0});
    b.push_back(static_cast<std::uint8_t>(f.data.size()));
    b.insert(b.end(), f.data.begin(), f.data.end());
    const std::uint64_t pseudo = (f.src_ip >> 16) + (f.src_ip & 0xFFFF) + (f.dst_ip >> 16) + (f.dst_ip & 0xFFFF) + 17 + udp_len;
    auto usum = inet_checksum(b, udp, udp_len, pseudo);
    if (usum == 0) usum = 0xFFFF;
    b[udp + 6] = static_cast<std::uint8_t>(usum >> 8);
    b[udp + 7] = static_cast<std::uint8_t>(usum);
    finish_frame(b);
    return b;
}

const MacAddr kGwMac{{0x02, 0x00, 0x00, 0x00, 0x00, 0x02}};
const Ipv4Addr kGwIp = Ipv4Addr::from_octets(10, 0, 0, 2);

const Bytes kPattern{0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88};

ErrorCode decode_error(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected decode to fail");
    return ErrorCode::InvalidArgument;
}

void refresh_fcs(Bytes& b) {
    b.resize(b.size() - 4);
    boost::crc_32_type crc;
    crc.process_bytes(b.data(), b.size());
    const auto v = crc.checksum();
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

TEST_CASE("L2 embedding of c1 matches the byte oracle") {
    const FlowMeta meta{0x100, false, 1, 1, 3};
    const CanFrame frame{0x100, false, kPattern};
    const auto bytes = encode_l2(meta, frame, kGwMac);
    CHECK(bytes == oracle_l2(0x100, false, 1, 3, kPattern, kGwMac.bytes));
    CHECK(bytes.size() == 64);
    CHECK(bytes.size() - kTaggedHeaderLen - kFcsLen == 42);
    CHECK(MacAddr{{bytes[0], bytes[1], bytes[2], bytes[3], bytes[4], bytes[5]}}.to_string() == "03:00:00:00:01:00");
    CHECK(bytes[14] == 0x60);  // pcp 3
    CHECK(bytes[15] == 0x01);  // vid 1

    const auto d = decode_l2(bytes);
    CHECK(d.frame == frame);
    CHECK(d.vlan_id == 1);
    CHECK(d.pcp == 3);
    CHECK(d.src_mac == kGwMac);
    CHECK(d.dst_mac == flow_mac(0x100));
}

TEST_CASE("L2 frames are always minimum size") {
    for (std::size_t dlc = 0; dlc <= 8; ++dlc) {
        const CanFrame f{0x7FF, false, Bytes(dlc, 0xAB)};
        CHECK(encode_l2({0x7FF, false, 4094, 1, 7}, f, kGwMac).size() == 64);
        CHECK(wire_overhead(Strategy::Message, f) == 64);
    }
}

TEST_CASE("SOME/IP embedding of c2 under domain grouping") {
    const FlowMeta meta{0x101, false, 1, 1, 2};
    const CanFrame frame{0x101, false, kPattern};
    const auto bytes = encode_someip(meta, frame, {kGwMac, kGwIp}, {GroupKind::Domain, 1});

    SomeIpFields f;
    f.src_mac = kGwMac.bytes;
    f.pcp = 2;
    f.tos = 0x10 << 2;
    f.src_ip = kGwIp.value;
    f.dst_ip = Ipv4Addr::from_octets(239, 0, 0, 1).value;
    f.sport = 30491;
    f.message_id = 0x101;
    f.data = kPattern;
    CHECK(bytes == oracle_someip(f));
    CHECK(bytes.size() == 75);
    CHECK(wire_overhead(Strategy::Domain, frame) == 75);
    CHECK(wire_overhead(Strategy::Topic, frame) == 75);

    const auto d = decode_someip(bytes);
    CHECK(d.dst_ip.to_string() == "239.0.0.1");
    CHECK(d.dscp == 0x10);
    CHECK(d.priority() == 2);
    CHECK(d.pcp == 2);
    CHECK(d.dst_port == 30490);
    CHECK(d.src_port == 30491);
    CHECK(d.message_id == 0x00000101);
    CHECK(d.group == TunnelGroup{GroupKind::Domain, 1});
    CHECK(d.frame == frame);
    // SOME/IP length field
    CHECK(((bytes[18 + 28 + 4] << 24) | (bytes[18 + 28 + 5] << 16) | (bytes[18 + 28 + 6] << 8) | bytes[18 + 28 + 7]) ==
          17);
}

TEST_CASE("SOME/IP embedding of c5 under topic grouping") {
    const FlowMeta meta{0x202, false, 2, 2, 1};
    const CanFrame frame{0x202, false, kPattern};
    const auto bytes = encode_someip(meta, frame, {kGwMac, kGwIp}, {GroupKind::Topic, 2});
    const auto d = decode_someip(bytes);
    CHECK(d.dst_ip.to_string() == "239.1.0.2");
    CHECK(d.dst_mac.to_string() == "01:00:5e:01:00:02");
    CHECK(d.group == TunnelGroup{GroupKind::Topic, 2});
}

TEST_CASE("address plan") {
    CHECK(flow_mac(0x1FFFFFFF).to_string() == "03:00:1f:ff:ff:ff");
    CHECK(group_address({GroupKind::Domain, 7}).to_string() == "239.0.0.7");
    CHECK(group_address({GroupKind::Topic, 0x1234}).to_string() == "239.1.18.52");
    for (unsigned label : {1u, 255u, 256u, 4094u})
        CHECK(group_of_address(group_address({GroupKind::Domain, static_cast<std::uint16_t>(label)})) ==
              TunnelGroup{GroupKind::Domain, static_cast<std::uint16_t>(label)});
    for (unsigned label : {1u, 65535u})
        CHECK(group_of_address(group_address({GroupKind::Topic, static_cast<std::uint16_t>(label)})) ==
              TunnelGroup{GroupKind::Topic, static_cast<std::uint16_t>(label)});
    CHECK_FALSE(group_of_address(Ipv4Addr::from_octets(239, 2, 0, 1)));
    CHECK(ipv4_multicast_mac(Ipv4Addr::from_octets(239, 129, 2, 3)).to_string() == "01:00:5e:01:02:03");
}

TEST_CASE("encode rejects unrepresentable inputs") {
    CHECK(decode_error([] { encode_l2({1, false, 4095, 1, 0}, {1, false, {}}, kGwMac); }) ==
          ErrorCode::DomainNotVlanRepresentable);
    CHECK(decode_error([] { encode_l2({1, false, 1, 1, 0}, {1, false, Bytes(9)}, kGwMac); }) == ErrorCode::InvalidFrame);
    CHECK(decode_error([] { encode_l2({0x800, false, 1, 1, 0}, {0x800, false, {}}, kGwMac); }) ==
          ErrorCode::InvalidFrame);
}

TEST_CASE("L2 decode errors") {
    const auto good = encode_l2({0x100, false, 1, 1, 3}, {0x100, false, kPattern}, kGwMac);

    CHECK(decode_error([&] { decode_l2(std::span(good).first(63)); }) == ErrorCode::TruncatedFrame);

    auto ip_type = good;
    ip_type[16] = 0x08;
    ip_type[17] = 0x00;
    CHECK(decode_error([&] { decode_l2(ip_type); }) == ErrorCode::BadEtherType);

    Bytes untagged(good.begin(), good.begin() + 12);
    untagged.insert(untagged.end(), good.begin() + 16, good.end());
    untagged.resize(64, 0);
    CHECK(decode_error([&] { decode_l2(untagged); }) == ErrorCode::MissingVlanTag);

    auto id_changed = good;
    id_changed[21] = 0x01;  // payload id 0x100 -> 0x101
    CHECK(decode_error([&] { decode_l2(id_changed); }) == ErrorCode::MacIdMismatch);

    auto bad_dst = good;
    bad_dst[0] = 0x01;
    CHECK(decode_error([&] { decode_l2(bad_dst); }) == ErrorCode::BadDestination);

    auto bad_dlc = good;
    bad_dlc[22] = 9;
    CHECK(decode_error([&] { decode_l2(bad_dlc); }) == ErrorCode::BadLength);

    auto flipped = good;
    flipped[25] ^= 0x01;
    CHECK(decode_error([&] { decode_l2(flipped); }) == ErrorCode::BadChecksum);

    auto reserved = good;
    reserved[18] |= 0x40;
    refresh_fcs(reserved);
    CHECK(decode_error([&] { decode_l2(reserved); }) == ErrorCode::BadHeader);
}

TEST_CASE("SOME/IP decode errors") {
    SomeIpFields f;
    f.src_mac = kGwMac.bytes;
    f.pcp = 2;
    f.tos = 0x10 << 2;
    f.src_ip = kGwIp.value;
    f.dst_ip = Ipv4Addr::from_octets(239, 0, 0, 1).value;
    f.sport = 30491;
    f.message_id = 0x101;
    f.data = kPattern;
    REQUIRE_NOTHROW(decode_someip(oracle_someip(f)));

    auto bad_port = f;
    bad_port.dport = 30491;
    CHECK(decode_error([&] { decode_someip(oracle_someip(bad_port)); }) == ErrorCode::BadPort);

    auto bad_len = f;
    bad_len.someip_length = 18;
    CHECK(decode_error([&] { decode_someip(oracle_someip(bad_len)); }) == ErrorCode::BadLength);

    auto pcp_mismatch = f;
    pcp_mismatch.pcp = 5;
    CHECK(decode_error([&] { decode_someip(oracle_someip(pcp_mismatch)); }) == ErrorCode::BadHeader);

    auto not_group = f;
    not_group.dst_ip = Ipv4Addr::from_octets(10, 0, 0, 3).value;
    CHECK(decode_error([&] { decode_someip(oracle_someip(not_group)); }) == ErrorCode::BadDestination);

    auto wrong_mac = f;
    wrong_mac.dst_mac = std::array<std::uint8_t, 6>{0x01, 0x00, 0x5E, 0x00, 0x00, 0x09};
    CHECK(decode_error([&] { decode_someip(oracle_someip(wrong_mac)); }) == ErrorCode::BadDestination);

    auto bad_type = f;
    bad_type.message_type = 0x00;
    CHECK(decode_error([&] { decode_someip(oracle_someip(bad_type)); }) == ErrorCode::BadHeader);

    auto corrupted = oracle_someip(f);
    corrupted[70] ^= 0xFF;  // data byte, UDP checksum no longer matches
    refresh_fcs(corrupted);
    CHECK(decode_error([&] { decode_someip(corrupted); }) == ErrorCode::BadChecksum);

    auto ip_corrupt = oracle_someip(f);
    ip_corrupt[18 + 8] = 64;  // TTL, IP header checksum no longer matches
    refresh_fcs(ip_corrupt);
    CHECK(decode_error([&] { decode_someip(ip_corrupt); }) == ErrorCode::BadChecksum);

    auto fcs = oracle_someip(f);
    fcs.back() ^= 0x01;
    CHECK(decode_error([&] { decode_someip(fcs); }) == ErrorCode::BadChecksum);

    auto l2 = encode_l2({0x101, false, 1, 1, 2}, {0x101, false, kPattern}, kGwMac);
    CHECK(decode_error([&] { decode_someip(l2); }) == ErrorCode::BadEtherType);
}

TEST_CASE("randomized round trip agrees with the oracle") {
    std::mt19937_64 rng(20240611);
    auto pick = [&](std::uint64_t n) { return static_cast<std::uint32_t>(rng() % n); };
    const std::uint32_t extremes[] = {0, 1, 0x7FF, 0x800, 0x1FFFFFFE, 0x1FFFFFFF};
    for (int i = 0; i < 10000; ++i) {
        CanFrame f;
        f.extended = pick(2) == 1;
        const std::uint32_t limit = f.extended ? kMaxExtendedId : kMaxStandardId;
        if (i % 10 == 0) {
            f.can_id = extremes[pick(6)];
            if (f.can_id > kMaxStandardId) f.extended = true;
        } else {
            f.can_id = pick(std::uint64_t{limit} + 1);
        }
        f.data.resize(i % 9 == 0 ? 0 : pick(9));
        for (auto& byte : f.data) byte = static_cast<std::uint8_t>(pick(256));
        const FlowMeta meta{f.can_id, f.extended, static_cast<std::uint16_t>(1 + pick(kMaxDomain)),
                            static_cast<std::uint16_t>(1 + pick(65535)), static_cast<std::uint8_t>(pick(8))};
        MacAddr src{{0x02, 0, 0, 0, static_cast<std::uint8_t>(pick(256)), static_cast<std::uint8_t>(pick(256))}};
        const auto src_ip = Ipv4Addr::from_octets(10, 0, static_cast<std::uint8_t>(pick(256)), static_cast<std::uint8_t>(pick(256)));

        const auto l2 = encode_l2(meta, f, src);
        REQUIRE(l2 == oracle_l2(f.can_id, f.extended, meta.domain, meta.priority, f.data, src.bytes));
        const auto d2 = decode_l2(l2);
        REQUIRE(d2.frame == f);
        REQUIRE(d2.vlan_id == meta.domain);
        REQUIRE(d2.pcp == meta.priority);
        REQUIRE(l2.size() == 64);

        const TunnelGroup group = pick(2) ? TunnelGroup{GroupKind::Domain, meta.domain}
                                          : TunnelGroup{GroupKind::Topic, meta.topic};
        const auto s = encode_someip(meta, f, {src, src_ip}, group);
        SomeIpFields of;
        of.src_mac = src.bytes;
        of.pcp = meta.priority;
        of.tos = static_cast<unsigned>(meta.priority << 3) << 2;
        of.src_ip = src_ip.value;
        of.dst_ip = group_address(group).value;
        of.sport = 30490u + meta.domain;
        of.message_id = f.can_id | (f.extended ? 0x80000000u : 0);
        of.data = f.data;
        REQUIRE(s == oracle_someip(of));
        const auto ds = decode_someip(s);
        REQUIRE(ds.frame == f);
        REQUIRE(ds.group == group);
        REQUIRE(ds.priority() == meta.priority);
        REQUIRE(ds.pcp == meta.priority);
        REQUIRE(s.size() >= kMinFrameLen);
        REQUIRE(s.size() <= kMaxFrameLen);
        REQUIRE(s.size() == wire_overhead(Strategy::Domain, f));
    }
}

TEST_CASE("header peeking") {
    const auto l2 = encode_l2({0x100, false, 1, 1, 3}, {0x100, false, kPattern}, kGwMac);
    const auto h = peek_headers(l2);
    CHECK(h.dst_mac == flow_mac(0x100));
    CHECK(h.vlan_id == 1);
    CHECK(h.ethertype == kCanEtherType);
    CHECK_FALSE(h.transport);

    const auto s = encode_someip({0x101, false, 1, 1, 2}, {0x101, false, kPattern}, {kGwMac, kGwIp},
                                 {GroupKind::Domain, 1});
    const auto hs = peek_headers(s);
    REQUIRE(hs.transport);
    CHECK(hs.transport->src_ip == kGwIp);
    CHECK(hs.transport->dst_ip.to_string() == "239.0.0.1");
    CHECK(hs.transport->dst_port == 30490);
    CHECK(hs.ethertype == kIpv4EtherType);

    CHECK(decode_error([&] { peek_headers(std::span(l2).first(10)); }) == ErrorCode::TruncatedFrame);
}

TEST_CASE("pcap output") {
    const auto l2 = encode_l2({0x100, false, 1, 1, 3}, {0x100, false, kPattern}, kGwMac);
    std::ostringstream os;
    const std::vector<PcapRecord> records{{1'500'000, l2}};
    write_pcap(os, records);
    const auto text = os.str();
    const Bytes b(text.begin(), text.end());
    REQUIRE(b.size() == 24 + 16 + 60);
    CHECK(Bytes(b.begin(), b.begin() + 4) == Bytes{0xD4, 0xC3, 0xB2, 0xA1});
    CHECK(b[20] == 1);                 // LINKTYPE_ETHERNET
    CHECK(b[24] == 1);                 // seconds
    CHECK(b[28] == 0x20);              // 500000 us = 0x0007A120
    CHECK(b[32] == 60);                // captured length, FCS stripped
    CHECK(Bytes(b.begin() + 40, b.end()) == Bytes(l2.begin(), l2.end() - 4));
}
