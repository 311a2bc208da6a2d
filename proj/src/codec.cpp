#include "flowsep/codec.hpp"

#include <algorithm>

#include <zlib.h>

#include "flowsep/error.hpp"

namespace flowsep {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Message: return "message";
    case Strategy::Domain: return "domain";
    case Strategy::Topic: return "topic";
    }
    return "?";
}

Strategy parse_strategy(std::string_view text) {
    if (text == "message") return Strategy::Message;
    if (text == "domain") return Strategy::Domain;
    if (text == "topic") return Strategy::Topic;
    throw Error(ErrorCode::InvalidArgument, std::string(text), "strategy must be message, domain or topic");
}

}  // namespace flowsep

namespace flowsep::codec {

namespace {

constexpr std::uint32_t kExtendedFlag = 0x80000000u;
constexpr std::uint8_t kSomeIpProtocolVersion = 1;
constexpr std::uint8_t kSomeIpInterfaceVersion = 1;
constexpr std::uint8_t kSomeIpNotification = 0x02;
constexpr std::uint8_t kIpTtl = 1;
constexpr std::uint8_t kIpProtoUdp = 17;

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void mac(const MacAddr& m) { out_.insert(out_.end(), m.bytes.begin(), m.bytes.end()); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void pad_to(std::size_t n) {
        if (out_.size() < n) out_.resize(n, 0);
    }
    void patch16(std::size_t at, std::uint16_t v) {
        out_[at] = static_cast<std::uint8_t>(v >> 8);
        out_[at + 1] = static_cast<std::uint8_t>(v);
    }
    std::size_t size() const { return out_.size(); }
    std::vector<std::uint8_t>& buffer() { return out_; }

private:
    std::vector<std::uint8_t> out_;
};

std::uint16_t rd16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::uint32_t rd32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t{rd16(b, at)} << 16) | rd16(b, at + 2);
}

MacAddr rdmac(std::span<const std::uint8_t> b, std::size_t at) {
    MacAddr m;
    std::copy_n(b.begin() + static_cast<std::ptrdiff_t>(at), 6, m.bytes.begin());
    return m;
}

std::uint32_t fcs_of(std::span<const std::uint8_t> b) {
    return static_cast<std::uint32_t>(crc32(0L, b.data(), static_cast<uInt>(b.size())));
}

void append_fcs(std::vector<std::uint8_t>& frame) {
    const auto crc = fcs_of(frame);
    for (int i = 0; i < 4; ++i) frame.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
}

bool fcs_ok(std::span<const std::uint8_t> frame) {
    const auto body = frame.first(frame.size() - kFcsLen);
    const auto crc = fcs_of(body);
    for (int i = 0; i < 4; ++i)
        if (frame[body.size() + i] != static_cast<std::uint8_t>(crc >> (8 * i))) return false;
    return true;
}

/// One's-complement sum folded to 16 bits (not yet inverted).
std::uint32_t ones_sum(std::span<const std::uint8_t> b, std::uint32_t acc = 0) {
    std::size_t i = 0;
    for (; i + 1 < b.size(); i += 2) acc += static_cast<std::uint32_t>((b[i] << 8) | b[i + 1]);
    if (i < b.size()) acc += static_cast<std::uint32_t>(b[i] << 8);
    while (acc >> 16) acc = (acc & 0xFFFF) + (acc >> 16);
    return acc;
}

std::uint32_t udp_pseudo_sum(Ipv4Addr src, Ipv4Addr dst, std::uint16_t udp_len) {
    std::uint32_t acc = 0;
    acc += src.value >> 16;
    acc += src.value & 0xFFFF;
    acc += dst.value >> 16;
    acc += dst.value & 0xFFFF;
    acc += kIpProtoUdp;
    acc += udp_len;
    return acc;
}

/// Common tag checks. A frame that is untagged but otherwise carries the
/// expected EtherType is reported as a missing tag; anything else is a
/// foreign EtherType.
void expect_tagged(std::span<const std::uint8_t> b, std::uint16_t ethertype) {
    const auto outer = rd16(b, 12);
    if (outer != kVlanTpid) {
        if (outer == ethertype) throw Error(ErrorCode::MissingVlanTag, "frame");
        throw Error(ErrorCode::BadEtherType, "frame", "EtherType " + std::to_string(outer));
    }
    const auto inner = rd16(b, 16);
    if (inner != ethertype) throw Error(ErrorCode::BadEtherType, "frame", "EtherType " + std::to_string(inner));
}

void check_meta(const FlowMeta& meta, const CanFrame& frame) {
    frame.validate();
    if (meta.can_id != frame.can_id)
        throw Error(ErrorCode::InvalidFrame, format_can_id(frame.can_id), "frame id differs from flow id");
    if (meta.priority > kMaxPriority) throw Error(ErrorCode::PriorityOutOfRange, format_can_id(meta.can_id));
}

std::uint32_t id_word(const CanFrame& frame) { return frame.can_id | (frame.extended ? kExtendedFlag : 0u); }

CanFrame frame_from_word(std::uint32_t word, std::span<const std::uint8_t> data) {
    if (word & 0x60000000u) throw Error(ErrorCode::BadHeader, "frame", "reserved identifier bits set");
    CanFrame f;
    f.extended = (word & kExtendedFlag) != 0;
    f.can_id = word & kMaxExtendedId;
    if (!f.extended && f.can_id > kMaxStandardId)
        throw Error(ErrorCode::BadHeader, format_can_id(f.can_id), "standard identifier exceeds 11 bits");
    f.data.assign(data.begin(), data.end());
    return f;
}

}  // namespace

void CanFrame::validate() const {
    if (data.size() > kMaxCanPayload) throw Error(ErrorCode::InvalidFrame, format_can_id(can_id), "dlc exceeds 8");
    if (can_id > (extended ? kMaxExtendedId : kMaxStandardId))
        throw Error(ErrorCode::InvalidFrame, format_can_id(can_id), "identifier out of range");
}

MacAddr flow_mac(CanId id) {
    return MacAddr{{0x03, 0x00, static_cast<std::uint8_t>((id >> 24) & 0x1F), static_cast<std::uint8_t>(id >> 16),
                    static_cast<std::uint8_t>(id >> 8), static_cast<std::uint8_t>(id)}};
}

Ipv4Addr group_address(TunnelGroup group) {
    if (group.label == 0) throw Error(ErrorCode::InvalidArgument, "group", "group label 0 is reserved");
    if (group.kind == GroupKind::Domain && group.label > kMaxDomain)
        throw Error(ErrorCode::DomainNotIpRepresentable, std::to_string(group.label));
    const auto second = static_cast<std::uint8_t>(group.kind == GroupKind::Domain ? 0 : 1);
    return Ipv4Addr::from_octets(239, second, static_cast<std::uint8_t>(group.label >> 8),
                                 static_cast<std::uint8_t>(group.label));
}

std::optional<TunnelGroup> group_of_address(Ipv4Addr addr) {
    if (addr.octet(0) != 239 || addr.octet(1) > 1) return std::nullopt;
    const auto label = static_cast<std::uint16_t>((addr.octet(2) << 8) | addr.octet(3));
    if (label == 0) return std::nullopt;
    if (addr.octet(1) == 0) {
        if (label > kMaxDomain) return std::nullopt;
        return TunnelGroup{GroupKind::Domain, label};
    }
    return TunnelGroup{GroupKind::Topic, label};
}

MacAddr ipv4_multicast_mac(Ipv4Addr addr) {
    return MacAddr{{0x01, 0x00, 0x5E, static_cast<std::uint8_t>(addr.octet(1) & 0x7F), addr.octet(2), addr.octet(3)}};
}

std::vector<std::uint8_t> encode_l2(const FlowMeta& meta, const CanFrame& frame, MacAddr src_mac) {
    check_meta(meta, frame);
    if (meta.domain < 1 || meta.domain > kMaxDomain)
        throw Error(ErrorCode::DomainNotVlanRepresentable, format_can_id(meta.can_id), std::to_string(meta.domain));

    Writer w;
    w.mac(flow_mac(frame.can_id));
    w.mac(src_mac);
    w.u16(kVlanTpid);
    w.u16(static_cast<std::uint16_t>((meta.priority << 13) | meta.domain));
    w.u16(kCanEtherType);
    w.u32(id_word(frame));
    w.u8(static_cast<std::uint8_t>(frame.dlc()));
    w.bytes(frame.data);
    w.pad_to(kTaggedHeaderLen + kMinTaggedPayload);
    append_fcs(w.buffer());
    return std::move(w.buffer());
}

L2Decoded decode_l2(std::span<const std::uint8_t> b) {
    if (b.size() < kMinFrameLen) throw Error(ErrorCode::TruncatedFrame, "frame", std::to_string(b.size()) + " bytes");
    expect_tagged(b, kCanEtherType);

    L2Decoded out;
    out.dst_mac = rdmac(b, 0);
    out.src_mac = rdmac(b, 6);
    if (out.dst_mac.bytes[0] != 0x03 || out.dst_mac.bytes[1] != 0x00 || (out.dst_mac.bytes[2] & 0xE0) != 0)
        throw Error(ErrorCode::BadDestination, out.dst_mac.to_string(), "not a control-flow group address");
    const auto tci = rd16(b, 14);
    out.pcp = static_cast<std::uint8_t>(tci >> 13);
    out.vlan_id = tci & 0x0FFF;

    const std::size_t payload_len = b.size() - kTaggedHeaderLen - kFcsLen;
    const auto word = rd32(b, kTaggedHeaderLen);
    const std::size_t dlc = b[kTaggedHeaderLen + 4];
    if (dlc > kMaxCanPayload) throw Error(ErrorCode::BadLength, "frame", "dlc " + std::to_string(dlc));
    if (kL2PayloadHeader + dlc > payload_len) throw Error(ErrorCode::TruncatedFrame, "frame", "payload shorter than dlc");

    const CanId mac_id = (CanId{out.dst_mac.bytes[2]} << 24) | (CanId{out.dst_mac.bytes[3]} << 16) |
                         (CanId{out.dst_mac.bytes[4]} << 8) | out.dst_mac.bytes[5];
    if ((word & kMaxExtendedId) != mac_id)
        throw Error(ErrorCode::MacIdMismatch, format_can_id(mac_id),
                    "payload carries " + format_can_id(word & kMaxExtendedId));
    out.frame = frame_from_word(word, b.subspan(kTaggedHeaderLen + kL2PayloadHeader, dlc));
    if (!fcs_ok(b)) throw Error(ErrorCode::BadChecksum, "fcs");
    return out;
}

std::vector<std::uint8_t> encode_someip(const FlowMeta& meta, const CanFrame& frame, const Endpoint& src,
                                        TunnelGroup group) {
    check_meta(meta, frame);
    if (meta.domain < 1 || meta.domain > kMaxDomain)
        throw Error(ErrorCode::DomainOutOfRange, format_can_id(meta.can_id), std::to_string(meta.domain));
    const auto dst_ip = group_address(group);
    const auto dscp = dscp_of_priority(meta.priority);

    const std::size_t someip_payload = 1 + frame.dlc();
    const auto udp_len = static_cast<std::uint16_t>(kUdpHeaderLen + kSomeIpHeaderLen + someip_payload);
    const auto ip_len = static_cast<std::uint16_t>(kIpv4HeaderLen + udp_len);

    Writer w;
    w.mac(ipv4_multicast_mac(dst_ip));
    w.mac(src.mac);
    w.u16(kVlanTpid);
    w.u16(static_cast<std::uint16_t>(meta.priority << 13));  // priority tag, VID 0
    w.u16(kIpv4EtherType);

    const std::size_t ip_at = w.size();
    w.u8(0x45);
    w.u8(static_cast<std::uint8_t>(dscp << 2));
    w.u16(ip_len);
    w.u16(0);       // identification
    w.u16(0x4000);  // DF, never fragmented
    w.u8(kIpTtl);
    w.u8(kIpProtoUdp);
    w.u16(0);
    w.u32(src.ip.value);
    w.u32(dst_ip.value);
    w.patch16(ip_at + 10, static_cast<std::uint16_t>(~ones_sum(std::span(w.buffer()).subspan(ip_at, kIpv4HeaderLen))));

    const std::size_t udp_at = w.size();
    w.u16(someip_source_port(meta.domain));
    w.u16(kSomeIpPort);
    w.u16(udp_len);
    w.u16(0);

    w.u32(id_word(frame));  // message id
    w.u32(static_cast<std::uint32_t>(8 + someip_payload));
    w.u32(0);  // request id
    w.u8(kSomeIpProtocolVersion);
    w.u8(kSomeIpInterfaceVersion);
    w.u8(kSomeIpNotification);
    w.u8(0x00);  // return code
    w.u8(static_cast<std::uint8_t>(frame.dlc()));
    w.bytes(frame.data);

    auto sum = ones_sum(std::span(w.buffer()).subspan(udp_at, udp_len), udp_pseudo_sum(src.ip, dst_ip, udp_len));
    while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
    auto checksum = static_cast<std::uint16_t>(~sum);
    if (checksum == 0) checksum = 0xFFFF;
    w.patch16(udp_at + 6, checksum);

    w.pad_to(kTaggedHeaderLen + kMinTaggedPayload);
    append_fcs(w.buffer());
    return std::move(w.buffer());
}

SomeIpDecoded decode_someip(std::span<const std::uint8_t> b) {
    if (b.size() < kMinFrameLen) throw Error(ErrorCode::TruncatedFrame, "frame", std::to_string(b.size()) + " bytes");
    expect_tagged(b, kIpv4EtherType);

    SomeIpDecoded out;
    out.dst_mac = rdmac(b, 0);
    out.src_mac = rdmac(b, 6);
    out.pcp = static_cast<std::uint8_t>(rd16(b, 14) >> 13);

    const std::size_t ip = kTaggedHeaderLen;
    if (b[ip] != 0x45) throw Error(ErrorCode::BadHeader, "ipv4", "expected version 4 without options");
    if (b[ip + 9] != kIpProtoUdp) throw Error(ErrorCode::BadHeader, "ipv4", "not UDP");
    if ((rd16(b, ip + 6) & 0x3FFF) != 0) throw Error(ErrorCode::BadHeader, "ipv4", "fragment");
    const std::size_t ip_len = rd16(b, ip + 2);
    const std::size_t min_ip = kIpv4HeaderLen + kUdpHeaderLen + kSomeIpHeaderLen + 1;
    if (ip_len < min_ip || kTaggedHeaderLen + ip_len + kFcsLen > b.size())
        throw Error(ErrorCode::BadLength, "ipv4", "total length " + std::to_string(ip_len));
    if (ones_sum(b.subspan(ip, kIpv4HeaderLen)) != 0xFFFF) throw Error(ErrorCode::BadChecksum, "ipv4");
    out.dscp = static_cast<std::uint8_t>(b[ip + 1] >> 2);
    if ((out.dscp & 0x07) != 0 || (out.dscp >> 3) != out.pcp)
        throw Error(ErrorCode::BadHeader, "ipv4", "DSCP does not match the priority tag");
    out.src_ip = Ipv4Addr{rd32(b, ip + 12)};
    out.dst_ip = Ipv4Addr{rd32(b, ip + 16)};
    auto group = group_of_address(out.dst_ip);
    if (!group) throw Error(ErrorCode::BadDestination, out.dst_ip.to_string(), "not a tunnel group");
    if (out.dst_mac != ipv4_multicast_mac(out.dst_ip))
        throw Error(ErrorCode::BadDestination, out.dst_mac.to_string(), "MAC does not map the group address");
    out.group = *group;

    const std::size_t udp = ip + kIpv4HeaderLen;
    out.src_port = rd16(b, udp);
    out.dst_port = rd16(b, udp + 2);
    if (out.dst_port != kSomeIpPort) throw Error(ErrorCode::BadPort, std::to_string(out.dst_port));
    const std::size_t udp_len = rd16(b, udp + 4);
    if (udp_len != ip_len - kIpv4HeaderLen) throw Error(ErrorCode::BadLength, "udp", std::to_string(udp_len));

    const std::size_t sip = udp + kUdpHeaderLen;
    out.message_id = rd32(b, sip);
    const std::size_t someip_len = rd32(b, sip + 4);
    if (someip_len != udp_len - kUdpHeaderLen - 8) throw Error(ErrorCode::BadLength, "someip", std::to_string(someip_len));
    if (b[sip + 12] != kSomeIpProtocolVersion || b[sip + 14] != kSomeIpNotification)
        throw Error(ErrorCode::BadHeader, "someip", "unexpected protocol version or message type");
    const std::size_t payload = sip + kSomeIpHeaderLen;
    const std::size_t dlc = b[payload];
    if (dlc > kMaxCanPayload || someip_len != 8 + 1 + dlc)
        throw Error(ErrorCode::BadLength, "someip", "dlc " + std::to_string(dlc));
    out.frame = frame_from_word(out.message_id, b.subspan(payload + 1, dlc));

    if (rd16(b, udp + 6) != 0) {
        auto sum = ones_sum(b.subspan(udp, udp_len),
                            udp_pseudo_sum(out.src_ip, out.dst_ip, static_cast<std::uint16_t>(udp_len)));
        while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
        if (sum != 0xFFFF) throw Error(ErrorCode::BadChecksum, "udp");
    }
    if (!fcs_ok(b)) throw Error(ErrorCode::BadChecksum, "fcs");
    return out;
}

HeaderView peek_headers(std::span<const std::uint8_t> b) {
    if (b.size() < 14) throw Error(ErrorCode::TruncatedFrame, "frame");
    HeaderView h;
    h.dst_mac = rdmac(b, 0);
    h.src_mac = rdmac(b, 6);
    std::size_t at = 12;
    if (rd16(b, at) == kVlanTpid) {
        if (b.size() < 18) throw Error(ErrorCode::TruncatedFrame, "frame");
        h.vlan_id = rd16(b, 14) & 0x0FFF;
        at = 16;
    }
    h.ethertype = rd16(b, at);
    const std::size_t ip = at + 2;
    if (h.ethertype == kIpv4EtherType && b.size() >= ip + kIpv4HeaderLen + kUdpHeaderLen && (b[ip] >> 4) == 4 &&
        b[ip + 9] == kIpProtoUdp) {
        const std::size_t udp = ip + (b[ip] & 0x0F) * 4u;
        if (b.size() >= udp + kUdpHeaderLen)
            h.transport = HeaderView::Transport{Ipv4Addr{rd32(b, ip + 12)}, Ipv4Addr{rd32(b, ip + 16)}, rd16(b, udp),
                                                rd16(b, udp + 2)};
    }
    return h;
}

std::size_t wire_overhead(Strategy strategy, const CanFrame& frame) {
    frame.validate();
    const std::size_t content = strategy == Strategy::Message
                                    ? kL2PayloadHeader + frame.dlc()
                                    : kIpv4HeaderLen + kUdpHeaderLen + kSomeIpHeaderLen + 1 + frame.dlc();
    return kTaggedHeaderLen + std::max(kMinTaggedPayload, content) + kFcsLen;
}

void write_pcap(std::ostream& out, std::span<const PcapRecord> records) {
    auto le32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
        out.write(b, 4);
    };
    auto le16 = [&](std::uint16_t v) {
        char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
        out.write(b, 2);
    };
    le32(0xA1B2C3D4);
    le16(2);
    le16(4);
    le32(0);  // thiszone
    le32(0);  // sigfigs
    le32(65535);
    le32(1);  // LINKTYPE_ETHERNET
    for (const auto& r : records) {
        const auto len = r.frame.size() >= kFcsLen ? r.frame.size() - kFcsLen : r.frame.size();
        le32(static_cast<std::uint32_t>(r.time_us / 1000000));
        le32(static_cast<std::uint32_t>(r.time_us % 1000000));
        le32(static_cast<std::uint32_t>(len));
        le32(static_cast<std::uint32_t>(len));
        out.write(reinterpret_cast<const char*>(r.frame.data()), static_cast<std::streamsize>(len));
    }
}

}  // namespace flowsep::codec
