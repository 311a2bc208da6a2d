#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "flowsep/matrix.hpp"
#include "flowsep/net.hpp"
#include "flowsep/strategy.hpp"

namespace flowsep::codec {

inline constexpr std::uint16_t kVlanTpid = 0x8100;
inline constexpr std::uint16_t kCanEtherType = 0x88B5;
inline constexpr std::uint16_t kIpv4EtherType = 0x0800;
inline constexpr std::uint16_t kSomeIpPort = 30490;
inline constexpr std::size_t kTaggedHeaderLen = 18;  // MACs + 802.1Q tag + EtherType
inline constexpr std::size_t kFcsLen = 4;
inline constexpr std::size_t kMinTaggedPayload = 42;
inline constexpr std::size_t kMinFrameLen = 64;
inline constexpr std::size_t kMaxFrameLen = 1518;
inline constexpr std::size_t kL2PayloadHeader = 5;   // CAN id word + dlc
inline constexpr std::size_t kIpv4HeaderLen = 20;
inline constexpr std::size_t kUdpHeaderLen = 8;
inline constexpr std::size_t kSomeIpHeaderLen = 16;

struct CanFrame {
    CanId can_id = 0;
    bool extended = false;
    std::vector<std::uint8_t> data;

    std::size_t dlc() const { return data.size(); }
    /// Throws InvalidFrame on dlc > 8 or an identifier outside its range.
    void validate() const;

    bool operator==(const CanFrame&) const = default;
};

/// The control-flow attributes an embedding needs.
struct FlowMeta {
    CanId can_id = 0;
    bool extended = false;
    std::uint16_t domain = 0;
    std::uint16_t topic = 0;
    std::uint8_t priority = 0;

    static FlowMeta of(const ControlFlow& cf) { return {cf.can_id, cf.extended, cf.domain, cf.topic, cf.priority}; }
};

enum class GroupKind : std::uint8_t { Domain, Topic };

struct TunnelGroup {
    GroupKind kind = GroupKind::Domain;
    std::uint16_t label = 0;

    bool operator==(const TunnelGroup&) const = default;
};

// --- address plan -----------------------------------------------------------

/// 03:00:<29-bit CAN id, big-endian>.
MacAddr flow_mac(CanId id);
/// Domains live in 239.0.0.0/16 (239.0.0.<d> for d < 256), topics in 239.1.0.0/16.
Ipv4Addr group_address(TunnelGroup group);
std::optional<TunnelGroup> group_of_address(Ipv4Addr addr);
/// RFC 1112 mapping 01:00:5e + low 23 bits of the group address.
MacAddr ipv4_multicast_mac(Ipv4Addr addr);
inline std::uint8_t dscp_of_priority(std::uint8_t priority) { return static_cast<std::uint8_t>(priority << 3); }

// --- exposed layer 2 embedding ----------------------------------------------

struct L2Decoded {
    MacAddr dst_mac;
    MacAddr src_mac;
    std::uint16_t vlan_id = 0;
    std::uint8_t pcp = 0;
    CanFrame frame;
};

/// Full on-wire frame including FCS.
std::vector<std::uint8_t> encode_l2(const FlowMeta& meta, const CanFrame& frame, MacAddr src_mac);
L2Decoded decode_l2(std::span<const std::uint8_t> bytes);

// --- hidden SOME/IP tunnel embedding ----------------------------------------

struct Endpoint {
    MacAddr mac;
    Ipv4Addr ip;
};

struct SomeIpDecoded {
    MacAddr dst_mac;
    MacAddr src_mac;
    std::uint8_t pcp = 0;
    std::uint8_t dscp = 0;
    Ipv4Addr src_ip;
    Ipv4Addr dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    TunnelGroup group;
    std::uint32_t message_id = 0;
    CanFrame frame;

    std::uint8_t priority() const { return static_cast<std::uint8_t>(dscp >> 3); }
};

/// UDP source port of the per-domain socket.
inline std::uint16_t someip_source_port(std::uint16_t domain) { return static_cast<std::uint16_t>(kSomeIpPort + domain); }

std::vector<std::uint8_t> encode_someip(const FlowMeta& meta, const CanFrame& frame, const Endpoint& src,
                                        TunnelGroup group);
SomeIpDecoded decode_someip(std::span<const std::uint8_t> bytes);

// --- header peeking for switches --------------------------------------------

/// The fields a match pipeline can see without touching the application layer.
struct HeaderView {
    MacAddr dst_mac;
    MacAddr src_mac;
    std::optional<std::uint16_t> vlan_id;
    std::uint16_t ethertype = 0;
    struct Transport {
        Ipv4Addr src_ip;
        Ipv4Addr dst_ip;
        std::uint16_t src_port = 0;
        std::uint16_t dst_port = 0;
    };
    std::optional<Transport> transport;
};

/// Throws TruncatedFrame when the Ethernet header itself is incomplete.
HeaderView peek_headers(std::span<const std::uint8_t> bytes);

// --- accounting ---------------------------------------------------------------

/// Exact on-wire size (VLAN tag and FCS included) of one CAN frame under a
/// strategy, one packet per frame.
std::size_t wire_overhead(Strategy strategy, const CanFrame& frame);

struct PcapRecord {
    std::int64_t time_us = 0;
    std::vector<std::uint8_t> frame;  // as produced by the encoders, FCS included
};

/// Classic pcap, LINKTYPE_ETHERNET, microsecond timestamps. FCS is stripped.
void write_pcap(std::ostream& out, std::span<const PcapRecord> records);

}  // namespace flowsep::codec
