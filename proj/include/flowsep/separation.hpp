#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "flowsep/codec.hpp"
#include "flowsep/matrix.hpp"
#include "flowsep/strategy.hpp"
#include "flowsep/topology.hpp"

namespace flowsep {

/// Exposed embedding key: multicast flow MAC plus domain VLAN.
struct L2Key {
    MacAddr dst_mac;
    std::uint16_t vlan_id = 0;

    auto operator<=>(const L2Key&) const = default;
};

/// Tunnel key. The UDP source port is not matched: the source address
/// already binds the sender.
struct L3Key {
    Ipv4Addr src_ip;
    Ipv4Addr dst_ip;
    std::uint16_t dst_port = 0;

    auto operator<=>(const L3Key&) const = default;
};

using MatchKey = std::variant<L2Key, L3Key>;

/// Header key a packet of `cf` carries when `sender` emits it under `strategy`.
MatchKey header_key(const ControlFlow& cf, Strategy strategy, const Node& sender);
bool key_matches(const MatchKey& key, const codec::HeaderView& headers);
std::string describe(const MatchKey& key);

/// Tunnel group a flow rides under a tunnelling strategy.
codec::TunnelGroup tunnel_group(const ControlFlow& cf, Strategy strategy);

struct NetworkFlow {
    std::string id;
    Strategy strategy = Strategy::Message;
    std::uint32_t group = 0;  // CAN id, domain or topic
    MatchKey key;
    std::string source;
    std::set<std::string> dests;
    std::set<CanId> carried;
    std::optional<std::uint16_t> udp_src_port;                // informational, tunnels only
    std::set<std::pair<std::string, int>> ingress_binding;    // (switch, in_port) facing the source
};

/// Network flows for every backbone control flow, ordered by (source, group).
std::vector<NetworkFlow> derive_nfs(const CommMatrix& matrix, const Topology& topo, const Placement& placement,
                                    Strategy strategy);

struct NfStats {
    std::size_t n_nfs = 0;
    std::size_t n_nfs_multi = 0;
    std::size_t min_cfs = 0;
    double avg_cfs = 0.0;
    std::size_t max_cfs = 0;
    std::map<std::size_t, std::size_t> dest_histogram;  // #destinations -> #NFs
};

NfStats nf_stats(const std::vector<NetworkFlow>& nfs);

struct FlowRule {
    std::string switch_name;
    int priority = 0;
    int in_port = 0;
    MatchKey key;
    std::set<int> out_ports;
    std::string nf_id;
};

inline constexpr int kFlowRulePriority = 100;

/// Switch name -> rules sorted by (in_port, key). Every switch of the
/// topology has an entry; anything unmatched is dropped.
using RuleTables = std::map<std::string, std::vector<FlowRule>>;

RuleTables synthesize_rules(const std::vector<NetworkFlow>& nfs, const Topology& topo);

/// Everything the fabric needs for one strategy.
struct Deployment {
    Strategy strategy = Strategy::Message;
    Placement placement;
    std::vector<NetworkFlow> nfs;
    RuleTables rules;
};

Deployment deploy(const CommMatrix& matrix, const Topology& topo, Strategy strategy);

}  // namespace flowsep
