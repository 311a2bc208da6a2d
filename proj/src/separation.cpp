#include "flowsep/separation.hpp"

#include <algorithm>
#include <limits>

#include "flowsep/error.hpp"

namespace flowsep {

codec::TunnelGroup tunnel_group(const ControlFlow& cf, Strategy strategy) {
    if (strategy == Strategy::Domain) return {codec::GroupKind::Domain, cf.domain};
    if (strategy == Strategy::Topic) return {codec::GroupKind::Topic, cf.topic};
    throw Error(ErrorCode::InvalidArgument, "message", "exposed embedding has no tunnel group");
}

MatchKey header_key(const ControlFlow& cf, Strategy strategy, const Node& sender) {
    if (strategy == Strategy::Message) return L2Key{codec::flow_mac(cf.can_id), cf.domain};
    return L3Key{sender.ip, codec::group_address(tunnel_group(cf, strategy)), codec::kSomeIpPort};
}

bool key_matches(const MatchKey& key, const codec::HeaderView& h) {
    if (const auto* l2 = std::get_if<L2Key>(&key))
        return h.ethertype == codec::kCanEtherType && h.vlan_id && *h.vlan_id == l2->vlan_id &&
               h.dst_mac == l2->dst_mac;
    const auto& l3 = std::get<L3Key>(key);
    return h.transport && h.transport->src_ip == l3.src_ip && h.transport->dst_ip == l3.dst_ip &&
           h.transport->dst_port == l3.dst_port;
}

std::string describe(const MatchKey& key) {
    if (const auto* l2 = std::get_if<L2Key>(&key))
        return "dst_mac=" + l2->dst_mac.to_string() + ",vlan=" + std::to_string(l2->vlan_id);
    const auto& l3 = std::get<L3Key>(key);
    return "src_ip=" + l3.src_ip.to_string() + ",dst_ip=" + l3.dst_ip.to_string() +
           ",udp_dst=" + std::to_string(l3.dst_port);
}

namespace {

std::string nf_name(Strategy s, std::uint32_t group, const std::string& source) {
    switch (s) {
    case Strategy::Message: return "msg:" + format_can_id(group) + "@" + source;
    case Strategy::Domain: return "dom:" + std::to_string(group) + "@" + source;
    case Strategy::Topic: return "top:" + std::to_string(group) + "@" + source;
    }
    return {};
}

}  // namespace

std::vector<NetworkFlow> derive_nfs(const CommMatrix& matrix, const Topology& topo, const Placement& placement,
                                    Strategy strategy) {
    std::map<std::pair<std::string, std::uint32_t>, NetworkFlow> grouped;
    for (auto id : placement.backbone()) {
        const auto& cf = matrix.at(id);
        const auto& source = placement.source_gateway.at(id);
        const std::uint32_t group = strategy == Strategy::Message  ? cf.can_id
                                    : strategy == Strategy::Domain ? cf.domain
                                                                   : cf.topic;
        auto [it, inserted] = grouped.try_emplace({source, group});
        auto& nf = it->second;
        if (inserted) {
            nf.id = nf_name(strategy, group, source);
            nf.strategy = strategy;
            nf.group = group;
            nf.key = header_key(cf, strategy, topo.node(source));
            nf.source = source;
            if (strategy != Strategy::Message) nf.udp_src_port = codec::someip_source_port(cf.domain);
        } else if (nf.udp_src_port && *nf.udp_src_port != codec::someip_source_port(cf.domain)) {
            nf.udp_src_port.reset();  // topic spans domains
        }
        nf.carried.insert(id);
        const auto& dests = placement.dest_gateways.at(id);
        nf.dests.insert(dests.begin(), dests.end());
    }

    std::vector<NetworkFlow> out;
    for (auto& [key, nf] : grouped) {
        const auto tree = forwarding_path(topo, nf.source, nf.dests);
        for (const auto& p : topo.ports(nf.source))
            if (const auto* n = topo.find_node(p.peer); n && n->kind == NodeKind::Switch)
                for (const auto& hop : tree.hops)
                    if (hop.switch_name == p.peer && hop.in_port == p.peer_port)
                        nf.ingress_binding.emplace(hop.switch_name, hop.in_port);
        out.push_back(std::move(nf));
    }
    return out;
}

NfStats nf_stats(const std::vector<NetworkFlow>& nfs) {
    NfStats s;
    if (nfs.empty()) return s;
    s.n_nfs = nfs.size();
    s.min_cfs = std::numeric_limits<std::size_t>::max();
    std::size_t total = 0;
    for (const auto& nf : nfs) {
        const auto n = nf.carried.size();
        total += n;
        if (n > 1) ++s.n_nfs_multi;
        s.min_cfs = std::min(s.min_cfs, n);
        s.max_cfs = std::max(s.max_cfs, n);
        ++s.dest_histogram[nf.dests.size()];
    }
    s.avg_cfs = static_cast<double>(total) / static_cast<double>(nfs.size());
    return s;
}

RuleTables synthesize_rules(const std::vector<NetworkFlow>& nfs, const Topology& topo) {
    RuleTables tables;
    for (const auto& sw : topo.switches()) tables[sw];
    for (const auto& nf : nfs) {
        const auto tree = forwarding_path(topo, nf.source, nf.dests);
        for (const auto& hop : tree.hops)
            tables[hop.switch_name].push_back(
                FlowRule{hop.switch_name, kFlowRulePriority, hop.in_port, nf.key, hop.out_ports, nf.id});
    }
    for (auto& [sw, rules] : tables) {
        std::sort(rules.begin(), rules.end(), [](const FlowRule& a, const FlowRule& b) {
            return std::tie(a.in_port, a.key) < std::tie(b.in_port, b.key);
        });
        for (std::size_t i = 1; i < rules.size(); ++i)
            if (rules[i].in_port == rules[i - 1].in_port && rules[i].key == rules[i - 1].key)
                throw Error(ErrorCode::DuplicateRule, sw, describe(rules[i].key));
    }
    return tables;
}

Deployment deploy(const CommMatrix& matrix, const Topology& topo, Strategy strategy) {
    Deployment d;
    d.strategy = strategy;
    d.placement = place(matrix, topo);
    d.nfs = derive_nfs(matrix, topo, d.placement, strategy);
    d.rules = synthesize_rules(d.nfs, topo);
    return d;
}

}  // namespace flowsep
