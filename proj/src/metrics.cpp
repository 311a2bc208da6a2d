#include "flowsep/metrics.hpp"

#include <algorithm>
#include <array>

#include "flowsep/error.hpp"

namespace flowsep {

namespace {

CfSet minus(const CfSet& a, const CfSet& b) {
    CfSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

bool is_edge(const Topology& topo, std::string_view name) {
    const auto* n = topo.find_node(name);
    return n && n->kind != NodeKind::Switch;
}

}  // namespace

Counts Counts::of(const PairMetrics& m) {
    return {m.maximum,     m.legitimate.size(), m.received.size(), m.oversupplied.size(),
            m.permitted.size(), m.forbidden.size()};
}

Counts& Counts::operator+=(const Counts& o) {
    maximum += o.maximum;
    legitimate += o.legitimate;
    received += o.received;
    oversupplied += o.oversupplied;
    permitted += o.permitted;
    forbidden += o.forbidden;
    return *this;
}

const PairMetrics* RelationTable::find(std::string_view src, std::string_view dst) const {
    for (const auto& p : pairs)
        if (p.src == src && p.dst == dst) return &p;
    return nullptr;
}

CfSet legitimate_set(const Placement& placement, std::string_view src, std::string_view dst) {
    CfSet out;
    for (auto id : placement.backbone())
        if (placement.source_gateway.at(id) == src && placement.dest_gateways.at(id).contains(std::string(dst)))
            out.insert(id);
    return out;
}

CfSet received_set(const std::vector<NetworkFlow>& nfs, std::string_view src, std::string_view dst) {
    CfSet out;
    for (const auto& nf : nfs)
        if (nf.source == src && nf.dests.contains(std::string(dst))) out.insert(nf.carried.begin(), nf.carried.end());
    return out;
}

CfSet permitted_set(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment,
                    std::string_view src, std::string_view dst) {
    std::map<MatchKey, const NetworkFlow*> from_src;
    for (const auto& nf : deployment.nfs)
        if (nf.source == src) from_src.emplace(nf.key, &nf);
    CfSet out;
    if (from_src.empty()) return out;
    const auto& node = topo.node(src);
    for (auto id : deployment.placement.backbone()) {
        auto it = from_src.find(header_key(matrix.at(id), deployment.strategy, node));
        if (it != from_src.end() && it->second->dests.contains(std::string(dst))) out.insert(id);
    }
    return out;
}

RelationTable relation_table(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment) {
    RelationTable t;
    t.strategy = deployment.strategy;
    t.nodes = topo.edge_nodes();
    t.backbone = deployment.placement.backbone();
    const CfSet universe(t.backbone.begin(), t.backbone.end());
    for (const auto& dst : t.nodes) {
        auto& dest_total = t.per_destination[dst];
        for (const auto& src : t.nodes) {
            if (src == dst) continue;
            PairMetrics m;
            m.src = src;
            m.dst = dst;
            m.maximum = universe.size();
            m.legitimate = legitimate_set(deployment.placement, src, dst);
            m.received = received_set(deployment.nfs, src, dst);
            m.permitted = permitted_set(matrix, topo, deployment, src, dst);
            m.oversupplied = minus(m.received, m.legitimate);
            m.forbidden = minus(universe, m.permitted);
            const auto c = Counts::of(m);
            dest_total += c;
            t.network += c;
            t.pairs.push_back(std::move(m));
        }
    }
    return t;
}

RelationTable relation_table(const CommMatrix& matrix, const Topology& topo, Strategy strategy) {
    return relation_table(matrix, topo, deploy(matrix, topo, strategy));
}

int percent(std::size_t part, std::size_t whole) {
    if (whole == 0) return 0;
    return static_cast<int>((200 * part + whole) / (2 * whole));
}

Shares bucket_shares(const Counts& c) {
    if (c.maximum == 0) return {};
    const std::array<std::size_t, 4> raw{c.legitimate, c.oversupplied, c.permitted - c.received, c.forbidden};
    std::array<int, 4> pct{};
    for (std::size_t i = 0; i < raw.size(); ++i) pct[i] = percent(raw[i], c.maximum);
    const int sum = pct[0] + pct[1] + pct[2] + pct[3];
    const auto largest = static_cast<std::size_t>(std::max_element(raw.begin(), raw.end()) - raw.begin());
    pct[largest] += 100 - sum;
    return {pct[0], pct[1], pct[2], pct[3]};
}

MonotonicityReport check_monotonicity(const CommMatrix& matrix, const Topology& topo) {
    MonotonicityReport r;
    r.spanning_topics = topics_spanning_domains(matrix);
    r.topics_refine_domains = r.spanning_topics.empty();

    const auto msg = relation_table(matrix, topo, Strategy::Message);
    const auto top = relation_table(matrix, topo, Strategy::Topic);
    const auto dom = relation_table(matrix, topo, Strategy::Domain);
    auto compare = [&](const RelationTable& fine, const RelationTable& coarse) {
        for (std::size_t i = 0; i < fine.pairs.size(); ++i) {
            const auto& f = fine.pairs[i];
            const auto& c = coarse.pairs[i];
            for (auto [name, fs, cs] : {std::tuple{"received", &f.received, &c.received},
                                        std::tuple{"permitted", &f.permitted, &c.permitted}}) {
                auto missing = minus(*fs, *cs);
                if (!missing.empty())
                    r.violations.push_back({f.src, f.dst, name, fine.strategy, coarse.strategy, std::move(missing)});
            }
        }
    };
    compare(msg, top);
    compare(top, dom);
    return r;
}

Compromise parse_compromise(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos || colon + 1 == text.size())
        throw Error(ErrorCode::InvalidArgument, std::string(text), "expected ecu:<name> or gw:<name>");
    const auto kind = text.substr(0, colon);
    Compromise c;
    c.name = std::string(text.substr(colon + 1));
    if (kind == "ecu")
        c.kind = Compromise::Kind::Ecu;
    else if (kind == "gw")
        c.kind = Compromise::Kind::Gateway;
    else
        throw Error(ErrorCode::InvalidArgument, std::string(text), "expected ecu:<name> or gw:<name>");
    return c;
}

AttackReport attack_reachability(const CommMatrix& matrix, const Topology& topo, Strategy strategy, CanId target,
                                 const Compromise& compromised) {
    const auto* cf = matrix.find(target);
    if (!cf) throw Error(ErrorCode::UnknownCf, format_can_id(target));

    AttackReport r;
    r.target_cf = target;
    r.strategy = strategy;
    r.compromised = compromised;
    if (compromised.kind == Compromise::Kind::Ecu) {
        const auto at = topo.attachment(compromised.name);
        if (!at) throw Error(ErrorCode::UnknownNode, compromised.name, "no such ECU");
        r.compromised_node = at->node;
    } else {
        if (!is_edge(topo, compromised.name)) throw Error(ErrorCode::UnknownNode, compromised.name, "no such gateway");
        r.compromised_node = compromised.name;
    }

    const auto deployment = deploy(matrix, topo, strategy);
    const Fabric fabric(matrix, topo, deployment);
    r.source_gateway = deployment.placement.source_gateway.at(target);
    r.dest_gateways = deployment.placement.dest_gateways.at(target);

    // Bus co-location is a property of the physical CAN wiring alone.
    std::set<std::pair<std::string, std::string>> endpoint_buses;
    for (const auto& ecu : cf->receivers)
        if (auto at = topo.attachment(ecu); at && !at->bus.empty()) endpoint_buses.emplace(at->node, at->bus);
    const auto sender_at = topo.attachment(cf->sender);
    if (sender_at && !sender_at->bus.empty()) endpoint_buses.emplace(sender_at->node, sender_at->bus);
    for (const auto& [node, bus] : endpoint_buses)
        for (const auto& ecu : topo.ecus_on(node, bus))
            if (ecu != cf->sender) r.bus_unpreventable.insert(ecu);

    const bool local = deployment.placement.local.at(target);
    for (const auto& node : topo.edge_nodes()) {
        auto reach = fabric.inject(node, target);
        bool hits = false;
        for (const auto& d : reach) hits = hits || r.dest_gateways.contains(d);
        if (hits) r.backbone_permitted_senders.insert(node);
        r.reachable_dests.emplace(node, std::move(reach));
    }
    if (!local)
        for (const auto& nf : deployment.nfs)
            if (nf.carried.contains(target))
                for (const auto& d : nf.dests)
                    if (!r.dest_gateways.contains(d)) r.oversupplied_receivers.insert(d);

    for (const auto& [name, info] : matrix.ecus()) {
        if (name == cf->sender || r.bus_unpreventable.contains(name)) continue;
        const auto at = topo.attachment(name);
        if (at && r.backbone_permitted_senders.contains(at->node)) r.additional_backbone_ecus.insert(name);
    }

    r.compromised_reach = r.reachable_dests.at(r.compromised_node);
    for (const auto& d : r.compromised_reach) r.compromised_backbone_reach = r.compromised_backbone_reach || r.dest_gateways.contains(d);
    if (compromised.kind == Compromise::Kind::Ecu) {
        r.compromised_unpreventable = r.bus_unpreventable.contains(compromised.name);
        const auto at = topo.attachment(compromised.name);
        r.strict_ingress_blocks = compromised.name != cf->sender &&
                                  !(sender_at && at->node == sender_at->node && at->bus == sender_at->bus);
    }
    return r;
}

std::string Discrepancy::describe() const {
    return metric + " " + src + "->" + dst + " " + format_can_id(cf) + ": static " + (in_static ? "yes" : "no") +
           ", simulated " + (in_simulation ? "yes" : "no");
}

OracleResult oracle_check(const CommMatrix& matrix, const Topology& topo, const Deployment& deployment,
                          std::size_t bound) {
    OracleResult result;
    result.strategy = deployment.strategy;
    result.backbone = deployment.placement.backbone().size();
    if (result.backbone > bound)
        throw Error(ErrorCode::InvalidArgument, std::to_string(result.backbone),
                    "backbone flow count exceeds oracle bound " + std::to_string(bound));

    const auto table = relation_table(matrix, topo, deployment);
    const Fabric fabric(matrix, topo, deployment);
    const auto log = fabric.emit_all();

    std::map<NodePair, CfSet> permitted;
    for (const auto& src : table.nodes)
        for (auto id : table.backbone)
            for (const auto& dst : fabric.inject(src, id)) permitted[{src, dst}].insert(id);

    auto lookup = [](const std::map<NodePair, CfSet>& m, const NodePair& key) {
        auto it = m.find(key);
        return it == m.end() ? CfSet{} : it->second;
    };
    auto compare = [&](const PairMetrics& p, const char* metric, const CfSet& stat, const CfSet& sim) {
        for (auto id : minus(stat, sim)) result.discrepancies.push_back({p.src, p.dst, metric, id, true, false});
        for (auto id : minus(sim, stat)) result.discrepancies.push_back({p.src, p.dst, metric, id, false, true});
    };
    for (const auto& p : table.pairs) {
        const NodePair key{p.src, p.dst};
        compare(p, "legitimate", p.legitimate, lookup(log.useful, key));
        compare(p, "received", p.received, lookup(log.received, key));
        compare(p, "permitted", p.permitted, lookup(permitted, key));
    }
    // Anything simulated between pairs the table does not list.
    std::set<NodePair> listed;
    for (const auto& p : table.pairs) listed.emplace(p.src, p.dst);
    for (const auto& [metric, sets] : {std::pair<const char*, const std::map<NodePair, CfSet>*>{"received", &log.received},
                                       {"permitted", &permitted}})
        for (const auto& [key, cfs] : *sets)
            if (!listed.contains(key))
                for (auto id : cfs) result.discrepancies.push_back({key.first, key.second, metric, id, false, true});
    return result;
}

OracleResult oracle_check(const CommMatrix& matrix, const Topology& topo, Strategy strategy, std::size_t bound) {
    return oracle_check(matrix, topo, deploy(matrix, topo, strategy), bound);
}

}  // namespace flowsep
