#include "flowsep/topology.hpp"

#include <algorithm>
#include <deque>

#include <nlohmann/json.hpp>

#include "flowsep/error.hpp"

namespace flowsep {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Topology::Topology(std::vector<std::string> zones, std::vector<Node> nodes, std::vector<Link> links,
                   std::vector<Bus> buses)
    : zones_(std::move(zones)), nodes_(std::move(nodes)), links_(std::move(links)), buses_(std::move(buses)) {
    std::set<std::string, std::less<>> zone_set;
    for (const auto& z : zones_) {
        if (z.empty()) throw Error(ErrorCode::MalformedRecord, "zones", "empty zone label");
        if (!zone_set.insert(z).second) throw Error(ErrorCode::MalformedRecord, z, "duplicate zone");
    }

    std::uint32_t edge_ordinal = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        auto& n = nodes_[i];
        if (n.name.empty()) throw Error(ErrorCode::MalformedRecord, "nodes", "empty node name");
        if (!node_index_.emplace(n.name, i).second) throw Error(ErrorCode::DuplicateNode, n.name);
        if (n.kind == NodeKind::Gateway) {
            if (!zone_set.contains(n.zone)) throw Error(ErrorCode::MalformedRecord, n.name, "unknown zone " + n.zone);
            if (!zone_gateway_.emplace(n.zone, n.name).second)
                throw Error(ErrorCode::MalformedRecord, n.name, "zone " + n.zone + " already has a gateway");
        }
        if (n.kind == NodeKind::Switch) continue;
        ++edge_ordinal;
        if (n.mac == MacAddr{})
            n.mac = MacAddr{{0x02, 0x00, 0x00, 0x00, static_cast<std::uint8_t>(edge_ordinal >> 8),
                             static_cast<std::uint8_t>(edge_ordinal)}};
        if (n.ip == Ipv4Addr{})
            n.ip = Ipv4Addr::from_octets(10, 0, static_cast<std::uint8_t>(edge_ordinal >> 8),
                                         static_cast<std::uint8_t>(edge_ordinal));
        if (n.mac.is_multicast()) throw Error(ErrorCode::MalformedRecord, n.name, "node MAC must be unicast");
        if (n.ip.is_multicast()) throw Error(ErrorCode::MalformedRecord, n.name, "node IP must be unicast");
    }
    for (const auto& z : zones_)
        if (!zone_gateway_.contains(z)) throw Error(ErrorCode::MalformedRecord, z, "zone has no gateway");

    std::set<MacAddr> macs;
    std::set<Ipv4Addr> ips;
    for (const auto& n : nodes_) {
        if (n.kind == NodeKind::Switch) continue;
        if (!macs.insert(n.mac).second) throw Error(ErrorCode::DuplicateAddress, n.name, n.mac.to_string());
        if (!ips.insert(n.ip).second) throw Error(ErrorCode::DuplicateAddress, n.name, n.ip.to_string());
    }

    // Explicit ports first, then fill the gaps.
    std::map<std::string, std::set<int>, std::less<>> used;
    for (const auto& l : links_) {
        for (const auto* end : {&l.a, &l.b})
            if (!node_index_.contains(*end)) throw Error(ErrorCode::UnknownNode, *end, "referenced by link");
        if (l.a == l.b) throw Error(ErrorCode::MalformedRecord, l.a, "self link");
        if (node(l.a).kind != NodeKind::Switch && node(l.b).kind != NodeKind::Switch)
            throw Error(ErrorCode::MalformedRecord, l.a + "-" + l.b, "links must attach a switch");
        if (l.a_port < 0 || l.b_port < 0) throw Error(ErrorCode::MalformedRecord, l.a + "-" + l.b, "negative port");
        if (l.a_port > 0 && !used[l.a].insert(l.a_port).second)
            throw Error(ErrorCode::DuplicatePort, l.a, std::to_string(l.a_port));
        if (l.b_port > 0 && !used[l.b].insert(l.b_port).second)
            throw Error(ErrorCode::DuplicatePort, l.b, std::to_string(l.b_port));
    }
    auto next_free = [&](const std::string& n) {
        auto& s = used[n];
        int p = 1;
        while (s.contains(p)) ++p;
        s.insert(p);
        return p;
    };
    for (auto& l : links_) {
        if (l.a_port == 0) l.a_port = next_free(l.a);
        if (l.b_port == 0) l.b_port = next_free(l.b);
        ports_[l.a].push_back({l.a_port, l.b, l.b_port});
        ports_[l.b].push_back({l.b_port, l.a, l.a_port});
    }
    for (auto& [name, list] : ports_)
        std::sort(list.begin(), list.end(), [](const PortPeer& x, const PortPeer& y) {
            return std::tie(x.peer, x.port) < std::tie(y.peer, y.port);
        });

    std::set<std::pair<std::string, std::string>> bus_keys;
    for (const auto& b : buses_) {
        if (!zone_set.contains(b.zone))
            throw Error(ErrorCode::UnattachedEcu, b.ecus.empty() ? b.name : b.ecus.front(),
                        "bus " + b.name + " names unknown zone " + b.zone);
        if (b.name.empty()) throw Error(ErrorCode::MalformedRecord, b.zone, "empty bus label");
        if (!bus_keys.emplace(b.zone, b.name).second)
            throw Error(ErrorCode::MalformedRecord, b.zone + "/" + b.name, "duplicate bus");
        for (const auto& ecu : b.ecus) {
            if (ecu.empty()) throw Error(ErrorCode::MalformedRecord, b.name, "empty ECU name");
            if (node_index_.contains(ecu) && node(ecu).kind == NodeKind::Host)
                throw Error(ErrorCode::DuplicateEcu, ecu, "name taken by an Ethernet host");
            if (!attachments_.emplace(ecu, Attachment{zone_gateway_.at(b.zone), b.zone, b.name}).second)
                throw Error(ErrorCode::DuplicateEcu, ecu, "attached to more than one bus");
        }
    }
    for (const auto& n : nodes_)
        if (n.kind == NodeKind::Host) attachments_.emplace(n.name, Attachment{n.name, n.name, ""});

    if (!nodes_.empty()) {
        std::set<std::string, std::less<>> seen{nodes_.front().name};
        std::deque<std::string> queue{nodes_.front().name};
        while (!queue.empty()) {
            auto cur = queue.front();
            queue.pop_front();
            for (const auto& p : ports(cur))
                if (seen.insert(p.peer).second) queue.push_back(p.peer);
        }
        for (const auto& n : nodes_)
            if (!seen.contains(n.name)) throw Error(ErrorCode::DisconnectedGraph, n.name);
    }
}

const Node* Topology::find_node(std::string_view name) const {
    auto it = node_index_.find(name);
    return it == node_index_.end() ? nullptr : &nodes_[it->second];
}

const Node& Topology::node(std::string_view name) const {
    const auto* n = find_node(name);
    if (!n) throw Error(ErrorCode::UnknownNode, std::string(name));
    return *n;
}

std::vector<std::string> Topology::edge_nodes() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
        if (n.kind != NodeKind::Switch) out.push_back(n.name);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Topology::switches() const {
    std::vector<std::string> out;
    for (const auto& n : nodes_)
        if (n.kind == NodeKind::Switch) out.push_back(n.name);
    std::sort(out.begin(), out.end());
    return out;
}

const std::string& Topology::gateway_of_zone(std::string_view zone) const {
    auto it = zone_gateway_.find(zone);
    if (it == zone_gateway_.end()) throw Error(ErrorCode::UnknownNode, std::string(zone), "no gateway for zone");
    return it->second;
}

std::vector<std::string> Topology::buses_of(std::string_view node_name) const {
    const auto& n = node(node_name);
    std::vector<std::string> out;
    if (n.kind != NodeKind::Gateway) return out;
    for (const auto& b : buses_)
        if (b.zone == n.zone) out.push_back(b.name);
    std::sort(out.begin(), out.end());
    return out;
}

const std::vector<std::string>& Topology::ecus_on(std::string_view node_name, std::string_view bus) const {
    static const std::vector<std::string> none;
    const auto& n = node(node_name);
    if (n.kind != NodeKind::Gateway) return none;
    for (const auto& b : buses_)
        if (b.zone == n.zone && b.name == bus) return b.ecus;
    return none;
}

std::optional<Attachment> Topology::attachment(std::string_view ecu) const {
    auto it = attachments_.find(ecu);
    if (it == attachments_.end()) return std::nullopt;
    return it->second;
}

const std::vector<PortPeer>& Topology::ports(std::string_view node_name) const {
    static const std::vector<PortPeer> none;
    auto it = ports_.find(node_name);
    return it == ports_.end() ? none : it->second;
}

const PortPeer* Topology::port(std::string_view node_name, int port_no) const {
    for (const auto& p : ports(node_name))
        if (p.port == port_no) return &p;
    return nullptr;
}

// --- JSON -----------------------------------------------------------------

namespace {

Node edge_node_from_json(const json& j, NodeKind kind) {
    Node n;
    n.kind = kind;
    if (j.is_string()) {
        n.name = j.get<std::string>();
        return n;
    }
    n.name = j.at("name").get<std::string>();
    if (kind == NodeKind::Gateway) n.zone = j.at("zone").get<std::string>();
    if (auto it = j.find("mac"); it != j.end()) n.mac = MacAddr::parse(it->get<std::string>());
    if (auto it = j.find("ip"); it != j.end()) n.ip = Ipv4Addr::parse(it->get<std::string>());
    return n;
}

}  // namespace

Topology parse_topology(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& ex) {
        throw Error(ErrorCode::MalformedRecord, "offset " + std::to_string(ex.byte), ex.what());
    }
    try {
        std::vector<std::string> zones = doc.value("zones", std::vector<std::string>{});
        std::vector<Node> nodes;
        for (const auto& g : doc.value("gateways", json::array())) nodes.push_back(edge_node_from_json(g, NodeKind::Gateway));
        for (const auto& h : doc.value("eth_hosts", json::array())) nodes.push_back(edge_node_from_json(h, NodeKind::Host));
        for (const auto& s : doc.value("switches", json::array()))
            nodes.push_back(Node{s.is_string() ? s.get<std::string>() : s.at("name").get<std::string>(),
                                 NodeKind::Switch, {}, {}, {}});
        std::vector<Link> links;
        for (const auto& l : doc.value("links", json::array()))
            links.push_back(Link{l.at("a").get<std::string>(), l.value("a_port", 0), l.at("b").get<std::string>(),
                                 l.value("b_port", 0)});
        std::vector<Topology::Bus> buses;
        for (const auto& b : doc.value("buses", json::array()))
            buses.push_back(Topology::Bus{b.at("zone").get<std::string>(), b.at("bus").get<std::string>(),
                                          b.value("ecus", std::vector<std::string>{})});
        return Topology(std::move(zones), std::move(nodes), std::move(links), std::move(buses));
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::MalformedRecord, "topology", ex.what());
    }
}

std::string serialize_topology(const Topology& topo) {
    ordered_json doc;
    doc["zones"] = topo.zones();
    doc["gateways"] = ordered_json::array();
    doc["eth_hosts"] = ordered_json::array();
    doc["switches"] = ordered_json::array();
    for (const auto& n : topo.nodes()) {
        if (n.kind == NodeKind::Switch) {
            doc["switches"].push_back(n.name);
            continue;
        }
        ordered_json j;
        j["name"] = n.name;
        if (n.kind == NodeKind::Gateway) j["zone"] = n.zone;
        j["mac"] = n.mac.to_string();
        j["ip"] = n.ip.to_string();
        doc[n.kind == NodeKind::Gateway ? "gateways" : "eth_hosts"].push_back(std::move(j));
    }
    doc["links"] = ordered_json::array();
    for (const auto& l : topo.links()) {
        ordered_json j;
        j["a"] = l.a;
        j["a_port"] = l.a_port;
        j["b"] = l.b;
        j["b_port"] = l.b_port;
        doc["links"].push_back(std::move(j));
    }
    doc["buses"] = ordered_json::array();
    for (const auto& b : topo.buses()) {
        ordered_json j;
        j["zone"] = b.zone;
        j["bus"] = b.name;
        j["ecus"] = b.ecus;
        doc["buses"].push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

// --- placement --------------------------------------------------------------

std::vector<CanId> Placement::backbone() const {
    std::vector<CanId> out;
    for (const auto& [id, is_local] : local)
        if (!is_local) out.push_back(id);
    return out;
}

Placement place(const CommMatrix& matrix, const Topology& topo) {
    for (const auto& [name, ecu] : matrix.ecus()) {
        auto at = topo.attachment(name);
        if (!at) throw Error(ErrorCode::UnknownEcu, name);
        if ((!ecu.zone.empty() && ecu.zone != at->zone) || (!ecu.bus.empty() && ecu.bus != at->bus))
            throw Error(ErrorCode::EcuPlacementMismatch, name,
                        "matrix says " + ecu.zone + "/" + ecu.bus + ", topology says " + at->zone + "/" + at->bus);
    }

    Placement p;
    for (const auto& cf : matrix.flows()) {
        const auto src = topo.attachment(cf.sender)->node;
        std::set<std::string> dests;
        for (const auto& r : cf.receivers) {
            auto node = topo.attachment(r)->node;
            if (node != src) dests.insert(std::move(node));
        }
        p.local[cf.can_id] = dests.empty();
        p.source_gateway[cf.can_id] = src;
        p.dest_gateways[cf.can_id] = std::move(dests);
    }
    return p;
}

// --- paths ------------------------------------------------------------------

MulticastTree forwarding_path(const Topology& topo, std::string_view from, const std::set<std::string>& to) {
    const auto& root = topo.node(from);
    for (const auto& d : to) topo.node(d);

    std::map<std::string, int, std::less<>> dist{{root.name, 0}};
    std::deque<std::string> queue{root.name};
    while (!queue.empty()) {
        auto cur = queue.front();
        queue.pop_front();
        if (cur != root.name && topo.node(cur).kind != NodeKind::Switch) continue;
        for (const auto& p : topo.ports(cur))
            if (dist.emplace(p.peer, dist[cur] + 1).second) queue.push_back(p.peer);
    }

    // Predecessor choice depends on the node only, so paths to different
    // destinations merge into one tree.
    struct Parent {
        std::string name;
        int parent_port = 0;
        int child_port = 0;
    };
    auto parent_of = [&](const std::string& n) {
        const int d = dist.at(n);
        for (const auto& p : topo.ports(n)) {  // sorted by peer name, then port
            auto it = dist.find(p.peer);
            if (it == dist.end() || it->second != d - 1) continue;
            if (p.peer != root.name && topo.node(p.peer).kind != NodeKind::Switch) continue;
            return Parent{p.peer, p.peer_port, p.port};
        }
        throw Error(ErrorCode::UnreachableNode, n);
    };

    MulticastTree tree;
    tree.root = root.name;
    std::map<std::string, TreeHop> hops;
    for (const auto& d : to) {
        if (d == root.name) continue;
        if (!dist.contains(d)) throw Error(ErrorCode::UnreachableNode, d, "from " + root.name);
        tree.leaves.insert(d);
        std::string cur = d;
        while (cur != root.name) {
            auto parent = parent_of(cur);
            if (topo.node(cur).kind == NodeKind::Switch) {
                auto& hop = hops[cur];
                hop.switch_name = cur;
                hop.in_port = parent.child_port;
            }
            if (parent.name != root.name) {
                auto& hop = hops[parent.name];
                hop.switch_name = parent.name;
                hop.out_ports.insert(parent.parent_port);
            }
            cur = parent.name;
        }
    }
    for (auto& [name, hop] : hops) tree.hops.push_back(std::move(hop));
    return tree;
}

}  // namespace flowsep
