#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "flowsep/matrix.hpp"
#include "flowsep/net.hpp"

namespace flowsep {

enum class NodeKind { Gateway, Host, Switch };

struct Node {
    std::string name;
    NodeKind kind = NodeKind::Switch;
    std::string zone;  // gateways only
    MacAddr mac;       // gateways and hosts
    Ipv4Addr ip;       // gateways and hosts
};

struct Link {
    std::string a;
    int a_port = 0;
    std::string b;
    int b_port = 0;
};

/// A port of a node and what is plugged into it.
struct PortPeer {
    int port = 0;
    std::string peer;
    int peer_port = 0;
};

/// Where an ECU lives. Ethernet hosts are their own ECU and have no bus.
struct Attachment {
    std::string node;
    std::string zone;
    std::string bus;
};

/// Zone topology: zone controllers with their CAN buses, Ethernet-native
/// hosts, and the switches that form the SDN backbone. Immutable once built.
class Topology {
public:
    struct Bus {
        std::string zone;
        std::string name;
        std::vector<std::string> ecus;
    };

    Topology() = default;

    /// Validates and indexes. Nodes with an unset (all-zero) address and links
    /// with port 0 get deterministic assignments in declaration order.
    Topology(std::vector<std::string> zones, std::vector<Node> nodes, std::vector<Link> links, std::vector<Bus> buses);

    const std::vector<std::string>& zones() const { return zones_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<Bus>& buses() const { return buses_; }

    const Node* find_node(std::string_view name) const;
    const Node& node(std::string_view name) const;

    /// Gateways and hosts, sorted by name: the endpoints of network flows.
    std::vector<std::string> edge_nodes() const;
    std::vector<std::string> switches() const;
    const std::string& gateway_of_zone(std::string_view zone) const;

    /// Bus names hosted by an edge node, sorted. Hosts have none.
    std::vector<std::string> buses_of(std::string_view node) const;
    /// ECUs on one bus of an edge node.
    const std::vector<std::string>& ecus_on(std::string_view node, std::string_view bus) const;

    std::optional<Attachment> attachment(std::string_view ecu) const;

    /// Ports of a node ordered by peer name, then by local port.
    const std::vector<PortPeer>& ports(std::string_view node) const;
    const PortPeer* port(std::string_view node, int port) const;

private:
    std::vector<std::string> zones_;
    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<Bus> buses_;
    std::map<std::string, std::size_t, std::less<>> node_index_;
    std::map<std::string, std::string, std::less<>> zone_gateway_;
    std::map<std::string, Attachment, std::less<>> attachments_;
    std::map<std::string, std::vector<PortPeer>, std::less<>> ports_;
};

Topology parse_topology(std::string_view text);
std::string serialize_topology(const Topology& topo);

/// Where each flow enters and leaves the backbone.
struct Placement {
    std::map<CanId, std::string> source_gateway;
    std::map<CanId, std::set<std::string>> dest_gateways;
    std::map<CanId, bool> local;

    /// Flows that traverse the backbone, ascending by CAN id.
    std::vector<CanId> backbone() const;
};

Placement place(const CommMatrix& matrix, const Topology& topo);

struct TreeHop {
    std::string switch_name;
    int in_port = 0;
    std::set<int> out_ports;

    bool operator==(const TreeHop&) const = default;
};

/// Multicast distribution tree: one hop entry per traversed switch, sorted by
/// switch name.
struct MulticastTree {
    std::string root;
    std::set<std::string> leaves;
    std::vector<TreeHop> hops;
};

/// Shortest-path (hop count) tree from `from` to every destination. Only
/// switches forward; ties pick the lexicographically smallest predecessor.
MulticastTree forwarding_path(const Topology& topo, std::string_view from, const std::set<std::string>& to);

}  // namespace flowsep
